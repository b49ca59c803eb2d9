#pragma once

#include <stdexcept>
#include <string>

namespace iqp {

// Base class for every toolkit error. Subclasses exist so callers can
// distinguish failure modes without parsing messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration / CLI problems (exit code 1 in the CLI).
struct ConfigError final : Error {
  using Error::Error;
};

// Generic filesystem failure.
struct IoError final : Error {
  using Error::Error;
};

// ---- ingest -----------------------------------------------------------

struct MissingColumnError final : Error {
  explicit MissingColumnError(const std::string& column)
      : Error("missing required column: " + column), column(column) {}
  std::string column;
};

struct NonNumericCellError final : Error {
  NonNumericCellError(std::size_t row, const std::string& column,
                      const std::string& cell)
      : Error("non-numeric cell at row " + std::to_string(row) + ", column " +
              column + ": '" + cell + "'"),
        row(row),
        column(column) {}
  std::size_t row;
  std::string column;
};

struct DuplicateGeoidError final : Error {
  explicit DuplicateGeoidError(const std::string& geoid)
      : Error("duplicate geoid: " + geoid) {}
};

struct OutOfRangeError final : Error {
  OutOfRangeError(const std::string& column, double value,
                  const std::string& bound)
      : Error("value " + std::to_string(value) + " in column " + column +
              " violates bound " + bound) {}
  using Error::Error;
};

struct EmptyInputError final : Error {
  using Error::Error;
};

// ---- labeling ---------------------------------------------------------

struct DegenerateDataError final : Error {
  using Error::Error;
};

// ---- resample ---------------------------------------------------------

struct TooFewMinorityError final : Error {
  using Error::Error;
};

struct SingleClassError final : Error {
  using Error::Error;
};

// ---- gbdt -------------------------------------------------------------

struct SingleClassTrainingError final : Error {
  using Error::Error;
};

struct NaNFeatureError final : Error {
  using Error::Error;
};

struct LengthMismatchError final : Error {
  using Error::Error;
};

struct TooFewPerClassError final : Error {
  using Error::Error;
};

struct TooFewRowsError final : Error {
  using Error::Error;
};

// ---- shap -------------------------------------------------------------

struct MissingCoverError final : Error {
  using Error::Error;
};

struct TooManyFeaturesError final : Error {
  using Error::Error;
};

struct NoCorrectInstancesError final : Error {
  using Error::Error;
};

struct EmptyMatrixError final : Error {
  using Error::Error;
};

struct UnknownFeatureError final : Error {
  explicit UnknownFeatureError(const std::string& feature)
      : Error("unknown feature: " + feature) {}
};

// ---- lowess / thresholds ----------------------------------------------

struct TooFewPointsError final : Error {
  using Error::Error;
};

// ---- provision --------------------------------------------------------

struct NonFiniteInputError final : Error {
  using Error::Error;
};

struct MissingThresholdError final : Error {
  explicit MissingThresholdError(const std::string& feature)
      : Error("no threshold for feature: " + feature) {}
};

struct MissingWeightError final : Error {
  explicit MissingWeightError(const std::string& feature)
      : Error("no weight for feature: " + feature) {}
};

// ---- inequality -------------------------------------------------------

struct MeanOutOfRangeError final : Error {
  using Error::Error;
};

struct TooFewValuesError final : Error {
  using Error::Error;
};

struct EmptyGroupError final : Error {
  using Error::Error;
};

struct ZeroWorseMedianError final : Error {
  using Error::Error;
};

// ---- pipeline ---------------------------------------------------------

struct MissingUpstreamArtifactError final : Error {
  explicit MissingUpstreamArtifactError(const std::string& path)
      : Error("missing upstream artifact: " + path) {}
};

}  // namespace iqp
