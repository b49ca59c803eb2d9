#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "iqp/errors.hpp"
#include "iqp/matrix.hpp"

namespace iqp {

struct WeightVector {
  std::vector<double> raw;         // mean |SHAP| per feature
  std::vector<double> normalized;  // softmax of raw, sums to 1
};

// Softmax with max-subtraction so large raw weights cannot overflow.
inline WeightVector softmax_weights(const std::vector<double>& raw) {
  if (raw.empty()) throw EmptyInputError("softmax_weights: no weights");
  double hi = raw.front();
  for (double v : raw) {
    if (!std::isfinite(v)) throw NonFiniteInputError("softmax_weights: non-finite weight");
    hi = std::max(hi, v);
  }
  WeightVector w;
  w.raw = raw;
  w.normalized.reserve(raw.size());
  double total = 0.0;
  for (double v : raw) {
    const double e = std::exp(v - hi);
    w.normalized.push_back(e);
    total += e;
  }
  for (double& v : w.normalized) v /= total;
  return w;
}

struct ScalingParams {
  std::vector<double> min;
  std::vector<double> max;

  // Same affine map the column received; constant columns collapse to 0.
  double apply(std::size_t f, double v) const {
    const double range = max[f] - min[f];
    return range == 0.0 ? 0.0 : (v - min[f]) / range;
  }
};

// Per-column min-max scaling to [0,1]. Constant columns become all zeros
// with a warning; thresholds must be mapped with the returned params.
inline std::pair<DataMatrix, ScalingParams> feature_scale(
    const DataMatrix& m, std::vector<std::string>* warnings = nullptr) {
  if (m.rows() == 0) throw EmptyInputError("feature_scale: no rows");
  ScalingParams params;
  params.min.resize(m.cols());
  params.max.resize(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double lo = m.at(0, c), hi = m.at(0, c);
    for (std::size_t r = 1; r < m.rows(); ++r) {
      lo = std::min(lo, m.at(r, c));
      hi = std::max(hi, m.at(r, c));
    }
    params.min[c] = lo;
    params.max[c] = hi;
    if (lo == hi && warnings)
      warnings->push_back("feature_scale: column " + std::to_string(c) +
                          " is constant; scaled to zeros");
  }
  DataMatrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out.at(r, c) = params.apply(c, m.at(r, c));
  return {std::move(out), std::move(params)};
}

struct ProvisionScores {
  std::vector<double> raw_deviation;  // Y before normalization
  std::vector<double> score;          // 1 - minmax(Y), in [0,1]
};

// Weighted absolute deviation from the per-feature thresholds, min-max
// normalized across the city and flipped so 1 marks the best-provisioned
// tract. X and thresholds must live in the same space (scaled or raw).
inline ProvisionScores quality_provision(const DataMatrix& X,
                                         const std::vector<double>& thresholds,
                                         const std::vector<double>& weights,
                                         std::vector<std::string>* warnings = nullptr) {
  if (X.rows() == 0) throw EmptyInputError("quality_provision: no tracts");
  if (thresholds.size() != X.cols())
    throw MissingThresholdError("expected " + std::to_string(X.cols()) +
                                " thresholds, got " + std::to_string(thresholds.size()));
  if (weights.size() != X.cols())
    throw MissingWeightError("expected " + std::to_string(X.cols()) +
                             " weights, got " + std::to_string(weights.size()));
  for (double t : thresholds)
    if (!std::isfinite(t)) throw MissingThresholdError("non-finite threshold");
  for (double w : weights)
    if (!std::isfinite(w)) throw MissingWeightError("non-finite weight");

  ProvisionScores out;
  out.raw_deviation.resize(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double y = 0.0;
    for (std::size_t f = 0; f < X.cols(); ++f)
      y += weights[f] * std::abs(X.at(r, f) - thresholds[f]);
    out.raw_deviation[r] = y;
  }

  const auto [lo_it, hi_it] =
      std::minmax_element(out.raw_deviation.begin(), out.raw_deviation.end());
  const double lo = *lo_it, hi = *hi_it;
  out.score.resize(X.rows());
  if (hi == lo) {
    if (warnings)
      warnings->push_back(
          "quality_provision: all tracts share one deviation; scores set to 1");
    std::fill(out.score.begin(), out.score.end(), 1.0);
  } else {
    for (std::size_t r = 0; r < X.rows(); ++r)
      out.score[r] = 1.0 - (out.raw_deviation[r] - lo) / (hi - lo);
  }
  return out;
}

// Equal weights, thresholds at the per-city feature maxima: how much stuff a
// tract has rather than how close it sits to the optimum.
inline ProvisionScores quantity_provision(const DataMatrix& X,
                                          std::vector<std::string>* warnings = nullptr) {
  if (X.rows() == 0) throw EmptyInputError("quantity_provision: no tracts");
  std::vector<double> tmax(X.cols());
  for (std::size_t c = 0; c < X.cols(); ++c) {
    double hi = X.at(0, c);
    for (std::size_t r = 1; r < X.rows(); ++r) hi = std::max(hi, X.at(r, c));
    tmax[c] = hi;
  }
  const std::vector<double> weights(X.cols(), 1.0 / static_cast<double>(X.cols()));
  return quality_provision(X, tmax, weights, warnings);
}

}  // namespace iqp
