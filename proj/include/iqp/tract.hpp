#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "iqp/csv.hpp"
#include "iqp/errors.hpp"
#include "iqp/matrix.hpp"

namespace iqp {

// Column order of every feature matrix in the pipeline. Downstream weights,
// thresholds, and SHAP columns all index into this list.
inline constexpr std::array<std::string_view, 6> kFeatureNames = {
    "road_pct",    "rail_pct",    "house_age_pct",
    "park_pct",    "walkability", "poi_density"};

inline constexpr std::size_t kFeatureCount = kFeatureNames.size();

struct TractRecord {
  std::string geoid;
  std::string city;
  double road_pct = 0.0;        // [0,100]
  double rail_pct = 0.0;        // [0,100]
  double house_age_pct = 0.0;   // [0,100]
  double park_pct = 0.0;        // [0,100]
  double walkability = 1.0;     // [1,20]
  double poi_density = 0.0;     // >= 0
  double heat_days = 0.0;       // >= 0
  double pm25_days = 0.0;       // >= 0
  std::optional<double> median_income;  // >= 0 when present

  double feature(std::size_t f) const {
    switch (f) {
      case 0: return road_pct;
      case 1: return rail_pct;
      case 2: return house_age_pct;
      case 3: return park_pct;
      case 4: return walkability;
      case 5: return poi_density;
      default: throw UnknownFeatureError("feature index " + std::to_string(f));
    }
  }

  bool operator==(const TractRecord&) const = default;
};

struct FeatureMatrix {
  std::vector<std::string> geoids;
  DataMatrix values;  // rows parallel to geoids, columns per kFeatureNames
};

namespace detail {

inline double parse_cell(const CsvTable& table, std::size_t row, std::size_t col) {
  const std::string& cell = table.rows[row][col];
  double v;
  if (!try_parse_double(cell, v))
    throw NonNumericCellError(row + 1, table.header[col], cell);
  return v;
}

inline void check_range(const std::string& column, double v, double lo, double hi) {
  if (!std::isfinite(v) || v < lo || v > hi)
    throw OutOfRangeError(column, v,
                          "[" + format_double(lo) + "," + format_double(hi) + "]");
}

inline void check_min(const std::string& column, double v, double lo) {
  if (!std::isfinite(v) || v < lo)
    throw OutOfRangeError(column, v, ">= " + format_double(lo));
}

}  // namespace detail

inline constexpr std::array<std::string_view, 11> kTractColumns = {
    "geoid",       "city",        "road_pct",  "rail_pct",
    "house_age_pct", "park_pct",  "walkability", "poi_density",
    "heat_days",   "pm25_days",   "median_income"};

// Parses and validates the per-city table. A non-empty `city` keeps only
// rows whose city column matches; empty keeps everything.
inline std::vector<TractRecord> load_tracts_from(const CsvTable& table,
                                                 const std::string& city = "") {
  std::array<std::size_t, kTractColumns.size()> col{};
  for (std::size_t i = 0; i < kTractColumns.size(); ++i) {
    col[i] = table.find(kTractColumns[i]);
    if (col[i] == static_cast<std::size_t>(-1))
      throw MissingColumnError(std::string(kTractColumns[i]));
  }

  std::vector<TractRecord> out;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (!city.empty() && row[col[1]] != city) continue;

    TractRecord rec;
    rec.geoid = row[col[0]];
    rec.city = row[col[1]];
    rec.road_pct = detail::parse_cell(table, r, col[2]);
    rec.rail_pct = detail::parse_cell(table, r, col[3]);
    rec.house_age_pct = detail::parse_cell(table, r, col[4]);
    rec.park_pct = detail::parse_cell(table, r, col[5]);
    rec.walkability = detail::parse_cell(table, r, col[6]);
    rec.poi_density = detail::parse_cell(table, r, col[7]);
    rec.heat_days = detail::parse_cell(table, r, col[8]);
    rec.pm25_days = detail::parse_cell(table, r, col[9]);
    if (!row[col[10]].empty()) {
      rec.median_income = detail::parse_cell(table, r, col[10]);
      detail::check_min("median_income", *rec.median_income, 0.0);
    }

    detail::check_range("road_pct", rec.road_pct, 0.0, 100.0);
    detail::check_range("rail_pct", rec.rail_pct, 0.0, 100.0);
    detail::check_range("house_age_pct", rec.house_age_pct, 0.0, 100.0);
    detail::check_range("park_pct", rec.park_pct, 0.0, 100.0);
    detail::check_range("walkability", rec.walkability, 1.0, 20.0);
    detail::check_min("poi_density", rec.poi_density, 0.0);
    detail::check_min("heat_days", rec.heat_days, 0.0);
    detail::check_min("pm25_days", rec.pm25_days, 0.0);

    if (!seen.insert(rec.geoid).second) throw DuplicateGeoidError(rec.geoid);
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<TractRecord> load_tracts(const std::string& path,
                                            const std::string& city = "") {
  return load_tracts_from(read_csv_file(path), city);
}

inline CsvTable tracts_to_csv(const std::vector<TractRecord>& records) {
  CsvTable table;
  table.header.assign(kTractColumns.begin(), kTractColumns.end());
  for (const auto& rec : records) {
    table.rows.push_back({rec.geoid, rec.city, format_double(rec.road_pct),
                          format_double(rec.rail_pct), format_double(rec.house_age_pct),
                          format_double(rec.park_pct), format_double(rec.walkability),
                          format_double(rec.poi_density), format_double(rec.heat_days),
                          format_double(rec.pm25_days),
                          rec.median_income ? format_double(*rec.median_income) : ""});
  }
  return table;
}

inline void write_tracts(const std::string& path, const std::vector<TractRecord>& records) {
  write_csv_file(path, tracts_to_csv(records));
}

inline FeatureMatrix feature_matrix(const std::vector<TractRecord>& records) {
  if (records.empty()) throw EmptyInputError("feature_matrix: no records");
  FeatureMatrix m;
  m.geoids.reserve(records.size());
  m.values = DataMatrix(records.size(), kFeatureCount);
  for (std::size_t r = 0; r < records.size(); ++r) {
    m.geoids.push_back(records[r].geoid);
    for (std::size_t f = 0; f < kFeatureCount; ++f) m.values.at(r, f) = records[r].feature(f);
  }
  return m;
}

}  // namespace iqp
