#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "iqp/errors.hpp"
#include "iqp/stats.hpp"

namespace iqp {

// Coefficient-of-variation style index for scores in [0,1]: population sd
// normalized by the largest sd a distribution with the same mean could have.
inline double inequality_index(const std::vector<double>& values) {
  if (values.size() < 2) throw TooFewValuesError("inequality_index: needs >= 2 values");
  const double mu = mean(values);
  if (!(mu > 0.0 && mu < 1.0))
    throw MeanOutOfRangeError("inequality_index: mean " + std::to_string(mu) +
                              " outside (0,1)");
  return population_sd(values) / std::sqrt(mu * (1.0 - mu));
}

struct MedianSplit {
  std::vector<std::size_t> worse;   // value < median
  std::vector<std::size_t> better;  // value >= median
  double median_value = 0.0;
};

// Median split with ties going to the upper group. All-equal input leaves
// the worse side empty, which is reported rather than failed.
inline MedianSplit split_by_median(const std::vector<double>& values,
                                   std::vector<std::string>* warnings = nullptr) {
  if (values.size() < 2) throw TooFewValuesError("split_by_median: needs >= 2 values");
  MedianSplit split;
  split.median_value = median(values);
  for (std::size_t i = 0; i < values.size(); ++i)
    (values[i] >= split.median_value ? split.better : split.worse).push_back(i);
  if (split.worse.empty() && warnings)
    warnings->push_back("split_by_median: all values tie at the median; lower group empty");
  return split;
}

struct IncomeSplit {
  std::vector<std::size_t> low;   // indices into the original tract list
  std::vector<std::size_t> high;
  double median_value = 0.0;
  std::size_t dropped_missing = 0;
};

inline IncomeSplit split_by_income_median(
    const std::vector<std::optional<double>>& incomes,
    std::vector<std::string>* warnings = nullptr) {
  std::vector<std::size_t> present;
  std::vector<double> vals;
  for (std::size_t i = 0; i < incomes.size(); ++i) {
    if (incomes[i]) {
      present.push_back(i);
      vals.push_back(*incomes[i]);
    }
  }
  if (vals.size() < 2)
    throw TooFewValuesError("split_by_income_median: needs >= 2 tracts with income");
  MedianSplit inner = split_by_median(vals, warnings);
  IncomeSplit split;
  split.median_value = inner.median_value;
  split.dropped_missing = incomes.size() - present.size();
  for (std::size_t i : inner.worse) split.low.push_back(present[i]);
  for (std::size_t i : inner.better) split.high.push_back(present[i]);
  return split;
}

struct GroupIncomeGap {
  double better_median = 0.0;
  double worse_median = 0.0;
  double gap = 0.0;  // (better - worse) / worse
  std::size_t better_n = 0;
  std::size_t worse_n = 0;
  std::size_t dropped_missing = 0;
};

// Relative income gap between the better- and worse-provisioned halves.
inline GroupIncomeGap group_income_gap(const std::vector<double>& scores,
                                       const std::vector<std::optional<double>>& incomes,
                                       std::vector<std::string>* warnings = nullptr) {
  if (scores.size() != incomes.size())
    throw LengthMismatchError("group_income_gap: scores/incomes lengths differ");
  MedianSplit split = split_by_median(scores, warnings);
  std::vector<double> worse_inc, better_inc;
  std::size_t dropped = 0;
  for (std::size_t i : split.worse)
    incomes[i] ? worse_inc.push_back(*incomes[i]) : void(++dropped);
  for (std::size_t i : split.better)
    incomes[i] ? better_inc.push_back(*incomes[i]) : void(++dropped);
  if (worse_inc.empty() || better_inc.empty())
    throw EmptyGroupError("group_income_gap: a provision group has no incomes");

  GroupIncomeGap gap;
  gap.worse_median = median(worse_inc);
  gap.better_median = median(better_inc);
  gap.worse_n = worse_inc.size();
  gap.better_n = better_inc.size();
  gap.dropped_missing = dropped;
  if (gap.worse_median == 0.0)
    throw ZeroWorseMedianError("group_income_gap: worse group's median income is 0");
  gap.gap = (gap.better_median - gap.worse_median) / gap.worse_median;
  return gap;
}

struct Ecdf {
  std::vector<double> x;  // sorted distinct sample values
  std::vector<double> f;  // F(x) at each step, ending at 1

  double operator()(double q) const {
    const auto it = std::upper_bound(x.begin(), x.end(), q);
    if (it == x.begin()) return 0.0;
    return f[static_cast<std::size_t>(it - x.begin()) - 1];
  }
};

inline Ecdf ecdf(const std::vector<double>& values) {
  if (values.empty()) throw EmptyGroupError("ecdf: no values");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  Ecdf e;
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!e.x.empty() && e.x.back() == sorted[i]) {
      e.f.back() = static_cast<double>(i + 1) / n;
    } else {
      e.x.push_back(sorted[i]);
      e.f.push_back(static_cast<double>(i + 1) / n);
    }
  }
  return e;
}

// Exact area between two ECDFs over [0,1]: the integrand is piecewise
// constant, so sum |F_low - F_high| across the merged breakpoint grid.
inline double ecdf_area_gap(const std::vector<double>& low,
                            const std::vector<double>& high) {
  const Ecdf fl = ecdf(low);
  const Ecdf fh = ecdf(high);
  std::vector<double> grid;
  grid.reserve(fl.x.size() + fh.x.size() + 2);
  grid.push_back(0.0);
  grid.insert(grid.end(), fl.x.begin(), fl.x.end());
  grid.insert(grid.end(), fh.x.begin(), fh.x.end());
  grid.push_back(1.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double area = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    area += std::abs(fl(grid[i]) - fh(grid[i])) * (grid[i + 1] - grid[i]);
  return area;
}

// Five levels split at the 20/40/60/80th percentiles; a value tied with a
// boundary lands in the upper level. Degenerate all-equal input is level 1
// everywhere.
inline std::vector<int> quintile_bins(const std::vector<double>& values,
                                      std::vector<std::string>* warnings = nullptr) {
  if (values.size() < 5) throw TooFewValuesError("quintile_bins: needs >= 5 values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) {
    if (warnings)
      warnings->push_back("quintile_bins: all values equal; every tract in level 1");
    return std::vector<int>(values.size(), 1);
  }
  double bounds[4];
  for (int k = 0; k < 4; ++k) bounds[k] = percentile_linear(values, 20.0 * (k + 1));
  std::vector<int> levels(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i)
    for (double b : bounds)
      if (values[i] >= b) ++levels[i];
  return levels;
}

struct InequalityReport {
  double index = 0.0;
  GroupIncomeGap income_gap;
  std::size_t low_income_n = 0;
  std::size_t high_income_n = 0;
  double income_ecdf_gap = 0.0;  // provision-score ECDF area between income halves
  std::size_t dropped_missing_income = 0;
};

// Full per-city report: Eq. (5) on the quality scores, the income gap across
// provision halves, and the provision-distribution gap across income halves.
inline InequalityReport inequality_report(const std::vector<double>& quality,
                                          const std::vector<std::optional<double>>& incomes,
                                          std::vector<std::string>* warnings = nullptr) {
  InequalityReport report;
  report.index = inequality_index(quality);
  report.income_gap = group_income_gap(quality, incomes, warnings);

  IncomeSplit split = split_by_income_median(incomes, warnings);
  std::vector<double> low_scores, high_scores;
  for (std::size_t i : split.low) low_scores.push_back(quality[i]);
  for (std::size_t i : split.high) high_scores.push_back(quality[i]);
  if (low_scores.empty() || high_scores.empty())
    throw EmptyGroupError("inequality_report: an income group is empty");
  report.low_income_n = low_scores.size();
  report.high_income_n = high_scores.size();
  report.income_ecdf_gap = ecdf_area_gap(low_scores, high_scores);
  report.dropped_missing_income = split.dropped_missing;
  return report;
}

}  // namespace iqp
