#pragma once

#include <string>
#include <vector>

#include "iqp/errors.hpp"
#include "iqp/lowess.hpp"

namespace iqp {

enum class Pattern {
  CrossesUpward,
  Decreasing,
  AlwaysNegative,
  AlwaysPositive,
  Mixed,
};

inline const char* pattern_name(Pattern p) {
  switch (p) {
    case Pattern::CrossesUpward: return "crosses_upward";
    case Pattern::Decreasing: return "decreasing";
    case Pattern::AlwaysNegative: return "always_negative";
    case Pattern::AlwaysPositive: return "always_positive";
    case Pattern::Mixed: return "mixed";
  }
  return "unknown";
}

// x locations where the fitted curve passes from negative to non-negative,
// linearly interpolated between grid neighbors. An exact zero sits on the
// positive side.
inline std::vector<double> find_upward_crossings(const FittedCurve& curve) {
  std::vector<double> crossings;
  for (std::size_t i = 0; i + 1 < curve.grid.size(); ++i) {
    const double y0 = curve.fitted[i];
    const double y1 = curve.fitted[i + 1];
    if (y0 < 0.0 && y1 >= 0.0) {
      const double t = -y0 / (y1 - y0);
      crossings.push_back(curve.grid[i] + t * (curve.grid[i + 1] - curve.grid[i]));
    }
  }
  return crossings;
}

struct ThresholdEntry {
  Pattern pattern = Pattern::Mixed;
  double threshold = 0.0;  // in feature units
  std::vector<double> crossings;
  std::string note;
};

// Maps a fitted dependence curve to a hazard-contribution pattern and the
// optimal-quantity threshold. A single upward crossing ending positive means
// the crossing is the threshold; monotone-harmful features get the observed
// maximum (no better level exists in the data), always-helpful features get
// the minimum.
inline ThresholdEntry classify_and_threshold(const FittedCurve& curve,
                                             double feature_min, double feature_max,
                                             std::vector<std::string>* warnings = nullptr) {
  ThresholdEntry entry;
  entry.crossings = find_upward_crossings(curve);

  bool all_nonpos = true, all_nonneg = true;
  for (double v : curve.fitted) {
    all_nonpos = all_nonpos && v <= 0.0;
    all_nonneg = all_nonneg && v >= 0.0;
  }
  const double first = curve.fitted.front();
  const double last = curve.fitted.back();

  if (entry.crossings.size() == 1 && last >= 0.0) {
    entry.pattern = Pattern::CrossesUpward;
    entry.threshold = entry.crossings.front();
    entry.note = "single upward crossing";
  } else if (entry.crossings.empty() && all_nonpos) {
    entry.pattern = Pattern::AlwaysNegative;
    entry.threshold = feature_max;
    entry.note = "contribution never positive";
  } else if (entry.crossings.empty() && last < first && last < 0.0) {
    entry.pattern = Pattern::Decreasing;
    entry.threshold = feature_max;
    entry.note = "decreasing trend ending negative";
  } else if (entry.crossings.empty() && all_nonneg) {
    entry.pattern = Pattern::AlwaysPositive;
    entry.threshold = feature_min;
    entry.note = "contribution never negative";
  } else {
    entry.pattern = Pattern::Mixed;
    entry.threshold = entry.crossings.empty() ? feature_max : entry.crossings.front();
    entry.note = entry.crossings.size() > 1
                     ? "multiple upward crossings; first one used"
                     : "sign pattern fits no single-threshold rule";
    if (warnings)
      warnings->push_back("threshold classification fell back to mixed: " + entry.note);
  }
  return entry;
}

}  // namespace iqp
