#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "iqp/errors.hpp"
#include "iqp/matrix.hpp"
#include "iqp/rng.hpp"

namespace iqp {

struct Standardization {
  std::vector<double> mean;
  std::vector<double> sd;  // population sd; 0.0 marks a constant column
};

// Population z-scores per column. Constant columns map to all zeros with a
// warning instead of dividing by zero.
inline std::pair<DataMatrix, Standardization> standardize(
    const DataMatrix& m, std::vector<std::string>* warnings = nullptr) {
  if (m.rows() == 0) throw EmptyInputError("standardize: no rows");
  Standardization params;
  params.mean.resize(m.cols());
  params.sd.resize(m.cols());
  DataMatrix out(m.rows(), m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m.at(r, c);
    mean /= static_cast<double>(m.rows());
    double var = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const double d = m.at(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(m.rows());
    const double sd = std::sqrt(var);
    params.mean[c] = mean;
    params.sd[c] = sd;
    if (sd == 0.0) {
      if (warnings)
        warnings->push_back("standardize: column " + std::to_string(c) +
                            " is constant; mapped to zeros");
      for (std::size_t r = 0; r < m.rows(); ++r) out.at(r, c) = 0.0;
    } else {
      for (std::size_t r = 0; r < m.rows(); ++r) out.at(r, c) = (m.at(r, c) - mean) / sd;
    }
  }
  return {std::move(out), std::move(params)};
}

struct KmeansResult {
  std::vector<int> assignments;          // 0 or 1 per row
  std::array<std::vector<double>, 2> centroids;
  int iterations = 0;
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double sq_dist(std::span<const double> a, const std::vector<double>& b) {
  return sq_dist(a, std::span<const double>(b));
}

}  // namespace detail

// Two-cluster Lloyd iteration with k-means++ seeding. Deterministic given
// the seed; ties in assignment go to the lower cluster index.
inline KmeansResult kmeans_two(const DataMatrix& points, std::uint64_t seed) {
  const std::size_t n = points.rows();
  bool distinct = false;
  for (std::size_t r = 1; r < n && !distinct; ++r)
    distinct = detail::sq_dist(points.row(r), points.row(0)) > 0.0;
  if (n < 2 || !distinct)
    throw DegenerateDataError("kmeans_two: needs >= 2 distinct points");

  Rng rng(seed);
  KmeansResult res;
  auto& c = res.centroids;

  // k-means++: first center uniform, second proportional to squared distance.
  const std::size_t first = rng.index(n);
  c[0].assign(points.row(first).begin(), points.row(first).end());
  std::vector<double> d2(n);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    d2[r] = detail::sq_dist(points.row(r), c[0]);
    total += d2[r];
  }
  double pick = rng.uniform() * total;
  std::size_t second = n - 1;
  for (std::size_t r = 0; r < n; ++r) {
    pick -= d2[r];
    if (pick <= 0.0 && d2[r] > 0.0) {
      second = r;
      break;
    }
  }
  if (detail::sq_dist(points.row(second), c[0]) == 0.0) {
    for (std::size_t r = 0; r < n; ++r)
      if (d2[r] > 0.0) second = r;  // fall back to some distinct point
  }
  c[1].assign(points.row(second).begin(), points.row(second).end());

  res.assignments.assign(n, 0);
  for (int iter = 0; iter < 300; ++iter) {
    res.iterations = iter + 1;
    for (std::size_t r = 0; r < n; ++r) {
      const double da = detail::sq_dist(points.row(r), c[0]);
      const double db = detail::sq_dist(points.row(r), c[1]);
      res.assignments[r] = db < da ? 1 : 0;
    }
    // Keep both clusters populated: move the point farthest from its center
    // into an empty cluster.
    for (int k = 0; k < 2; ++k) {
      std::size_t count = 0;
      for (int a : res.assignments) count += (a == k);
      if (count == 0) {
        std::size_t worst = 0;
        double worst_d = -1.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double d = detail::sq_dist(points.row(r), c[res.assignments[r]]);
          if (d > worst_d) {
            worst_d = d;
            worst = r;
          }
        }
        res.assignments[worst] = k;
      }
    }
    std::array<std::vector<double>, 2> next = {
        std::vector<double>(points.cols(), 0.0),
        std::vector<double>(points.cols(), 0.0)};
    std::array<std::size_t, 2> counts = {0, 0};
    for (std::size_t r = 0; r < n; ++r) {
      const int k = res.assignments[r];
      ++counts[k];
      auto row = points.row(r);
      for (std::size_t j = 0; j < points.cols(); ++j) next[k][j] += row[j];
    }
    double moved = 0.0;
    for (int k = 0; k < 2; ++k) {
      for (std::size_t j = 0; j < points.cols(); ++j) {
        next[k][j] /= static_cast<double>(counts[k]);
        moved = std::max(moved, std::abs(next[k][j] - c[k][j]));
      }
    }
    c = std::move(next);
    if (moved < 1e-6) break;
  }
  // Final assignment against the converged centroids.
  for (std::size_t r = 0; r < n; ++r) {
    const double da = detail::sq_dist(points.row(r), c[0]);
    const double db = detail::sq_dist(points.row(r), c[1]);
    res.assignments[r] = db < da ? 1 : 0;
  }
  return res;
}

// Mean silhouette over all points: (b - a) / max(a, b) with the 0/0 -> 0
// convention; singleton-cluster points score 0.
inline double silhouette(const DataMatrix& points, const std::vector<int>& assignments) {
  const std::size_t n = points.rows();
  std::array<std::size_t, 2> counts = {0, 0};
  for (int a : assignments) ++counts[a];
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int mine = assignments[i];
    if (counts[mine] <= 1) continue;  // singleton scores 0
    double intra = 0.0, inter = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = std::sqrt(detail::sq_dist(points.row(i), points.row(j)));
      if (assignments[j] == mine)
        intra += d;
      else
        inter += d;
    }
    const double a = intra / static_cast<double>(counts[mine] - 1);
    const double b = inter / static_cast<double>(counts[1 - mine]);
    const double denom = std::max(a, b);
    total += denom == 0.0 ? 0.0 : (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

struct HazardLabeling {
  std::vector<int> labels;  // parallel to the input rows, 1 = high hazard
  std::array<std::vector<double>, 2> centroids;  // standardized space, [label 0, label 1]
  double silhouette = 0.0;
  Standardization params;
};

// Full labeling pipeline over the (heat_days, pm25_days) columns: z-score,
// cluster into two groups, and call the cluster with the larger standardized
// coordinate sum the high-hazard one.
inline HazardLabeling label_hazard(const DataMatrix& hazard, std::uint64_t seed,
                                   std::vector<std::string>* warnings = nullptr) {
  auto [z, params] = standardize(hazard, warnings);
  KmeansResult km = kmeans_two(z, seed);
  std::array<double, 2> sums = {0.0, 0.0};
  for (int k = 0; k < 2; ++k)
    for (double v : km.centroids[k]) sums[k] += v;
  const int high = sums[1] > sums[0] ? 1 : 0;

  HazardLabeling out;
  out.labels.resize(z.rows());
  for (std::size_t r = 0; r < z.rows(); ++r)
    out.labels[r] = km.assignments[r] == high ? 1 : 0;
  out.centroids[0] = km.centroids[1 - high];
  out.centroids[1] = km.centroids[high];
  out.silhouette = silhouette(z, km.assignments);
  out.params = std::move(params);
  return out;
}

}  // namespace iqp
