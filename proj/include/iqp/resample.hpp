#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "iqp/errors.hpp"
#include "iqp/matrix.hpp"
#include "iqp/rng.hpp"

namespace iqp {

struct BalancedSet {
  DataMatrix X;
  std::vector<int> y;
  std::vector<char> synthetic;  // 1 for SMOTE rows, parallel to y
  std::size_t count0 = 0;
  std::size_t count1 = 0;
};

// Classic SMOTE interpolation: each synthetic row is x_i + u (x_nn - x_i)
// for a uniformly drawn u in [0,1] and x_nn one of x_i's k nearest minority
// neighbors (Euclidean, ties by lower row index).
inline DataMatrix smote_synthesize(const DataMatrix& minority, std::size_t k,
                                   std::size_t n_new, std::uint64_t seed) {
  const std::size_t n = minority.rows();
  if (n < 2) throw TooFewMinorityError("smote_synthesize: needs >= 2 minority rows");
  k = std::min(k, n - 1);
  if (k < 1) k = 1;

  // Neighbor lists up front; n is small enough for the quadratic scan.
  std::vector<std::vector<std::size_t>> neighbors(n);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < minority.cols(); ++c) {
        const double d = minority.at(i, c) - minority.at(j, c);
        s += d * d;
      }
      dist.emplace_back(s, j);
    }
    std::sort(dist.begin(), dist.end());
    neighbors[i].reserve(k);
    for (std::size_t j = 0; j < k; ++j) neighbors[i].push_back(dist[j].second);
  }

  Rng rng(seed);
  DataMatrix out(n_new, minority.cols());
  for (std::size_t s = 0; s < n_new; ++s) {
    const std::size_t i = rng.index(n);
    const std::size_t nn = neighbors[i][rng.index(neighbors[i].size())];
    const double u = rng.uniform();
    for (std::size_t c = 0; c < minority.cols(); ++c)
      out.at(s, c) = minority.at(i, c) + u * (minority.at(nn, c) - minority.at(i, c));
  }
  return out;
}

// Oversamples the minority class to parity with k = 5 neighbors. When
// undersample_first is set, the majority class is first randomly cut down to
// the minority count instead (no synthetic rows are needed then).
inline BalancedSet balance_training(const DataMatrix& X, const std::vector<int>& y,
                                    std::uint64_t seed, bool undersample_first = false,
                                    std::size_t k = 5) {
  if (X.rows() != y.size())
    throw LengthMismatchError("balance_training: X rows != label count");
  std::vector<std::size_t> idx0, idx1;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? idx1 : idx0).push_back(i);
  if (idx0.empty() || idx1.empty())
    throw SingleClassError("balance_training: both classes required");

  BalancedSet out;
  if (undersample_first && idx0.size() != idx1.size()) {
    auto& majority = idx0.size() > idx1.size() ? idx0 : idx1;
    const std::size_t target = std::min(idx0.size(), idx1.size());
    Rng rng(seed);
    rng.shuffle(majority);
    majority.resize(target);
    std::sort(majority.begin(), majority.end());
  }

  std::vector<std::size_t> keep;
  keep.reserve(idx0.size() + idx1.size());
  keep.insert(keep.end(), idx0.begin(), idx0.end());
  keep.insert(keep.end(), idx1.begin(), idx1.end());
  std::sort(keep.begin(), keep.end());
  out.X = X.take_rows(keep);
  out.y.reserve(keep.size());
  for (std::size_t i : keep) out.y.push_back(y[i]);
  out.synthetic.assign(keep.size(), 0);

  const std::size_t n0 = idx0.size(), n1 = idx1.size();
  if (n0 != n1) {
    const int minority_label = n1 < n0 ? 1 : 0;
    const auto& min_idx = minority_label == 1 ? idx1 : idx0;
    const std::size_t deficit = (n1 < n0 ? n0 - n1 : n1 - n0);
    DataMatrix minority = X.take_rows(min_idx);
    DataMatrix synth = smote_synthesize(minority, k, deficit, splitmix64(seed ^ 0x534d4f5445ull));
    for (std::size_t r = 0; r < synth.rows(); ++r) {
      out.X.append_row(synth.row(r));
      out.y.push_back(minority_label);
      out.synthetic.push_back(1);
    }
  }
  for (int v : out.y) (v == 1 ? out.count1 : out.count0)++;
  return out;
}

}  // namespace iqp
