#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "iqp/errors.hpp"
#include "iqp/gbdt.hpp"
#include "iqp/matrix.hpp"

namespace iqp {

struct ShapResult {
  std::vector<double> phi;  // one attribution per feature, log-odds units
  double base_value = 0.0;  // cover-weighted expected margin of the ensemble
};

namespace detail {

// One step of the feature path maintained during tree traversal:
// d = feature, o = one-fraction (did x route through here), z = zero-fraction
// (cover proportion), w = accumulated subset weight.
struct PathElem {
  int d;
  double o;
  double z;
  double w;
};

inline void extend(std::vector<PathElem>& m, double p_z, double p_o, int p_i) {
  const int depth = static_cast<int>(m.size());
  m.push_back({p_i, p_o, p_z, depth == 0 ? 1.0 : 0.0});
  for (int i = depth - 1; i >= 0; --i) {
    m[i + 1].w += p_o * m[i].w * (i + 1) / static_cast<double>(depth + 1);
    m[i].w = p_z * m[i].w * (depth - i) / static_cast<double>(depth + 1);
  }
}

inline void unwind(std::vector<PathElem>& m, int i) {
  const int depth = static_cast<int>(m.size()) - 1;
  double n = m[depth].w;
  if (m[i].o != 0.0) {
    for (int j = depth - 1; j >= 0; --j) {
      const double tmp = m[j].w;
      m[j].w = n * (depth + 1) / static_cast<double>(j + 1);
      n = tmp - m[j].w * m[i].z * (depth - j) / static_cast<double>(depth + 1);
    }
  } else {
    for (int j = depth - 1; j >= 0; --j) {
      m[j].w = m[j].w * (depth + 1) / (m[i].z * (depth - j));
    }
  }
  for (int j = i; j < depth; ++j) {
    m[j].d = m[j + 1].d;
    m[j].z = m[j + 1].z;
    m[j].o = m[j + 1].o;
  }
  m.pop_back();
}

inline double unwound_sum(const std::vector<PathElem>& m, int i) {
  const int depth = static_cast<int>(m.size()) - 1;
  double total = 0.0;
  if (m[i].o != 0.0) {
    double n = m[depth].w;
    for (int j = depth - 1; j >= 0; --j) {
      const double tmp = n / static_cast<double>((j + 1) * m[i].o);
      total += tmp;
      n = m[j].w - tmp * m[i].z * (depth - j);
    }
  } else {
    for (int j = depth - 1; j >= 0; --j) {
      total += m[j].w / (m[i].z * (depth - j));
    }
  }
  return total * (depth + 1);
}

inline void shap_recurse(const Tree& tree, std::span<const double> x,
                         std::vector<double>& phi, std::vector<PathElem> m, int j,
                         double p_z, double p_o, int p_i) {
  extend(m, p_z, p_o, p_i);
  const TreeNode& node = tree.nodes[j];
  if (node.is_leaf()) {
    for (int i = 1; i < static_cast<int>(m.size()); ++i)
      phi[m[i].d] += unwound_sum(m, i) * (m[i].o - m[i].z) * node.value;
    return;
  }

  double i_z = 1.0, i_o = 1.0;
  for (int k = 1; k < static_cast<int>(m.size()); ++k) {
    if (m[k].d == node.feature) {
      i_z = m[k].z;
      i_o = m[k].o;
      unwind(m, k);
      break;
    }
  }

  const bool go_left = x[node.feature] < node.threshold;
  const int hot = go_left ? node.left : node.right;
  const int cold = go_left ? node.right : node.left;
  const double cover_j = node.cover;
  shap_recurse(tree, x, phi, m, hot, i_z * tree.nodes[hot].cover / cover_j, i_o,
               node.feature);
  shap_recurse(tree, x, phi, std::move(m), cold,
               i_z * tree.nodes[cold].cover / cover_j, 0.0, node.feature);
}

inline void require_covers(const TreeEnsemble& model) {
  for (const Tree& t : model.trees)
    for (const TreeNode& n : t.nodes)
      if (!(n.cover > 0.0))
        throw MissingCoverError("tree node lacks a positive cover statistic");
}

// Cover-weighted expectation of a tree's output.
inline double expected_value(const Tree& tree, int j) {
  const TreeNode& node = tree.nodes[j];
  if (node.is_leaf()) return node.value;
  return (tree.nodes[node.left].cover * expected_value(tree, node.left) +
          tree.nodes[node.right].cover * expected_value(tree, node.right)) /
         node.cover;
}

}  // namespace detail

inline double expected_margin(const TreeEnsemble& model) {
  double e = model.base_score;
  for (const Tree& t : model.trees) e += detail::expected_value(t, 0);
  return e;
}

// Exact path-dependent Shapley attribution: unknown features are averaged
// cover-proportionally at each split, known features follow their routing.
inline ShapResult tree_shap(const TreeEnsemble& model, std::span<const double> x,
                            std::size_t n_features = kFeatureCount) {
  detail::require_covers(model);
  ShapResult res;
  res.phi.assign(n_features, 0.0);
  for (const Tree& t : model.trees)
    detail::shap_recurse(t, x, res.phi, {}, 0, 1.0, 1.0, -1);
  res.base_value = expected_margin(model);
  return res;
}

namespace detail {

// E[tree | features in S fixed at x]: route on known features, average the
// rest by cover.
inline double cond_expect(const Tree& tree, int j, std::span<const double> x,
                          std::uint32_t mask) {
  const TreeNode& node = tree.nodes[j];
  if (node.is_leaf()) return node.value;
  if (mask & (1u << node.feature)) {
    const int next = x[node.feature] < node.threshold ? node.left : node.right;
    return cond_expect(tree, next, x, mask);
  }
  return (tree.nodes[node.left].cover * cond_expect(tree, node.left, x, mask) +
          tree.nodes[node.right].cover * cond_expect(tree, node.right, x, mask)) /
         node.cover;
}

}  // namespace detail

// Test oracle: the classical Shapley sum over all feature subsets with the
// same cover-based conditioning as tree_shap. Exponential in feature count.
inline ShapResult brute_shap(const TreeEnsemble& model, std::span<const double> x,
                             std::size_t n_features = kFeatureCount) {
  if (n_features > 15)
    throw TooManyFeaturesError("brute_shap: feature count exceeds 15");
  detail::require_covers(model);

  const std::uint32_t n_masks = 1u << n_features;
  std::vector<double> val(n_masks, 0.0);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask)
    for (const Tree& t : model.trees) val[mask] += detail::cond_expect(t, 0, x, mask);

  std::vector<double> fact(n_features + 1, 1.0);
  for (std::size_t i = 1; i <= n_features; ++i) fact[i] = fact[i - 1] * i;

  ShapResult res;
  res.phi.assign(n_features, 0.0);
  for (std::size_t i = 0; i < n_features; ++i) {
    const std::uint32_t bit = 1u << i;
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      const int s = std::popcount(mask);
      const double w = fact[s] * fact[n_features - s - 1] / fact[n_features];
      res.phi[i] += w * (val[mask | bit] - val[mask]);
    }
  }
  res.base_value = model.base_score + val[0];
  return res;
}

// Rows of the test set the model classifies correctly; the attribution set
// the downstream analysis runs on.
inline std::vector<std::size_t> select_analysis_set(const TreeEnsemble& model,
                                                    const DataMatrix& X_test,
                                                    const std::vector<int>& y_test) {
  if (X_test.rows() != y_test.size())
    throw LengthMismatchError("select_analysis_set: label count");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < X_test.rows(); ++i)
    if (classify(model, X_test.row(i)) == y_test[i]) keep.push_back(i);
  if (keep.empty())
    throw NoCorrectInstancesError("select_analysis_set: no correctly classified rows");
  return keep;
}

struct ShapMatrix {
  std::vector<std::string> geoids;  // per row
  DataMatrix phi;                   // instance x feature
  std::vector<double> margins;      // per row
  double base_value = 0.0;
  std::string tag;  // which instance set this covers, e.g. "test-correct"
};

inline ShapMatrix shap_matrix(const TreeEnsemble& model, const DataMatrix& X,
                              const std::vector<std::string>& geoids,
                              const std::string& tag) {
  ShapMatrix out;
  out.tag = tag;
  out.geoids = geoids;
  out.phi = DataMatrix(X.rows(), X.cols());
  out.margins.resize(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    ShapResult s = tree_shap(model, X.row(r), X.cols());
    for (std::size_t f = 0; f < X.cols(); ++f) out.phi.at(r, f) = s.phi[f];
    out.margins[r] = predict_margin(model, X.row(r));
    out.base_value = s.base_value;
  }
  return out;
}

// W_f = mean over instances of |phi_f|; feeds the softmax provision weights.
inline std::vector<double> global_importance(const ShapMatrix& shap) {
  if (shap.phi.rows() == 0) throw EmptyMatrixError("global_importance: empty matrix");
  std::vector<double> w(shap.phi.cols(), 0.0);
  for (std::size_t r = 0; r < shap.phi.rows(); ++r)
    for (std::size_t f = 0; f < shap.phi.cols(); ++f)
      w[f] += std::abs(shap.phi.at(r, f));
  for (double& v : w) v /= static_cast<double>(shap.phi.rows());
  return w;
}

struct DependenceSeries {
  std::size_t feature = 0;
  std::vector<double> x;    // feature values, ascending
  std::vector<double> phi;  // matching attributions
};

// (feature value, SHAP value) pairs sorted by feature value; ties keep
// instance order so the series is deterministic.
inline DependenceSeries dependence_series(const ShapMatrix& shap, const DataMatrix& X,
                                          std::size_t feature) {
  if (feature >= X.cols())
    throw UnknownFeatureError("dependence_series: feature index " +
                              std::to_string(feature));
  std::vector<std::size_t> order(X.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return X.at(a, feature) < X.at(b, feature);
  });
  DependenceSeries series;
  series.feature = feature;
  series.x.reserve(order.size());
  series.phi.reserve(order.size());
  for (std::size_t i : order) {
    series.x.push_back(X.at(i, feature));
    series.phi.push_back(shap.phi.at(i, feature));
  }
  return series;
}

}  // namespace iqp
