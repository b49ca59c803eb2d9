#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "iqp/errors.hpp"
#include "iqp/matrix.hpp"
#include "iqp/resample.hpp"
#include "iqp/rng.hpp"
#include "iqp/tract.hpp"

namespace iqp {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Numerically stable mean logistic loss given additive-model margins.
inline double logistic_loss(const std::vector<double>& margins, const std::vector<int>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = margins[i];
    total += std::log1p(std::exp(-std::abs(m))) + std::max(m, 0.0) - y[i] * m;
  }
  return total / static_cast<double>(y.size());
}

struct Hyperparameters {
  int max_depth = 6;
  double learning_rate = 0.3;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  int n_estimators = 100;
  double lambda = 1.0;  // L2 leaf penalty, fixed at the cited system's default
};

struct SearchSpace {
  int max_depth_lo = 3, max_depth_hi = 10;
  double eta_lo = 0.01, eta_hi = 0.3;  // sampled log-uniformly
  double gamma_lo = 0.0, gamma_hi = 5.0;
  int min_child_weight_lo = 1, min_child_weight_hi = 10;
  int n_estimators_lo = 50, n_estimators_hi = 500;
};

inline Hyperparameters sample_hyperparameters(const SearchSpace& s, Rng& rng) {
  Hyperparameters hp;
  hp.max_depth = static_cast<int>(rng.uniform_int(s.max_depth_lo, s.max_depth_hi));
  hp.learning_rate = s.eta_lo == s.eta_hi ? s.eta_lo : rng.log_uniform(s.eta_lo, s.eta_hi);
  hp.gamma = rng.uniform(s.gamma_lo, s.gamma_hi);
  hp.min_child_weight =
      static_cast<double>(rng.uniform_int(s.min_child_weight_lo, s.min_child_weight_hi));
  hp.n_estimators = static_cast<int>(rng.uniform_int(s.n_estimators_lo, s.n_estimators_hi));
  return hp;
}

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;   // leaf contribution, learning rate already applied
  double cover = 0.0;   // training instances that reached the node
  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0

  double route(std::span<const double> x) const {
    int n = 0;
    while (!nodes[n].is_leaf())
      n = x[nodes[n].feature] < nodes[n].threshold ? nodes[n].left : nodes[n].right;
    return nodes[n].value;
  }
};

struct TreeEnsemble {
  std::vector<Tree> trees;
  double base_score = 0.0;  // prior log-odds
  Hyperparameters hp;
  std::vector<std::string> feature_names;
};

namespace detail {

inline void require_finite(const DataMatrix& X) {
  for (double v : X.data())
    if (!std::isfinite(v)) throw NaNFeatureError("non-finite feature value");
}

// Split-search scratch for one frontier node during level-wise growth.
struct NodeBuild {
  int node = -1;  // index into Tree::nodes
  double G = 0.0, H = 0.0;
  std::size_t count = 0;
  int best_feature = -1;
  double best_threshold = 0.0;
  double best_gain = 0.0;
  double best_GL = 0.0, best_HL = 0.0;
  std::size_t best_countL = 0;
  // per-feature scan state
  double GL = 0.0, HL = 0.0;
  std::size_t countL = 0;
  double prev_value = 0.0;
  bool has_prev = false;
};

}  // namespace detail

// One boosting round: grows a depth-limited regression tree on the current
// gradients/hessians with exact greedy splits. Every feature is scanned in
// globally presorted order; each frontier node accumulates its own left-side
// statistics during the scan, so a whole level costs O(features x rows).
inline Tree grow_tree(const DataMatrix& X, const std::vector<double>& g,
                      const std::vector<double>& h,
                      const std::vector<std::vector<std::size_t>>& sorted_idx,
                      const Hyperparameters& hp, std::vector<int>& node_of) {
  const std::size_t n = X.rows();
  const double lambda = hp.lambda;
  Tree tree;
  tree.nodes.emplace_back();

  std::vector<detail::NodeBuild> frontier(1);
  frontier[0].node = 0;
  for (std::size_t i = 0; i < n; ++i) {
    frontier[0].G += g[i];
    frontier[0].H += h[i];
  }
  frontier[0].count = n;
  std::fill(node_of.begin(), node_of.end(), 0);

  // slot_of[node] = index into frontier, or -1 once the node is finalized.
  std::vector<int> slot_of(1, 0);

  for (int level = 0; level <= hp.max_depth && !frontier.empty(); ++level) {
    if (level < hp.max_depth) {
      for (std::size_t f = 0; f < X.cols(); ++f) {
        for (auto& nb : frontier) {
          nb.GL = nb.HL = 0.0;
          nb.countL = 0;
          nb.has_prev = false;
        }
        for (std::size_t i : sorted_idx[f]) {
          const int slot = slot_of[node_of[i]];
          if (slot < 0) continue;
          auto& nb = frontier[slot];
          const double v = X.at(i, f);
          if (nb.has_prev && v > nb.prev_value) {
            const double GR = nb.G - nb.GL;
            const double HR = nb.H - nb.HL;
            if (nb.HL >= hp.min_child_weight && HR >= hp.min_child_weight) {
              const double gain =
                  0.5 * (nb.GL * nb.GL / (nb.HL + lambda) + GR * GR / (HR + lambda) -
                         nb.G * nb.G / (nb.H + lambda)) -
                  hp.gamma;
              if (gain > nb.best_gain) {
                nb.best_gain = gain;
                nb.best_feature = static_cast<int>(f);
                nb.best_threshold = 0.5 * (nb.prev_value + v);
                nb.best_GL = nb.GL;
                nb.best_HL = nb.HL;
                nb.best_countL = nb.countL;
              }
            }
          }
          nb.GL += g[i];
          nb.HL += h[i];
          nb.countL += 1;
          nb.prev_value = v;
          nb.has_prev = true;
        }
      }
    }

    // Materialize the level: accepted splits spawn children, the rest leaf out.
    std::vector<detail::NodeBuild> next;
    for (auto& nb : frontier) {
      TreeNode& node = tree.nodes[nb.node];
      node.cover = static_cast<double>(nb.count);
      slot_of[nb.node] = -1;
      if (nb.best_feature < 0) {
        node.value = -hp.learning_rate * nb.G / (nb.H + lambda);
        continue;
      }
      const int left_id = static_cast<int>(tree.nodes.size());
      node.feature = nb.best_feature;
      node.threshold = nb.best_threshold;
      node.left = left_id;
      node.right = left_id + 1;
      // emplace_back may reallocate and invalidate `node`; only indices are
      // used from here on.
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      slot_of.resize(tree.nodes.size(), -1);

      detail::NodeBuild left, right;
      left.node = left_id;
      left.G = nb.best_GL;
      left.H = nb.best_HL;
      left.count = nb.best_countL;
      right.node = left_id + 1;
      right.G = nb.G - nb.best_GL;
      right.H = nb.H - nb.best_HL;
      right.count = nb.count - nb.best_countL;
      slot_of[left_id] = static_cast<int>(next.size());
      next.push_back(left);
      slot_of[left_id + 1] = static_cast<int>(next.size());
      next.push_back(right);
    }
    if (next.empty()) break;

    for (std::size_t i = 0; i < n; ++i) {
      const TreeNode& node = tree.nodes[node_of[i]];
      if (!node.is_leaf())
        node_of[i] = X.at(i, node.feature) < node.threshold ? node.left : node.right;
    }
    frontier = std::move(next);
  }
  return tree;
}

// Newton boosting on logistic loss: g = p - y, h = p(1 - p) per round.
// Deterministic: exact greedy splits with ties resolved toward the lowest
// feature index, then the lowest threshold (the scan visits candidates in
// exactly that order and keeps the first maximum). If round_losses is given
// it receives the mean training loss before boosting and after every round.
inline TreeEnsemble train(const DataMatrix& X, const std::vector<int>& y,
                          const Hyperparameters& hp,
                          std::optional<double> base_score_override = std::nullopt,
                          std::vector<double>* round_losses = nullptr) {
  const std::size_t n = X.rows();
  if (n < 2) throw TooFewRowsError("train: needs >= 2 rows");
  if (y.size() != n) throw LengthMismatchError("train: X rows != label count");
  detail::require_finite(X);

  std::size_t pos = 0;
  for (int v : y) pos += (v == 1);
  TreeEnsemble model;
  model.hp = hp;
  for (auto name : kFeatureNames) model.feature_names.emplace_back(name);
  if (base_score_override) {
    model.base_score = *base_score_override;
  } else {
    if (pos == 0 || pos == n)
      throw SingleClassTrainingError("train: labels are single-class");
    model.base_score = std::log(static_cast<double>(pos) / static_cast<double>(n - pos));
  }

  std::vector<std::vector<std::size_t>> sorted_idx(X.cols());
  for (std::size_t f = 0; f < X.cols(); ++f) {
    sorted_idx[f].resize(n);
    std::iota(sorted_idx[f].begin(), sorted_idx[f].end(), std::size_t{0});
    std::stable_sort(sorted_idx[f].begin(), sorted_idx[f].end(),
                     [&](std::size_t a, std::size_t b) { return X.at(a, f) < X.at(b, f); });
  }

  std::vector<double> margins(n, model.base_score);
  std::vector<double> g(n), h(n);
  std::vector<int> node_of(n);
  if (round_losses) round_losses->push_back(logistic_loss(margins, y));

  model.trees.reserve(hp.n_estimators);
  for (int round = 0; round < hp.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margins[i]);
      g[i] = p - y[i];
      h[i] = p * (1.0 - p);
    }
    Tree tree = grow_tree(X, g, h, sorted_idx, hp, node_of);
    for (std::size_t i = 0; i < n; ++i) margins[i] += tree.nodes[node_of[i]].value;
    model.trees.push_back(std::move(tree));
    if (round_losses) round_losses->push_back(logistic_loss(margins, y));
  }
  return model;
}

inline double predict_margin(const TreeEnsemble& model, std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw NaNFeatureError("non-finite feature value");
  double margin = model.base_score;
  for (const Tree& t : model.trees) margin += t.route(x);
  return margin;
}

inline double predict_proba(const TreeEnsemble& model, std::span<const double> x) {
  return sigmoid(predict_margin(model, x));
}

inline int classify(const TreeEnsemble& model, std::span<const double> x) {
  return predict_proba(model, x) >= 0.5 ? 1 : 0;
}

inline std::vector<int> classify_rows(const TreeEnsemble& model, const DataMatrix& X) {
  std::vector<int> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = classify(model, X.row(r));
  return out;
}

// F1 on class 1; the empty-denominator case is defined as 0.
inline double f1(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  if (y_true.size() != y_pred.size())
    throw LengthMismatchError("f1: prediction/label lengths differ");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_pred[i] == 1 && y_true[i] == 1) ++tp;
    if (y_pred[i] == 1 && y_true[i] != 1) ++fp;
    if (y_pred[i] != 1 && y_true[i] == 1) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

struct TrainTestSplit {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
};

// Stratified shuffle split; each class contributes round(ratio * count) rows
// to the training side. Index lists come back sorted.
inline TrainTestSplit split_train_test(std::size_t n_rows, const std::vector<int>& y,
                                       double ratio, std::uint64_t seed) {
  if (n_rows != y.size()) throw LengthMismatchError("split_train_test: label count");
  if (n_rows < 5) throw TooFewRowsError("split_train_test: needs >= 5 rows");
  std::vector<std::size_t> idx0, idx1;
  for (std::size_t i = 0; i < n_rows; ++i) (y[i] == 1 ? idx1 : idx0).push_back(i);
  if (idx0.empty() || idx1.empty())
    throw SingleClassError("split_train_test: both classes required");

  Rng rng(seed);
  TrainTestSplit split;
  for (auto* cls : {&idx0, &idx1}) {
    rng.shuffle(*cls);
    auto n_train = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(cls->size())));
    n_train = std::clamp<std::size_t>(n_train, 1, cls->size());
    for (std::size_t i = 0; i < cls->size(); ++i)
      (i < n_train ? split.train_idx : split.test_idx).push_back((*cls)[i]);
  }
  std::sort(split.train_idx.begin(), split.train_idx.end());
  std::sort(split.test_idx.begin(), split.test_idx.end());
  return split;
}

// Stratified k-fold CV returning mean test F1. SMOTE balancing (when on)
// happens inside each fold's training part only.
inline double cross_validate(const DataMatrix& X, const std::vector<int>& y,
                             const Hyperparameters& hp, int folds, std::uint64_t seed,
                             bool smote = true) {
  if (folds < 2) throw ConfigError("cross_validate: folds must be >= 2");
  std::vector<std::size_t> idx0, idx1;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? idx1 : idx0).push_back(i);
  if (std::min(idx0.size(), idx1.size()) < static_cast<std::size_t>(folds))
    throw TooFewPerClassError("cross_validate: every class needs >= folds rows");

  Rng rng(seed);
  rng.shuffle(idx0);
  rng.shuffle(idx1);
  std::vector<int> fold_of(y.size());
  for (std::size_t i = 0; i < idx0.size(); ++i) fold_of[idx0[i]] = static_cast<int>(i % folds);
  for (std::size_t i = 0; i < idx1.size(); ++i) fold_of[idx1[i]] = static_cast<int>(i % folds);

  double total = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < y.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
    DataMatrix Xtr = X.take_rows(tr);
    std::vector<int> ytr;
    ytr.reserve(tr.size());
    for (std::size_t i : tr) ytr.push_back(y[i]);

    TreeEnsemble model;
    const std::uint64_t fold_seed = splitmix64(seed ^ (0xf01d5ull + f));
    if (smote) {
      BalancedSet bal = balance_training(Xtr, ytr, fold_seed);
      model = train(bal.X, bal.y, hp);
    } else {
      model = train(Xtr, ytr, hp);
    }

    std::vector<int> y_true, y_pred;
    y_true.reserve(te.size());
    y_pred.reserve(te.size());
    for (std::size_t i : te) {
      y_true.push_back(y[i]);
      y_pred.push_back(classify(model, X.row(i)));
    }
    total += f1(y_true, y_pred);
  }
  return total / folds;
}

struct SearchResult {
  Hyperparameters best;
  double cv_f1 = 0.0;
  std::size_t best_index = 0;  // which draw won (earliest on ties)
};

// Uniform random search over the space, scored by k-fold CV F1. All draws
// share one fold assignment so configurations are compared on equal footing.
inline SearchResult random_search(const DataMatrix& X, const std::vector<int>& y,
                                  const SearchSpace& space, int n_iter,
                                  std::uint64_t seed, int folds = 10, bool smote = true) {
  if (n_iter < 1) throw ConfigError("random_search: n_iter must be >= 1");
  Rng rng(seed);
  std::vector<Hyperparameters> draws;
  draws.reserve(n_iter);
  for (int i = 0; i < n_iter; ++i) draws.push_back(sample_hyperparameters(space, rng));

  const std::uint64_t cv_seed = splitmix64(seed ^ 0xc40de5eedull);
  SearchResult result;
  result.cv_f1 = -1.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double score = cross_validate(X, y, draws[i], folds, cv_seed, smote);
    if (score > result.cv_f1) {
      result.cv_f1 = score;
      result.best = draws[i];
      result.best_index = i;
    }
  }
  return result;
}

}  // namespace iqp
