#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "iqp/errors.hpp"
#include "iqp/gbdt.hpp"

namespace iqp {

namespace detail {

inline nlohmann::json node_to_json(const Tree& tree, int idx) {
  const TreeNode& n = tree.nodes[idx];
  nlohmann::json j;
  j["cover"] = n.cover;
  if (n.is_leaf()) {
    j["leaf"] = n.value;
  } else {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = node_to_json(tree, n.left);
    j["right"] = node_to_json(tree, n.right);
  }
  return j;
}

inline int node_from_json(const nlohmann::json& j, Tree& tree) {
  const int idx = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes[idx].cover = j.at("cover").get<double>();
  if (j.contains("leaf")) {
    tree.nodes[idx].value = j.at("leaf").get<double>();
  } else {
    tree.nodes[idx].feature = j.at("feature").get<int>();
    tree.nodes[idx].threshold = j.at("threshold").get<double>();
    const int left = node_from_json(j.at("left"), tree);
    const int right = node_from_json(j.at("right"), tree);
    tree.nodes[idx].left = left;
    tree.nodes[idx].right = right;
  }
  return idx;
}

}  // namespace detail

inline nlohmann::json model_to_json(const TreeEnsemble& model) {
  nlohmann::json j;
  j["base_score"] = model.base_score;
  j["hyperparameters"] = {{"max_depth", model.hp.max_depth},
                          {"learning_rate", model.hp.learning_rate},
                          {"gamma", model.hp.gamma},
                          {"min_child_weight", model.hp.min_child_weight},
                          {"n_estimators", model.hp.n_estimators},
                          {"lambda", model.hp.lambda}};
  j["feature_names"] = model.feature_names;
  j["trees"] = nlohmann::json::array();
  for (const Tree& t : model.trees) j["trees"].push_back(detail::node_to_json(t, 0));
  return j;
}

inline TreeEnsemble model_from_json(const nlohmann::json& j) {
  TreeEnsemble model;
  model.base_score = j.at("base_score").get<double>();
  const auto& hp = j.at("hyperparameters");
  model.hp.max_depth = hp.at("max_depth").get<int>();
  model.hp.learning_rate = hp.at("learning_rate").get<double>();
  model.hp.gamma = hp.at("gamma").get<double>();
  model.hp.min_child_weight = hp.at("min_child_weight").get<double>();
  model.hp.n_estimators = hp.at("n_estimators").get<int>();
  model.hp.lambda = hp.at("lambda").get<double>();
  model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    detail::node_from_json(tj, tree);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

inline void save_model(const std::string& path, const TreeEnsemble& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

inline TreeEnsemble load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  try {
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    // covers both unparseable text and structurally wrong documents
    throw IoError("invalid model JSON in " + path + ": " + e.what());
  }
}

}  // namespace iqp
