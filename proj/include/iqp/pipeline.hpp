#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "iqp/csv.hpp"
#include "iqp/errors.hpp"
#include "iqp/gbdt.hpp"
#include "iqp/inequality.hpp"
#include "iqp/labeling.hpp"
#include "iqp/lowess.hpp"
#include "iqp/model_json.hpp"
#include "iqp/provision.hpp"
#include "iqp/resample.hpp"
#include "iqp/rng.hpp"
#include "iqp/shap.hpp"
#include "iqp/thresholds.hpp"
#include "iqp/tract.hpp"

namespace iqp {

struct CityInput {
  std::string name;
  std::string csv_path;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::vector<CityInput> cities;
  bool smote = true;
  bool scaled_units = true;  // Eq. (1) deviations on min-max scaled features
  double lowess_frac = 0.6;
  int robust_iters = 1;
  int bootstrap_b = 200;
  double split_ratio = 0.8;
  int search_iters = 50;
  int cv_folds = 10;
  SearchSpace space;
  int jobs = 1;
};

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["cities"] = nlohmann::json::array();
  for (const auto& city : c.cities)
    j["cities"].push_back({{"name", city.name}, {"csv", city.csv_path}});
  j["smote"] = c.smote;
  j["scaled_units"] = c.scaled_units;
  j["lowess_frac"] = c.lowess_frac;
  j["robust_iters"] = c.robust_iters;
  j["bootstrap_b"] = c.bootstrap_b;
  j["split_ratio"] = c.split_ratio;
  j["search"] = {{"n_iter", c.search_iters},
                 {"folds", c.cv_folds},
                 {"max_depth", {c.space.max_depth_lo, c.space.max_depth_hi}},
                 {"learning_rate", {c.space.eta_lo, c.space.eta_hi}},
                 {"gamma", {c.space.gamma_lo, c.space.gamma_hi}},
                 {"min_child_weight",
                  {c.space.min_child_weight_lo, c.space.min_child_weight_hi}},
                 {"n_estimators", {c.space.n_estimators_lo, c.space.n_estimators_hi}}};
  j["jobs"] = c.jobs;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (!j.contains("seed")) throw ConfigError("config: missing required field 'seed'");
    c.seed = j.at("seed").get<std::uint64_t>();
    if (!j.contains("cities") || !j.at("cities").is_array() || j.at("cities").empty())
      throw ConfigError("config: 'cities' must be a non-empty array");
    for (const auto& cj : j.at("cities"))
      c.cities.push_back({cj.at("name").get<std::string>(), cj.at("csv").get<std::string>()});
    c.out_dir = j.value("out_dir", c.out_dir);
    c.smote = j.value("smote", c.smote);
    c.scaled_units = j.value("scaled_units", c.scaled_units);
    c.lowess_frac = j.value("lowess_frac", c.lowess_frac);
    c.robust_iters = j.value("robust_iters", c.robust_iters);
    c.bootstrap_b = j.value("bootstrap_b", c.bootstrap_b);
    c.split_ratio = j.value("split_ratio", c.split_ratio);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("search")) {
      const auto& s = j.at("search");
      c.search_iters = s.value("n_iter", c.search_iters);
      c.cv_folds = s.value("folds", c.cv_folds);
      auto range = [&](const char* key, auto& lo, auto& hi) {
        if (s.contains(key)) {
          lo = s.at(key).at(0);
          hi = s.at(key).at(1);
        }
      };
      range("max_depth", c.space.max_depth_lo, c.space.max_depth_hi);
      range("learning_rate", c.space.eta_lo, c.space.eta_hi);
      range("gamma", c.space.gamma_lo, c.space.gamma_hi);
      range("min_child_weight", c.space.min_child_weight_lo, c.space.min_child_weight_hi);
      range("n_estimators", c.space.n_estimators_lo, c.space.n_estimators_hi);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: malformed JSON value: ") + e.what());
  }
  return c;
}

inline void validate_config(const RunConfig& c) {
  if (c.cities.empty()) throw ConfigError("config: no cities");
  for (const auto& city : c.cities) {
    if (city.name.empty()) throw ConfigError("config: city with empty name");
    if (!std::filesystem::exists(city.csv_path))
      throw ConfigError("config: input CSV not found: " + city.csv_path);
  }
  if (!(c.lowess_frac > 0.0 && c.lowess_frac <= 1.0))
    throw ConfigError("config: lowess_frac must be in (0,1]");
  if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0))
    throw ConfigError("config: split_ratio must be in (0,1)");
  if (c.cv_folds < 2) throw ConfigError("config: folds must be >= 2");
  if (c.search_iters < 1) throw ConfigError("config: n_iter must be >= 1");
  if (c.bootstrap_b < 2) throw ConfigError("config: bootstrap_b must be >= 2");
  if (c.robust_iters < 0) throw ConfigError("config: robust_iters must be >= 0");
  if (c.jobs < 1) throw ConfigError("config: jobs must be >= 1");
  const auto& s = c.space;
  if (s.max_depth_lo < 1 || s.max_depth_lo > s.max_depth_hi ||
      !(s.eta_lo > 0.0 && s.eta_lo <= s.eta_hi && s.eta_hi <= 1.0) ||
      s.gamma_lo < 0.0 || s.gamma_lo > s.gamma_hi || s.min_child_weight_lo < 0 ||
      s.min_child_weight_lo > s.min_child_weight_hi || s.n_estimators_lo < 1 ||
      s.n_estimators_lo > s.n_estimators_hi)
    throw ConfigError("config: invalid search space bounds");
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
  }
  RunConfig c = config_from_json(j);
  validate_config(c);
  return c;
}

inline std::string artifact_path(const RunConfig& c, const std::string& city,
                                 const std::string& name) {
  return (std::filesystem::path(c.out_dir) / (city + "_" + name)).string();
}

inline void require_artifact(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingUpstreamArtifactError(path);
}

struct StageResult {
  std::string city;
  std::string stage;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  std::vector<std::string> warnings;
  double duration_ms = 0.0;
};

// ---- label ------------------------------------------------------------

inline StageResult stage_label(const RunConfig& config, const CityInput& city) {
  StageResult result{city.name, "label", derive_seed(config.seed, "label", city.name)};
  const auto records = load_tracts(city.csv_path, city.name);
  if (records.empty())
    throw EmptyInputError("no rows for city '" + city.name + "' in " + city.csv_path);

  DataMatrix hazard(records.size(), 2);
  for (std::size_t r = 0; r < records.size(); ++r) {
    hazard.at(r, 0) = records[r].heat_days;
    hazard.at(r, 1) = records[r].pm25_days;
  }
  const HazardLabeling labeling = label_hazard(hazard, result.seed, &result.warnings);

  CsvTable out;
  out.header = {"geoid", "label", "silhouette"};
  for (std::size_t r = 0; r < records.size(); ++r)
    out.rows.push_back({records[r].geoid, std::to_string(labeling.labels[r]),
                        format_double(labeling.silhouette)});
  const std::string path = artifact_path(config, city.name, "labels.csv");
  write_csv_file(path, out);
  result.artifacts.push_back(path);
  return result;
}

namespace detail {

inline std::vector<int> join_labels(const RunConfig& config, const std::string& city,
                                    const std::vector<TractRecord>& records) {
  const std::string path = artifact_path(config, city, "labels.csv");
  require_artifact(path);
  const CsvTable table = read_csv_file(path);
  const std::size_t gc = table.find("geoid"), lc = table.find("label");
  if (gc == static_cast<std::size_t>(-1) || lc == static_cast<std::size_t>(-1))
    throw IoError("labels file " + path + " lacks geoid/label columns");
  std::map<std::string, int> by_geoid;
  for (const auto& row : table.rows) by_geoid[row[gc]] = std::stoi(row[lc]);
  std::vector<int> labels;
  labels.reserve(records.size());
  for (const auto& rec : records) {
    const auto it = by_geoid.find(rec.geoid);
    if (it == by_geoid.end())
      throw IoError("labels file " + path + " missing geoid " + rec.geoid);
    labels.push_back(it->second);
  }
  return labels;
}

}  // namespace detail

// ---- train ------------------------------------------------------------

inline StageResult stage_train(const RunConfig& config, const CityInput& city) {
  StageResult result{city.name, "train", derive_seed(config.seed, "train", city.name)};
  const auto records = load_tracts(city.csv_path, city.name);
  const FeatureMatrix fm = feature_matrix(records);
  const std::vector<int> y = detail::join_labels(config, city.name, records);

  const std::uint64_t split_seed = derive_seed(config.seed, "split", city.name);
  const std::uint64_t search_seed = derive_seed(config.seed, "search", city.name);
  const std::uint64_t smote_seed = derive_seed(config.seed, "smote", city.name);

  const TrainTestSplit split =
      split_train_test(fm.values.rows(), y, config.split_ratio, split_seed);
  DataMatrix X_train = fm.values.take_rows(split.train_idx);
  std::vector<int> y_train;
  for (std::size_t i : split.train_idx) y_train.push_back(y[i]);

  const SearchResult search = random_search(X_train, y_train, config.space,
                                            config.search_iters, search_seed,
                                            config.cv_folds, config.smote);

  TreeEnsemble model;
  std::size_t n_synthetic = 0;
  if (config.smote) {
    const BalancedSet bal = balance_training(X_train, y_train, smote_seed);
    n_synthetic = bal.y.size() - y_train.size();
    model = train(bal.X, bal.y, search.best);
  } else {
    model = train(X_train, y_train, search.best);
  }

  std::vector<int> y_test_true, y_test_pred;
  for (std::size_t i : split.test_idx) {
    y_test_true.push_back(y[i]);
    y_test_pred.push_back(classify(model, fm.values.row(i)));
  }
  const double test_f1 = f1(y_test_true, y_test_pred);

  const std::string model_path = artifact_path(config, city.name, "model.json");
  save_model(model_path, model);

  nlohmann::json metrics;
  metrics["city"] = city.name;
  metrics["cv_f1"] = search.cv_f1;
  metrics["test_f1"] = test_f1;
  metrics["search_best_index"] = search.best_index;
  metrics["hyperparameters"] = {{"max_depth", search.best.max_depth},
                                {"learning_rate", search.best.learning_rate},
                                {"gamma", search.best.gamma},
                                {"min_child_weight", search.best.min_child_weight},
                                {"n_estimators", search.best.n_estimators},
                                {"lambda", search.best.lambda}};
  metrics["n_train"] = split.train_idx.size();
  metrics["n_test"] = split.test_idx.size();
  metrics["n_synthetic"] = n_synthetic;
  metrics["test_geoids"] = nlohmann::json::array();
  for (std::size_t i : split.test_idx) metrics["test_geoids"].push_back(fm.geoids[i]);

  const std::string metrics_path = artifact_path(config, city.name, "metrics.json");
  {
    std::ofstream out(metrics_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + metrics_path);
    out << metrics.dump(2) << '\n';
  }
  result.artifacts = {model_path, metrics_path};
  return result;
}

// ---- explain ----------------------------------------------------------

inline StageResult stage_explain(const RunConfig& config, const CityInput& city) {
  StageResult result{city.name, "explain", derive_seed(config.seed, "explain", city.name)};
  const std::string model_path = artifact_path(config, city.name, "model.json");
  const std::string metrics_path = artifact_path(config, city.name, "metrics.json");
  require_artifact(model_path);
  require_artifact(metrics_path);

  const TreeEnsemble model = load_model(model_path);
  nlohmann::json metrics;
  {
    std::ifstream in(metrics_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + metrics_path);
    in >> metrics;
  }

  const auto records = load_tracts(city.csv_path, city.name);
  const FeatureMatrix fm = feature_matrix(records);
  const std::vector<int> y = detail::join_labels(config, city.name, records);
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < fm.geoids.size(); ++i) row_of[fm.geoids[i]] = i;

  std::vector<std::size_t> test_rows;
  for (const auto& g : metrics.at("test_geoids")) {
    const auto it = row_of.find(g.get<std::string>());
    if (it == row_of.end())
      throw IoError("metrics test geoid not present in " + city.csv_path);
    test_rows.push_back(it->second);
  }
  DataMatrix X_test = fm.values.take_rows(test_rows);
  std::vector<int> y_test;
  for (std::size_t i : test_rows) y_test.push_back(y[i]);

  const std::vector<std::size_t> correct = select_analysis_set(model, X_test, y_test);
  std::vector<std::size_t> analysis_rows;
  std::vector<std::string> analysis_geoids;
  for (std::size_t i : correct) {
    analysis_rows.push_back(test_rows[i]);
    analysis_geoids.push_back(fm.geoids[test_rows[i]]);
  }
  const DataMatrix X_analysis = fm.values.take_rows(analysis_rows);
  const ShapMatrix sm = shap_matrix(model, X_analysis, analysis_geoids, "test-correct");

  for (std::size_t r = 0; r < sm.phi.rows(); ++r) {
    double total = sm.base_value;
    for (std::size_t f = 0; f < sm.phi.cols(); ++f) total += sm.phi.at(r, f);
    if (std::abs(total - sm.margins[r]) > 1e-6)
      throw Error("shap local accuracy violated for geoid " + sm.geoids[r]);
  }

  CsvTable out;
  out.header = {"geoid"};
  for (auto name : kFeatureNames) out.header.push_back("phi_" + std::string(name));
  out.header.push_back("base_value");
  out.header.push_back("margin");
  for (std::size_t r = 0; r < sm.phi.rows(); ++r) {
    std::vector<std::string> row{sm.geoids[r]};
    for (std::size_t f = 0; f < sm.phi.cols(); ++f)
      row.push_back(format_double(sm.phi.at(r, f)));
    row.push_back(format_double(sm.base_value));
    row.push_back(format_double(sm.margins[r]));
    out.rows.push_back(std::move(row));
  }
  const std::string path = artifact_path(config, city.name, "shap.csv");
  write_csv_file(path, out);
  result.artifacts.push_back(path);
  return result;
}

namespace detail {

struct ShapArtifact {
  std::vector<std::string> geoids;
  DataMatrix phi;
  double base_value = 0.0;
};

inline ShapArtifact load_shap(const RunConfig& config, const std::string& city) {
  const std::string path = artifact_path(config, city, "shap.csv");
  require_artifact(path);
  const CsvTable table = read_csv_file(path);
  ShapArtifact art;
  art.phi = DataMatrix(table.rows.size(), kFeatureCount);
  const std::size_t gc = table.find("geoid");
  const std::size_t bc = table.find("base_value");
  std::vector<std::size_t> pc(kFeatureCount);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    pc[f] = table.find("phi_" + std::string(kFeatureNames[f]));
    if (pc[f] == static_cast<std::size_t>(-1))
      throw IoError("shap file " + path + " lacks phi_" + std::string(kFeatureNames[f]));
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    art.geoids.push_back(table.rows[r][gc]);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      double v;
      if (!try_parse_double(table.rows[r][pc[f]], v))
        throw IoError("shap file " + path + " has non-numeric phi");
      art.phi.at(r, f) = v;
    }
    if (bc != static_cast<std::size_t>(-1)) try_parse_double(table.rows[r][bc], art.base_value);
  }
  return art;
}

}  // namespace detail

// ---- thresholds ---------------------------------------------------------

inline StageResult stage_thresholds(const RunConfig& config, const CityInput& city) {
  StageResult result{city.name, "thresholds",
                     derive_seed(config.seed, "thresholds", city.name)};
  const detail::ShapArtifact art = detail::load_shap(config, city.name);
  const auto records = load_tracts(city.csv_path, city.name);
  const FeatureMatrix fm = feature_matrix(records);
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < fm.geoids.size(); ++i) row_of[fm.geoids[i]] = i;

  DataMatrix X_analysis(art.geoids.size(), kFeatureCount);
  for (std::size_t r = 0; r < art.geoids.size(); ++r) {
    const auto it = row_of.find(art.geoids[r]);
    if (it == row_of.end())
      throw IoError("shap geoid " + art.geoids[r] + " not present in " + city.csv_path);
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      X_analysis.at(r, f) = fm.values.at(it->second, f);
  }
  ShapMatrix sm;
  sm.geoids = art.geoids;
  sm.phi = art.phi;
  sm.base_value = art.base_value;

  CsvTable threshold_table;
  threshold_table.header = {"city",      "feature",      "pattern",
                            "threshold", "n_crossings",  "band_coverage_note"};
  CsvTable dependence_table;
  dependence_table.header = {"feature", "x", "shap", "fitted", "band_lo", "band_hi"};

  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const std::string fname(kFeatureNames[f]);
    const DependenceSeries series = dependence_series(sm, X_analysis, f);
    const std::uint64_t band_seed =
        derive_seed(config.seed, "thresholds." + fname, city.name);
    const FittedCurve curve =
        bootstrap_band(series.x, series.phi, config.lowess_frac, config.robust_iters,
                       config.bootstrap_b, 0.95, band_seed);
    const ThresholdEntry entry = classify_and_threshold(
        curve, series.x.front(), series.x.back(), &result.warnings);

    // Does the 95% band still straddle zero where the threshold sits?
    std::size_t gi = 0;
    while (gi + 1 < curve.grid.size() && curve.grid[gi + 1] <= entry.threshold) ++gi;
    const bool straddles = curve.band_lo[gi] <= 0.0 && curve.band_hi[gi] >= 0.0;
    std::string note = entry.note;
    note += straddles ? "; band straddles zero at threshold"
                      : "; band clear of zero at threshold";

    threshold_table.rows.push_back({city.name, fname, pattern_name(entry.pattern),
                                    format_double(entry.threshold),
                                    std::to_string(entry.crossings.size()), note});

    std::size_t g = 0;
    for (std::size_t i = 0; i < series.x.size(); ++i) {
      while (g + 1 < curve.grid.size() && curve.grid[g] < series.x[i]) ++g;
      dependence_table.rows.push_back(
          {fname, format_double(series.x[i]), format_double(series.phi[i]),
           format_double(curve.fitted[g]), format_double(curve.band_lo[g]),
           format_double(curve.band_hi[g])});
    }
  }

  const std::string tpath = artifact_path(config, city.name, "thresholds.csv");
  const std::string dpath = artifact_path(config, city.name, "dependence.csv");
  write_csv_file(tpath, threshold_table);
  write_csv_file(dpath, dependence_table);
  result.artifacts = {tpath, dpath};
  return result;
}

// ---- provision ----------------------------------------------------------

inline StageResult stage_provision(const RunConfig& config, const CityInput& city) {
  StageResult result{city.name, "provision",
                     derive_seed(config.seed, "provision", city.name)};
  const std::string tpath = artifact_path(config, city.name, "thresholds.csv");
  require_artifact(tpath);
  const detail::ShapArtifact art = detail::load_shap(config, city.name);

  ShapMatrix sm;
  sm.geoids = art.geoids;
  sm.phi = art.phi;
  const WeightVector weights = softmax_weights(global_importance(sm));

  const CsvTable ttable = read_csv_file(tpath);
  const std::size_t fc = ttable.find("feature"), vc = ttable.find("threshold");
  if (fc == static_cast<std::size_t>(-1) || vc == static_cast<std::size_t>(-1))
    throw IoError("thresholds file " + tpath + " lacks feature/threshold columns");
  std::vector<double> thresholds(kFeatureCount,
                                 std::numeric_limits<double>::quiet_NaN());
  for (const auto& row : ttable.rows)
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      if (row[fc] == kFeatureNames[f]) try_parse_double(row[vc], thresholds[f]);
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    if (!std::isfinite(thresholds[f]))
      throw MissingThresholdError("no threshold for " + std::string(kFeatureNames[f]) +
                                  " in " + tpath);

  const auto records = load_tracts(city.csv_path, city.name);
  const FeatureMatrix fm = feature_matrix(records);

  ProvisionScores quality, quantity;
  if (config.scaled_units) {
    auto [scaled, params] = feature_scale(fm.values, &result.warnings);
    std::vector<double> t_scaled(kFeatureCount);
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      t_scaled[f] = params.apply(f, thresholds[f]);
    quality = quality_provision(scaled, t_scaled, weights.normalized, &result.warnings);
    quantity = quantity_provision(scaled, &result.warnings);
  } else {
    quality = quality_provision(fm.values, thresholds, weights.normalized,
                                &result.warnings);
    quantity = quantity_provision(fm.values, &result.warnings);
  }
  const std::vector<int> q_bins = quintile_bins(quality.score, &result.warnings);
  const std::vector<int> n_bins = quintile_bins(quantity.score, &result.warnings);

  CsvTable out;
  out.header = {"geoid",         "quality_provision", "quantity_provision",
                "raw_deviation", "quality_quintile",  "quantity_quintile"};
  for (std::size_t r = 0; r < fm.geoids.size(); ++r)
    out.rows.push_back({fm.geoids[r], format_double(quality.score[r]),
                        format_double(quantity.score[r]),
                        format_double(quality.raw_deviation[r]),
                        std::to_string(q_bins[r]), std::to_string(n_bins[r])});
  const std::string path = artifact_path(config, city.name, "provision.csv");
  write_csv_file(path, out);
  result.artifacts.push_back(path);
  return result;
}

// ---- inequality -----------------------------------------------------------

inline StageResult stage_inequality(const RunConfig& config, const CityInput& city) {
  StageResult result{city.name, "inequality",
                     derive_seed(config.seed, "inequality", city.name)};
  const std::string ppath = artifact_path(config, city.name, "provision.csv");
  require_artifact(ppath);
  const CsvTable ptable = read_csv_file(ppath);
  const std::size_t gc = ptable.find("geoid"), qc = ptable.find("quality_provision");
  if (gc == static_cast<std::size_t>(-1) || qc == static_cast<std::size_t>(-1))
    throw IoError("provision file " + ppath + " lacks geoid/quality columns");

  const auto records = load_tracts(city.csv_path, city.name);
  std::map<std::string, std::optional<double>> income_of;
  for (const auto& rec : records) income_of[rec.geoid] = rec.median_income;

  std::vector<double> quality;
  std::vector<std::optional<double>> incomes;
  for (const auto& row : ptable.rows) {
    double q;
    if (!try_parse_double(row[qc], q))
      throw IoError("provision file " + ppath + " has non-numeric quality");
    quality.push_back(q);
    const auto it = income_of.find(row[gc]);
    if (it == income_of.end())
      throw IoError("provision geoid " + row[gc] + " not present in " + city.csv_path);
    incomes.push_back(it->second);
  }

  const InequalityReport report = inequality_report(quality, incomes, &result.warnings);

  nlohmann::json j;
  j["inequality_index"] = report.index;
  j["group_income"] = {{"better_median", report.income_gap.better_median},
                       {"worse_median", report.income_gap.worse_median},
                       {"gap", report.income_gap.gap}};
  j["income_groups"] = {{"low_n", report.low_income_n},
                        {"high_n", report.high_income_n},
                        {"ecdf_area_gap", report.income_ecdf_gap}};
  j["dropped_missing_income"] = report.dropped_missing_income;
  const std::string jpath = artifact_path(config, city.name, "inequality.json");
  {
    std::ofstream out(jpath, std::ios::binary);
    if (!out) throw IoError("cannot write " + jpath);
    out << j.dump(2) << '\n';
  }

  const IncomeSplit split = split_by_income_median(incomes);
  CsvTable etable;
  etable.header = {"group", "x", "F"};
  for (const auto& [name, idx] :
       {std::pair{"low_income", &split.low}, std::pair{"high_income", &split.high}}) {
    std::vector<double> scores;
    for (std::size_t i : *idx) scores.push_back(quality[i]);
    const Ecdf e = ecdf(scores);
    for (std::size_t k = 0; k < e.x.size(); ++k)
      etable.rows.push_back({name, format_double(e.x[k]), format_double(e.f[k])});
  }
  const std::string epath = artifact_path(config, city.name, "ecdf.csv");
  write_csv_file(epath, etable);
  result.artifacts = {jpath, epath};
  return result;
}

// ---- orchestration --------------------------------------------------------

inline std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash missing artifact: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(buf.str())));
  return std::string("fnv1a64:") + hex;
}

inline std::string manifest_path(const RunConfig& config) {
  return (std::filesystem::path(config.out_dir) / "manifest.json").string();
}

// Records config, per-stage seeds, artifact hashes, timings, and warnings.
// Safe to call repeatedly; stage entries are upserted by city/stage key.
inline void update_manifest(const RunConfig& config,
                            const std::vector<StageResult>& results) {
  const std::string path = manifest_path(config);
  nlohmann::json manifest;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception&) {
      manifest = nlohmann::json::object();  // rebuild a corrupt manifest
    }
  }
  manifest["config"] = config_to_json(config);
  if (!manifest.contains("stages")) manifest["stages"] = nlohmann::json::object();
  for (const auto& r : results) {
    nlohmann::json entry;
    entry["seed"] = r.seed;
    entry["artifacts"] = nlohmann::json::object();
    for (const auto& a : r.artifacts) entry["artifacts"][a] = file_hash(a);
    entry["warnings"] = r.warnings;
    entry["duration_ms"] = r.duration_ms;
    manifest["stages"][r.city + "/" + r.stage] = entry;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << manifest.dump(2) << '\n';
}

using StageFn = StageResult (*)(const RunConfig&, const CityInput&);

inline const std::vector<std::pair<std::string, StageFn>>& pipeline_stages() {
  static const std::vector<std::pair<std::string, StageFn>> stages = {
      {"label", stage_label},           {"train", stage_train},
      {"explain", stage_explain},       {"thresholds", stage_thresholds},
      {"provision", stage_provision},   {"inequality", stage_inequality},
  };
  return stages;
}

struct StageFailure {
  std::string city;
  std::string stage;
  std::exception_ptr error;
};

struct RunOutcome {
  std::vector<StageResult> results;
  std::vector<StageFailure> failures;
};

inline StageResult run_stage_timed(StageFn fn, const RunConfig& config,
                                   const CityInput& city) {
  const auto start = std::chrono::steady_clock::now();
  StageResult result = fn(config, city);
  result.duration_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

// Full pipeline per city, cities fanned out across worker threads. Results
// come back in deterministic (city, stage) order regardless of scheduling.
inline RunOutcome run_all(const RunConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  const auto& stages = pipeline_stages();

  std::vector<std::vector<StageResult>> per_city(config.cities.size());
  std::vector<std::optional<StageFailure>> per_city_failure(config.cities.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= config.cities.size()) return;
      const CityInput& city = config.cities[c];
      for (const auto& [name, fn] : stages) {
        try {
          per_city[c].push_back(run_stage_timed(fn, config, city));
        } catch (...) {
          per_city_failure[c] = StageFailure{city.name, name, std::current_exception()};
          break;  // abandon this city, keep serving the rest
        }
      }
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.jobs), config.cities.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  RunOutcome outcome;
  for (std::size_t c = 0; c < config.cities.size(); ++c) {
    for (auto& r : per_city[c]) outcome.results.push_back(std::move(r));
    if (per_city_failure[c]) outcome.failures.push_back(*per_city_failure[c]);
  }
  update_manifest(config, outcome.results);
  return outcome;
}

}  // namespace iqp
