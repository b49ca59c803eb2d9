#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iqp/iqp.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string city;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<double> frac;
  bool no_smote = false;
  bool raw_units = false;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Run configuration JSON")->required();
  cmd->add_option("--city", opts.city, "Process only this configured city");
  cmd->add_option("--seed", opts.seed, "Override the master seed");
  cmd->add_option("--out", opts.out_dir, "Override the output directory");
  cmd->add_option("--frac", opts.frac, "Override the LOWESS fraction");
  cmd->add_flag("--no-smote", opts.no_smote, "Disable SMOTE balancing");
  cmd->add_flag("--raw-units", opts.raw_units,
                "Compute provision deviations on raw feature units");
  cmd->add_option("--jobs", opts.jobs, "Cities processed in parallel");
}

iqp::RunConfig effective_config(const CommonOpts& opts) {
  iqp::RunConfig config = iqp::load_config(opts.config_path);
  if (opts.seed) config.seed = *opts.seed;
  if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
  if (opts.frac) config.lowess_frac = *opts.frac;
  if (opts.no_smote) config.smote = false;
  if (opts.raw_units) config.scaled_units = false;
  if (opts.jobs) config.jobs = *opts.jobs;
  if (!opts.city.empty()) {
    std::vector<iqp::CityInput> kept;
    for (const auto& c : config.cities)
      if (c.name == opts.city) kept.push_back(c);
    if (kept.empty())
      throw iqp::ConfigError("city '" + opts.city + "' not present in config");
    config.cities = std::move(kept);
  }
  iqp::validate_config(config);
  return config;
}

int run_one_stage(const CommonOpts& opts, const std::string& stage_name) {
  const iqp::RunConfig config = effective_config(opts);
  std::filesystem::create_directories(config.out_dir);
  iqp::StageFn fn = nullptr;
  for (const auto& [name, f] : iqp::pipeline_stages())
    if (name == stage_name) fn = f;

  std::vector<iqp::StageResult> results;
  for (const auto& city : config.cities) {
    try {
      results.push_back(iqp::run_stage_timed(fn, config, city));
    } catch (...) {
      iqp::update_manifest(config, results);
      std::cerr << "city " << city.name << ", stage " << stage_name << " failed\n";
      throw;
    }
    const auto& r = results.back();
    std::cout << city.name << "/" << stage_name << ": wrote";
    for (const auto& a : r.artifacts) std::cout << ' ' << a;
    std::cout << '\n';
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  }
  iqp::update_manifest(config, results);
  return 0;
}

int run_everything(const CommonOpts& opts) {
  const iqp::RunConfig config = effective_config(opts);
  const iqp::RunOutcome outcome = iqp::run_all(config);
  for (const auto& r : outcome.results) {
    std::cout << r.city << "/" << r.stage << ": wrote";
    for (const auto& a : r.artifacts) std::cout << ' ' << a;
    std::cout << '\n';
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  }
  if (!outcome.failures.empty()) {
    for (const auto& f : outcome.failures)
      std::cerr << "city " << f.city << ", stage " << f.stage << " failed\n";
    std::rethrow_exception(outcome.failures.front().error);
  }
  std::cout << "manifest: " << iqp::manifest_path(config) << '\n';
  return 0;
}

struct SynthOpts {
  std::string out_path;
  std::string city = "synthville";
  std::size_t n = 800;
  std::string mode = "planted";
  std::uint64_t seed = 1;
};

int run_synth(const SynthOpts& opts) {
  iqp::SynthSpec spec;
  spec.city = opts.city;
  spec.n = opts.n;
  spec.mode = iqp::parse_synth_mode(opts.mode);
  const iqp::SynthCity city = iqp::make_synth_city(spec, opts.seed);
  iqp::write_tracts(opts.out_path, city.records);
  std::size_t positives = 0;
  for (int z : city.true_labels) positives += z;
  std::cout << "wrote " << city.records.size() << " tracts to " << opts.out_path
            << " (" << positives << " high-hazard)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infrastructure quality provision pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  SynthOpts synth_opts;
  std::function<int()> action;

  for (const char* stage : {"label", "train", "explain", "thresholds", "provision",
                            "inequality"}) {
    auto* cmd = app.add_subcommand(
        stage, std::string("Run the ") + stage + " stage for configured cities");
    add_common(cmd, opts);
    cmd->callback([&opts, stage, &action] {
      action = [&opts, stage] { return run_one_stage(opts, stage); };
    });
  }

  auto* run_all_cmd = app.add_subcommand("run-all", "Run the full per-city pipeline");
  add_common(run_all_cmd, opts);
  run_all_cmd->callback([&] { action = [&] { return run_everything(opts); }; });

  auto* synth_cmd = app.add_subcommand("synth", "Emit a synthetic test city CSV");
  synth_cmd->add_option("--out", synth_opts.out_path, "Output CSV path")->required();
  synth_cmd->add_option("--city", synth_opts.city, "City name to stamp on rows");
  synth_cmd->add_option("--n", synth_opts.n, "Number of tracts");
  synth_cmd->add_option("--mode", synth_opts.mode, "separable | planted | null");
  synth_cmd->add_option("--seed", synth_opts.seed, "Generator seed");
  synth_cmd->callback([&] { action = [&] { return run_synth(synth_opts); }; });

  CLI11_PARSE(app, argc, argv);

  try {
    return action ? action() : 0;
  } catch (const iqp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const iqp::NoCorrectInstancesError& e) {
    std::cerr << "model quality failure: " << e.what() << '\n';
    return 3;
  } catch (const iqp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
