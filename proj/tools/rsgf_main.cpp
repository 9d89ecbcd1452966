#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsgf/config.hpp"
#include "rsgf/runner.hpp"

namespace {

int verbosity() {
  const char* env = std::getenv("RSGF_LOG");
  if (!env) return 1;
  try {
    return std::stoi(env);
  } catch (...) {
    return 1;
  }
}

struct NullStream : std::ostream {
  NullStream() : std::ostream(nullptr) {}
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust safe gradient flow: deterministic flow benchmarks, RSGF-RL training, "
               "estimator validation and safety-certificate arithmetic"};
  app.require_subcommand(0, 1);

  std::string dump_preset;
  app.add_option("--dump-preset", dump_preset, "Print a named preset config as JSON and exit");
  bool list_presets = false;
  app.add_flag("--list-presets", list_presets, "List available preset names and exit");

  std::string config_path, preset_name, out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false, out_set = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Path to a JSON experiment config");
    sub->add_option("--preset", preset_name, "Name of an embedded preset config");
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { seed = s; seed_set = true; },
                                            "Override the config seed");
    sub->add_option_function<std::string>("--out", [&](std::string o) { out_dir = std::move(o); out_set = true; },
                                          "Override the output directory");
  };

  CLI::App* flow = app.add_subcommand("flow", "Integrate the deterministic flow on an analytic fixture");
  CLI::App* train = app.add_subcommand("train", "Run RSGF-RL training on an environment");
  CLI::App* validate = app.add_subcommand("validate", "Run the tabular estimator validation suite");
  CLI::App* certify = app.add_subcommand("certify", "Evaluate safety-certificate arithmetic");
  for (CLI::App* sub : {flow, train, validate, certify}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  if (list_presets) {
    for (const auto& name : rsgf::cli::preset_names()) std::cout << name << "\n";
    return 0;
  }
  if (!dump_preset.empty()) {
    try {
      std::cout << rsgf::cli::to_json(rsgf::cli::preset(dump_preset)).dump(2) << "\n";
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }

  CLI::App* sub = nullptr;
  for (CLI::App* s : {flow, train, validate, certify}) {
    if (s->parsed()) sub = s;
  }
  if (!sub) {
    std::cerr << app.help() << "\n";
    return 2;
  }

  rsgf::cli::ExperimentConfig config;
  try {
    if (!preset_name.empty()) {
      config = rsgf::cli::preset(preset_name);
    } else if (!config_path.empty()) {
      config = rsgf::cli::load_config(config_path);
    } else {
      std::cerr << "error: provide --config or --preset\n";
      return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  config.mode = sub->get_name();
  if (seed_set) config.seed = seed;
  if (out_set) config.out_dir = out_dir;

  NullStream devnull;
  std::ostream& log = verbosity() > 0 ? std::cout : static_cast<std::ostream&>(devnull);
  try {
    return rsgf::cli::run(config, log);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
