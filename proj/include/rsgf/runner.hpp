#pragma once

#include <iosfwd>
#include <string>

#include "rsgf/config.hpp"

namespace rsgf::cli {

/// Builds the environment + policy named by the config. Exposed so the
/// runner, tests, and tools share one construction path.
struct Experiment {
  mdp::CmdpSpec spec;
  std::unique_ptr<policy::Policy> policy;
};

Experiment build_experiment(const ExperimentConfig& config);

/// Mode entry points. Each writes a manifest (config echo + seed + schema
/// versions) into out_dir before running, logs to `log`, and returns a
/// process exit status.
int run_flow(const ExperimentConfig& config, std::ostream& log);
int run_train(const ExperimentConfig& config, std::ostream& log);
int run_certify(const ExperimentConfig& config, std::ostream& log);
int run_validate(const ExperimentConfig& config, std::ostream& log);

int run(const ExperimentConfig& config, std::ostream& log);

}  // namespace rsgf::cli
