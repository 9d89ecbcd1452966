#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsgf/envs.hpp"
#include "rsgf/train.hpp"

namespace rsgf::cli {

struct PolicyConfig {
  std::vector<int> centers_per_dim;
  double rbf_variance = 0.5;
  std::vector<double> action_cov;
  std::vector<std::array<double, 2>> action_box;
  std::vector<std::array<double, 2>> center_box;  // state box the centers span
};

struct FlowScheduleConfig {
  std::string kind = "constant";  // constant | invsqrt | harmonic
  double value = 1.0;
  bool cap_safe_step = true;
  double cap_factor = 0.9;
};

struct FlowConfig {
  std::string fixture = "disk";
  double alpha = 1.0;
  double beta = 1.0;
  int iterations = 10000;
  FlowScheduleConfig schedule;
  std::vector<double> theta0;
};

struct CertifyGradientConfig {
  double psi = 0.0;
  double psi_bar = 0.0;
  int dim = 1;
};

struct CertifyConfig {
  double margin = 0.0;
  double delta = 0.1;
  double phi = 1.0;
  std::optional<double> phi_bar;
  std::optional<CertifyGradientConfig> gradient;
  int q = 1;
  int horizon = 1;
  double horizon_delta = 0.1;
};

struct ValidateConfig {
  int trials = 20000;
  int batch_size = 6;
  std::optional<estimate::ClipRange> clip;
  double tolerance_se = 4.0;
};

struct ExperimentConfig {
  std::string mode = "train";  // flow | train | validate | certify
  std::uint64_t seed = 1;
  std::string out_dir = "runs/out";
  std::string environment = "nav2d";  // nav2d | cartpole | tabular
  int horizon = 25;
  double gamma = 0.98;
  envs::Nav2dConfig nav2d;
  envs::CartpoleConfig cartpole;
  PolicyConfig policy;
  train::TrainConfig train;
  FlowConfig flow;
  CertifyConfig certify;
  ValidateConfig validate;
};

/// Strict parse: any key outside the schema is an error naming the key.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);

ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace rsgf::cli
