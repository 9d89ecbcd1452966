#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rsgf/certify.hpp"
#include "rsgf/estimate.hpp"
#include "rsgf/mdp.hpp"
#include "rsgf/policy.hpp"
#include "rsgf/qcqp.hpp"

namespace rsgf::train {

enum class ReplayRule { CurrentOnly, LastTwo, Window, All };

struct ReplaySpec {
  ReplayRule rule = ReplayRule::CurrentOnly;
  int window = 1;
};

struct StepsizeSpec {
  enum class Kind {
    Constant,      // h = value
    InvSqrtAlpha,  // h_i = 1/(alpha sqrt(i))
    Harmonic,      // h_i = value / i
    NormClamped,   // h = min(value, clamp_scale / |R|)
  };
  Kind kind = Kind::Constant;
  double value = 0.1;
  double clamp_scale = 0.02;
};

struct BaselineSpec {
  enum class Kind { Zero, Grid };
  Kind kind = Kind::Zero;
  std::vector<int> bins;  // per state dim, Grid only
  Eigen::VectorXd state_lo, state_hi;
};

struct TrainConfig {
  int iterations = 100;
  int episodes_per_iteration = 30;
  int updates_per_iteration = 1;
  double alpha = 1.0;
  double beta = 1.0;
  double bound_C = 100.0;
  double delta = 0.1;
  ReplaySpec replay;
  StepsizeSpec stepsize;
  std::optional<estimate::ClipRange> clip;
  BaselineSpec baseline;
  std::uint64_t seed = 0;
  int checkpoint_interval = 0;
  qcqp::SolveOptions solve{1e-9, 20000, 1e12};
};

/// Episodes keyed by iteration, FIFO-evicted beyond the window any replay
/// rule can reach. Every stored episode keeps its behavior snapshot.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity_iterations) : capacity_(capacity_iterations) {}

  void add(int iteration, std::vector<mdp::Episode> episodes);
  estimate::Batch select(int iteration, const ReplaySpec& spec) const;
  static int capacity_for(const ReplaySpec& spec, int total_iterations);

 private:
  std::deque<std::pair<int, std::vector<mdp::Episode>>> store_;
  int capacity_;
};

struct IterationMetrics {
  int iteration = 0;
  double h = 0.0;
  std::string solve_status;
  Eigen::VectorXd v_hat;        // q+1 entries, [0] objective
  double xi_norm = 0.0;
  double kkt_residual = 0.0;
  Eigen::VectorXd multipliers;  // q+1 entries (constraints + bounding)
  certify::SafetyCertificate certificate;
  Eigen::VectorXd required_n_value;  // per constraint, NaN when margin <= 0
  Eigen::VectorXd required_n_grad;
  double theta_norm_sq = 0.0;
  int n_episodes = 0;
  int n_on_policy = 0;
  int n_off_policy = 0;
  double grad_var_bound = 0.0;  // (Nbar psi^2 + Ntilde psibar^2)/J^2, worst stream
  double wall_ms = 0.0;  // reported in timings.csv, not in the deterministic metrics file
};

struct TrainHooks {
  std::function<void(int iteration, const policy::Policy&)> on_checkpoint;
  std::function<void(const policy::Policy&, const std::string& reason)> on_abort;
};

struct TrainResult {
  std::vector<IterationMetrics> metrics;
  Eigen::VectorXd final_params;
  bool aborted = false;
  std::string abort_message;
  int infeasible_events = 0;
  double max_theta_norm_sq = 0.0;
};

/// Runs Algorithm 1: per iteration, N_i rollouts, replay selection, estimate,
/// solve, update; one metrics row per iteration (final sub-update's values
/// when updates_per_iteration > 1). Infeasible subproblems freeze the iterate
/// for that sub-update; NaN aborts with a checkpoint hook.
TrainResult train(const TrainConfig& config, const mdp::CmdpSpec& env, policy::Policy& pi,
                  const TrainHooks& hooks = {});

/// Deterministic metrics CSV (schema comment + header + one row/iteration).
void write_metrics_csv(std::ostream& out, const std::vector<IterationMetrics>& metrics);
/// Wall-clock per iteration, kept out of the deterministic file.
void write_timings_csv(std::ostream& out, const std::vector<IterationMetrics>& metrics);

struct ConvergenceReport {
  std::vector<double> running_min_xi_sq;
  bool stepsize_vanishes = false;
  bool stepsize_sum_diverges = false;
  std::string schedule_flag;
  std::string batch_flag;
  std::optional<double> theorem3_bound;
  std::string theorem3_note;
};

ConvergenceReport convergence_diagnostics(const std::vector<IterationMetrics>& metrics,
                                          const TrainConfig& config);

std::string replay_rule_name(ReplayRule rule);

}  // namespace rsgf::train
