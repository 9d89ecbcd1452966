#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <vector>

#include "rsgf/mdp.hpp"
#include "rsgf/policy.hpp"

namespace rsgf::estimate {

struct ClipRange {
  double lo = 0.8;
  double hi = 1.2;
};

/// State-dependent baseline with its declared bound B_hat.
struct Baseline {
  std::function<double(const Eigen::VectorXd&)> fn;
  double bound = 0.0;
};

Baseline zero_baseline();

/// Values and gradients of the current iterate. values[0] is the objective
/// estimate (kept for logging), values[j] for j >= 1 enter the constraints.
struct EstimateBundle {
  Eigen::VectorXd values;                  // size q+1
  std::vector<Eigen::VectorXd> gradients;  // size q+1, each dimension d
  int batch_size = 0;
  int on_policy_count = 0;
  int off_policy_count = 0;
  std::optional<ClipRange> clip;
};

using Batch = std::vector<const mdp::Episode*>;

Batch as_batch(const std::vector<mdp::Episode>& episodes);

/// Trajectory importance weight Prod_t pi_theta(a_t|s_t)/zeta(a_t|s_t),
/// computed in log space over realized steps, then clipped if configured.
/// Throws on a non-finite weight (density-floor violation).
double is_weight(const mdp::Episode& episode, const policy::Policy& target,
                 const std::optional<ClipRange>& clip = std::nullopt);

/// Trajectory-weighted discounted-return estimate of stream j, sign applied
/// (sigma_0 = -1, sigma_j = 1 otherwise).
double estimate_value(int j, const Batch& batch, const policy::Policy& target, double gamma,
                      const std::optional<ClipRange>& clip = std::nullopt);

/// Weighted score-times-advantage gradient estimate of stream j with baseline b.
Eigen::VectorXd estimate_gradient(int j, const Batch& batch, const policy::Policy& target,
                                  double gamma, const Baseline& baseline,
                                  const std::optional<ClipRange>& clip = std::nullopt);

/// All streams at once; one grad_log_prob evaluation per step shared across
/// streams. Per-episode terms are computed in parallel (OpenMP) and reduced
/// in episode order, so results do not depend on the thread count.
EstimateBundle estimate_bundle(const Batch& batch, const policy::Policy& target, double gamma,
                               const std::vector<Baseline>& baselines,
                               const std::optional<ClipRange>& clip = std::nullopt);

/// Statistical constants of the value/gradient tail bounds:
///   phi = B_j (1 - gamma^{T+1}) / (1 - gamma),     phi_bar = phi / nu^{T+1}
///   psi = B_tilde sum_t gamma^t sum_{t'>=t} (gamma^{t'-t} B_j + B_hat),
///   psi_bar = psi / nu^{T+1}.
/// When parameter distances |theta_i - theta_bar_n| and L_tilde are supplied,
/// the per-episode tilde constants phi * exp((T+1) L_tilde dist) are filled.
struct StatConstants {
  double phi = 0.0;
  double phi_bar = 0.0;
  double psi = 0.0;
  double psi_bar = 0.0;
  Eigen::VectorXd phi_tilde;
  Eigen::VectorXd psi_tilde;
};

StatConstants stat_constants(double B_j, double B_hat, double gamma, int T, double nu,
                             double B_tilde, const std::vector<double>& param_distances = {},
                             double L_tilde = 0.0);

/// Lower bound on P(|Vhat - V| <= eps), clamped to [0, 1].
double tail_bound_value(double eps, double J, double N_bar, double N_tilde, double phi,
                        double phi_bar);

/// Lower bound on P(|grad Vhat - grad V| <= eps) in d dimensions, clamped.
double tail_bound_gradient(double eps, double J, double N_bar, double N_tilde, double psi,
                           double psi_bar, int d);

/// Episodes whose stored behavior parameters equal the target's bit for bit
/// count as on-policy.
bool is_on_policy(const mdp::Episode& episode, const policy::Policy& target);

/// Running mean of stream-j reward-to-go binned over a coarse state grid;
/// stand-in for a learned baseline. The declared bound tracks the observed
/// max so the estimator's baseline check never trips on its own data.
class GridBaseline {
 public:
  GridBaseline(Eigen::VectorXd state_lo, Eigen::VectorXd state_hi, std::vector<int> bins_per_dim);

  void update(const Batch& batch, int j, double gamma);
  double value(const Eigen::VectorXd& s) const;
  double bound() const { return bound_; }
  Baseline snapshot() const;

 private:
  Eigen::VectorXd lo_, hi_;
  std::vector<int> bins_;
  std::vector<double> sums_;
  std::vector<long> counts_;
  double bound_ = 0.0;

  int index_of(const Eigen::VectorXd& s) const;
};

}  // namespace rsgf::estimate
