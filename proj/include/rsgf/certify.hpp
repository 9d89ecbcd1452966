#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace rsgf::certify {

/// Safety margin for one constraint at one update step:
///   M = [-(1 - alpha h) Vhat + (h/2)(beta - L h) |R|^2] / (1 + h |R|).
/// May be negative; the caller interprets the sign.
double margin(double v_hat, double alpha, double h, double beta_at_theta, double L_j,
              double r_norm);

struct GradientConstants {
  double psi = 0.0;
  double psi_bar = 0.0;
  int dim = 0;
};

struct EpisodeRequirement {
  double value_threshold = 0.0;     // lower bound on J^2/(Nbar phi^2 + Ntilde phibar^2)
  double gradient_threshold = 0.0;  // lower bound on J^2/(Nbar psi^2 + Ntilde psibar^2)
  long n_value = 0;                 // smallest batch meeting the value condition
  long n_gradient = 0;              // smallest batch meeting the gradient condition
  long n_required = 0;              // max of the two
};

/// Episode-count conditions for confidence delta at margin M. The returned
/// integers assume a batch with on-policy fraction `mix` (1 = pure
/// on-policy); the thresholds let callers evaluate arbitrary splits.
/// Errors when M <= 0: the safety-theorem hypothesis is violated.
EpisodeRequirement episodes_required(double M, double delta, double phi, double phi_bar,
                                     const std::optional<GradientConstants>& grad = std::nullopt,
                                     double mix = 1.0);

/// Lipschitz constant of grad V_j from the declared reward bound B_j, score
/// Lipschitz modulus L, per-component score bound B_tilde:
///   B L ((1-g^T)/(1-g))^2 + 2 B Bt^2 g (1-(T+1)g^T + T g^{T+1})/(1-g)^2
///   + B Bt^2 ((1-g^T)/(1-g))^2.
double lipschitz_L_j(double B_j, double L, double B_tilde, double gamma, int T);

/// Lipschitz constant 2 sqrt(C) of the bounding constraint on |theta|^2 <= C.
double lipschitz_bounding(double bound_C);

/// max(0, 1 - 2 q H delta).
double horizon_confidence(int q, int H, double delta);

/// Offset gamma^T delta_j (1-gamma)/(1-gamma^T) that turns set-membership
/// indicators into a cumulative constraint certifying forward invariance of
/// the set with confidence 1 - delta_j.
double invariance_reward_offset(double gamma, int T, double delta_j);

using SetMembership = std::function<bool(const Eigen::VectorXd&)>;
using StateReward = std::function<double(const Eigen::VectorXd&)>;

/// R(s) = 1 - indicator(s in set) + offset.
StateReward build_invariance_reward(SetMembership member, double gamma, int T, double delta_j);

/// Var(X) <= (M - m)^2 / 4 for m <= X <= M.
double popoviciu_bound(double m, double M);

/// Two-sided Hoeffding deviation bound 2 exp(-2 eps^2 / sum (b_i-a_i)^2).
double hoeffding_bound(const std::vector<std::pair<double, double>>& ranges, double eps);

/// P(intersection) >= max(0, sum p_i - (n-1)).
double frechet_lower(const std::vector<double>& probs);

/// Iteration bound (kappa / (eps - (3/2) ell sigma (q/eps_star + 1)))^2.
/// Errors when eps does not exceed the variance correction.
double theorem3_iteration_bound(double kappa, double eps, double ell_hat, double sigma_bar, int q,
                                double eps_star);

/// Snapshot of one certified step, serialized into the metrics CSV.
struct SafetyCertificate {
  Eigen::VectorXd margins;             // per constraint j = 1..q
  Eigen::VectorXd value_thresholds;    // value-estimate episode condition per constraint
  Eigen::VectorXd gradient_thresholds; // gradient-estimate episode condition per constraint
  double step_confidence_single = 0.0; // 1 - 2 delta
  double step_confidence_joint = 0.0;  // 1 - 2 q delta
  double h = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double r_norm = 0.0;
  double delta = 0.0;
  bool h_within_safe_step = false;
  Eigen::VectorXd v_hat;
  Eigen::VectorXd lipschitz;
};

}  // namespace rsgf::certify
