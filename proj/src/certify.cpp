#include "rsgf/certify.hpp"

#include <cmath>
#include <stdexcept>

namespace rsgf::certify {

double margin(double v_hat, double alpha, double h, double beta_at_theta, double L_j,
              double r_norm) {
  const double numerator =
      -(1.0 - alpha * h) * v_hat + 0.5 * h * (beta_at_theta - L_j * h) * r_norm * r_norm;
  return numerator / (1.0 + h * r_norm);
}

EpisodeRequirement episodes_required(double M, double delta, double phi, double phi_bar,
                                     const std::optional<GradientConstants>& grad, double mix) {
  if (!(M > 0.0)) {
    throw std::invalid_argument("episodes_required: margin nonpositive; safety hypothesis violated");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("episodes_required: delta must lie in (0, 1)");
  }
  if (mix < 0.0 || mix > 1.0) {
    throw std::invalid_argument("episodes_required: on-policy fraction must lie in [0, 1]");
  }
  EpisodeRequirement out;
  out.value_threshold = -2.0 / (M * M) * std::log(delta / 2.0);
  // With N_bar = mix*J: J^2/(N_bar phi^2 + N_tilde phibar^2) = J / (mix phi^2 + (1-mix) phibar^2).
  // Zero-weight terms are skipped so an infinite off-policy constant does not
  // poison a pure on-policy requirement.
  const auto mixed_mass = [mix](double on, double off) {
    double mass = 0.0;
    if (mix > 0.0) mass += mix * on * on;
    if (mix < 1.0) mass += (1.0 - mix) * off * off;
    return mass;
  };
  out.n_value = static_cast<long>(std::ceil(out.value_threshold * mixed_mass(phi, phi_bar) - 1e-12));
  out.n_required = out.n_value;
  if (grad) {
    const double d = static_cast<double>(grad->dim);
    out.gradient_threshold = -2.0 * d / (M * M) * std::log(delta / (2.0 * d));
    out.n_gradient = static_cast<long>(
        std::ceil(out.gradient_threshold * mixed_mass(grad->psi, grad->psi_bar) - 1e-12));
    out.n_required = std::max(out.n_value, out.n_gradient);
  }
  return out;
}

double lipschitz_L_j(double B_j, double L, double B_tilde, double gamma, int T) {
  if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("lipschitz_L_j: gamma in (0,1)");
  const double geo = (1.0 - std::pow(gamma, T)) / (1.0 - gamma);
  const double weighted =
      gamma * (1.0 - (T + 1) * std::pow(gamma, T) + T * std::pow(gamma, T + 1)) /
      ((1.0 - gamma) * (1.0 - gamma));
  return B_j * L * geo * geo + 2.0 * B_j * B_tilde * B_tilde * weighted +
         B_j * B_tilde * B_tilde * geo * geo;
}

double lipschitz_bounding(double bound_C) { return 2.0 * std::sqrt(bound_C); }

double horizon_confidence(int q, int H, double delta) {
  return std::max(0.0, 1.0 - 2.0 * q * H * delta);
}

double invariance_reward_offset(double gamma, int T, double delta_j) {
  if (delta_j < 0.0 || delta_j >= 1.0) {
    throw std::invalid_argument("invariance_reward_offset: delta_j in [0, 1)");
  }
  if (delta_j == 0.0) return 0.0;
  return std::pow(gamma, T) * delta_j * (1.0 - gamma) / (1.0 - std::pow(gamma, T));
}

StateReward build_invariance_reward(SetMembership member, double gamma, int T, double delta_j) {
  const double offset = invariance_reward_offset(gamma, T, delta_j);
  return [member = std::move(member), offset](const Eigen::VectorXd& s) {
    return 1.0 - (member(s) ? 1.0 : 0.0) + offset;
  };
}

double popoviciu_bound(double m, double M) {
  if (m > M) throw std::invalid_argument("popoviciu_bound: m <= M required");
  return (M - m) * (M - m) / 4.0;
}

double hoeffding_bound(const std::vector<std::pair<double, double>>& ranges, double eps) {
  double denom = 0.0;
  for (const auto& [a, b] : ranges) {
    if (a > b) throw std::invalid_argument("hoeffding_bound: a_i <= b_i required");
    denom += (b - a) * (b - a);
  }
  if (denom <= 0.0) return 0.0;
  return 2.0 * std::exp(-2.0 * eps * eps / denom);
}

double frechet_lower(const std::vector<double>& probs) {
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("frechet_lower: probabilities in [0,1]");
    sum += p;
  }
  return std::max(0.0, sum - (static_cast<double>(probs.size()) - 1.0));
}

double theorem3_iteration_bound(double kappa, double eps, double ell_hat, double sigma_bar, int q,
                                double eps_star) {
  const double correction = 1.5 * ell_hat * sigma_bar * (static_cast<double>(q) / eps_star + 1.0);
  if (!(eps > correction)) {
    throw std::invalid_argument(
        "theorem3_iteration_bound: variance too large for the bound to apply");
  }
  const double quotient = kappa / (eps - correction);
  return quotient * quotient;
}

}  // namespace rsgf::certify
