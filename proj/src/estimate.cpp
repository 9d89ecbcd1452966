#include "rsgf/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rsgf::estimate {

namespace {

double clipped(double w, const std::optional<ClipRange>& clip) {
  if (!clip) return w;
  return std::clamp(w, clip->lo, clip->hi);
}

double sigma(int j) { return j == 0 ? -1.0 : 1.0; }

void check_baseline(const Baseline& b, const Eigen::VectorXd& s) {
  const double v = b.fn(s);
  if (std::abs(v) > b.bound + 1e-12) {
    throw std::runtime_error("estimate: baseline exceeds its declared bound");
  }
}

// Reward-to-go D_{j,t} before baseline subtraction, one backward pass.
Eigen::VectorXd reward_to_go(const mdp::Episode& ep, int j, double gamma) {
  const int steps = static_cast<int>(ep.rewards.cols());
  Eigen::VectorXd togo(steps);
  double acc = 0.0;
  for (int t = steps - 1; t >= 0; --t) {
    acc = ep.rewards(j, t) + gamma * acc;
    togo[t] = acc;
  }
  return togo;
}

}  // namespace

Baseline zero_baseline() {
  return Baseline{[](const Eigen::VectorXd&) { return 0.0; }, 0.0};
}

Batch as_batch(const std::vector<mdp::Episode>& episodes) {
  Batch batch;
  batch.reserve(episodes.size());
  for (const auto& ep : episodes) batch.push_back(&ep);
  return batch;
}

bool is_on_policy(const mdp::Episode& episode, const policy::Policy& target) {
  const Eigen::VectorXd tp = target.params();
  if (episode.behavior_params.size() != tp.size()) return false;
  for (int i = 0; i < tp.size(); ++i) {
    if (episode.behavior_params[i] != tp[i]) return false;
  }
  return true;
}

double is_weight(const mdp::Episode& episode, const policy::Policy& target,
                 const std::optional<ClipRange>& clip) {
  double log_target = 0.0;
  for (int t = 0; t < episode.realized_steps; ++t) {
    log_target += target.log_prob(episode.actions.row(t), episode.states.row(t));
  }
  const double w = std::exp(log_target - episode.behavior_log_prob);
  if (!std::isfinite(w)) {
    throw std::runtime_error(
        "estimate: non-finite importance weight; the density floor assumption is violated");
  }
  return clipped(w, clip);
}

double estimate_value(int j, const Batch& batch, const policy::Policy& target, double gamma,
                      const std::optional<ClipRange>& clip) {
  if (batch.empty()) throw std::invalid_argument("estimate: empty batch");
  double acc = 0.0;
  for (const mdp::Episode* ep : batch) {
    const double w = is_weight(*ep, target, clip);
    double ret = 0.0;
    for (int t = 0; t < ep->rewards.cols(); ++t) ret += std::pow(gamma, t) * ep->rewards(j, t);
    acc += w * ret;
  }
  return sigma(j) * acc / static_cast<double>(batch.size());
}

Eigen::VectorXd estimate_gradient(int j, const Batch& batch, const policy::Policy& target,
                                  double gamma, const Baseline& baseline,
                                  const std::optional<ClipRange>& clip) {
  if (batch.empty()) throw std::invalid_argument("estimate: empty batch");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(target.param_dim());
  for (const mdp::Episode* ep : batch) {
    const double w = is_weight(*ep, target, clip);
    const Eigen::VectorXd togo = reward_to_go(*ep, j, gamma);
    Eigen::VectorXd term = Eigen::VectorXd::Zero(target.param_dim());
    for (int t = 0; t < ep->realized_steps; ++t) {
      const Eigen::VectorXd s = ep->states.row(t);
      check_baseline(baseline, s);
      const double advantage = togo[t] - baseline.fn(s);
      term += std::pow(gamma, t) * advantage * target.grad_log_prob(ep->actions.row(t), s);
    }
    acc += w * term;
  }
  return sigma(j) * acc / static_cast<double>(batch.size());
}

EstimateBundle estimate_bundle(const Batch& batch, const policy::Policy& target, double gamma,
                               const std::vector<Baseline>& baselines,
                               const std::optional<ClipRange>& clip) {
  if (batch.empty()) throw std::invalid_argument("estimate: empty batch");
  const int n = static_cast<int>(batch.size());
  const int q1 = static_cast<int>(batch[0]->rewards.rows());
  const int d = target.param_dim();
  if (static_cast<int>(baselines.size()) != q1) {
    throw std::invalid_argument("estimate: one baseline per reward stream required");
  }

  // Per-episode terms, filled in parallel, reduced in episode order below.
  // Exceptions cannot cross the parallel region, so failures are captured and
  // rethrown afterwards.
  std::vector<Eigen::VectorXd> value_terms(static_cast<std::size_t>(n));
  std::vector<Eigen::MatrixXd> grad_terms(static_cast<std::size_t>(n));
  std::vector<bool> on_policy(static_cast<std::size_t>(n));
  std::exception_ptr failure = nullptr;

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const mdp::Episode& ep = *batch[static_cast<std::size_t>(i)];
      const double w = is_weight(ep, target, clip);
      on_policy[static_cast<std::size_t>(i)] = is_on_policy(ep, target);

      Eigen::VectorXd vals(q1);
      Eigen::MatrixXd togo(q1, ep.rewards.cols());
      for (int j = 0; j < q1; ++j) {
        togo.row(j) = reward_to_go(ep, j, gamma);
        vals[j] = w * togo(j, 0);  // discounted return = reward-to-go at t = 0
      }

      Eigen::MatrixXd grads = Eigen::MatrixXd::Zero(d, q1);
      double discount = 1.0;
      for (int t = 0; t < ep.realized_steps; ++t) {
        const Eigen::VectorXd s = ep.states.row(t);
        const Eigen::VectorXd gl = target.grad_log_prob(ep.actions.row(t), s);
        for (int j = 0; j < q1; ++j) {
          check_baseline(baselines[static_cast<std::size_t>(j)], s);
          const double advantage = togo(j, t) - baselines[static_cast<std::size_t>(j)].fn(s);
          grads.col(j) += discount * advantage * gl;
        }
        discount *= gamma;
      }
      value_terms[static_cast<std::size_t>(i)] = vals;
      grad_terms[static_cast<std::size_t>(i)] = w * grads;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
      value_terms[static_cast<std::size_t>(i)] = Eigen::VectorXd::Zero(q1);
      grad_terms[static_cast<std::size_t>(i)] = Eigen::MatrixXd::Zero(d, q1);
    }
  }
  if (failure) std::rethrow_exception(failure);

  EstimateBundle out;
  out.values = Eigen::VectorXd::Zero(q1);
  out.gradients.assign(static_cast<std::size_t>(q1), Eigen::VectorXd::Zero(d));
  out.batch_size = n;
  out.clip = clip;
  for (int i = 0; i < n; ++i) {
    out.values += value_terms[static_cast<std::size_t>(i)];
    for (int j = 0; j < q1; ++j) {
      out.gradients[static_cast<std::size_t>(j)] += grad_terms[static_cast<std::size_t>(i)].col(j);
    }
    if (on_policy[static_cast<std::size_t>(i)]) {
      ++out.on_policy_count;
    } else {
      ++out.off_policy_count;
    }
  }
  for (int j = 0; j < q1; ++j) {
    out.values[j] *= sigma(j) / n;
    out.gradients[static_cast<std::size_t>(j)] *= sigma(j) / n;
  }
  return out;
}

StatConstants stat_constants(double B_j, double B_hat, double gamma, int T, double nu,
                             double B_tilde, const std::vector<double>& param_distances,
                             double L_tilde) {
  if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("stat_constants: gamma in (0,1)");
  if (nu <= 0.0 || nu > 1.0) throw std::invalid_argument("stat_constants: nu in (0,1]");
  if (T < 0) throw std::invalid_argument("stat_constants: T >= 0");

  StatConstants c;
  c.phi = B_j * (1.0 - std::pow(gamma, T + 1)) / (1.0 - gamma);
  double psi = 0.0;
  for (int t = 0; t <= T; ++t) {
    double inner = 0.0;
    for (int tp = t; tp <= T; ++tp) inner += std::pow(gamma, tp - t) * B_j + B_hat;
    psi += std::pow(gamma, t) * inner;
  }
  c.psi = B_tilde * psi;
  const double nu_pow = std::pow(nu, T + 1);
  c.phi_bar = c.phi / nu_pow;
  c.psi_bar = c.psi / nu_pow;

  if (!param_distances.empty()) {
    c.phi_tilde = Eigen::VectorXd(static_cast<Eigen::Index>(param_distances.size()));
    c.psi_tilde = Eigen::VectorXd(static_cast<Eigen::Index>(param_distances.size()));
    for (std::size_t i = 0; i < param_distances.size(); ++i) {
      const double factor = std::exp((T + 1) * L_tilde * param_distances[i]);
      c.phi_tilde[static_cast<Eigen::Index>(i)] = c.phi * factor;
      c.psi_tilde[static_cast<Eigen::Index>(i)] = c.psi * factor;
    }
  }
  return c;
}

double tail_bound_value(double eps, double J, double N_bar, double N_tilde, double phi,
                        double phi_bar) {
  const double denom = 2.0 * N_bar * phi * phi + 2.0 * N_tilde * phi_bar * phi_bar;
  if (denom <= 0.0) return 1.0;
  const double bound = 1.0 - 2.0 * std::exp(-eps * eps * J * J / denom);
  return std::clamp(bound, 0.0, 1.0);
}

double tail_bound_gradient(double eps, double J, double N_bar, double N_tilde, double psi,
                           double psi_bar, int d) {
  const double denom = 2.0 * d * (N_bar * psi * psi + N_tilde * psi_bar * psi_bar);
  if (denom <= 0.0) return 1.0;
  const double bound = 1.0 - 2.0 * d * std::exp(-eps * eps * J * J / denom);
  return std::clamp(bound, 0.0, 1.0);
}

GridBaseline::GridBaseline(Eigen::VectorXd state_lo, Eigen::VectorXd state_hi,
                           std::vector<int> bins_per_dim)
    : lo_(std::move(state_lo)), hi_(std::move(state_hi)), bins_(std::move(bins_per_dim)) {
  long total = 1;
  for (int b : bins_) {
    if (b < 1) throw std::invalid_argument("baseline: bins must be >= 1");
    total *= b;
  }
  sums_.assign(static_cast<std::size_t>(total), 0.0);
  counts_.assign(static_cast<std::size_t>(total), 0);
}

int GridBaseline::index_of(const Eigen::VectorXd& s) const {
  int idx = 0;
  for (std::size_t d = 0; d < bins_.size(); ++d) {
    const double frac = (s[static_cast<int>(d)] - lo_[static_cast<int>(d)]) /
                        (hi_[static_cast<int>(d)] - lo_[static_cast<int>(d)]);
    int k = static_cast<int>(frac * bins_[d]);
    k = std::clamp(k, 0, bins_[d] - 1);
    idx = idx * bins_[d] + k;
  }
  return idx;
}

void GridBaseline::update(const Batch& batch, int j, double gamma) {
  for (const mdp::Episode* ep : batch) {
    const Eigen::VectorXd togo = reward_to_go(*ep, j, gamma);
    for (int t = 0; t < ep->realized_steps; ++t) {
      const int idx = index_of(ep->states.row(t));
      sums_[static_cast<std::size_t>(idx)] += togo[t];
      counts_[static_cast<std::size_t>(idx)] += 1;
    }
  }
  for (std::size_t i = 0; i < sums_.size(); ++i) {
    if (counts_[i] > 0) bound_ = std::max(bound_, std::abs(sums_[i] / counts_[i]));
  }
}

double GridBaseline::value(const Eigen::VectorXd& s) const {
  const int idx = index_of(s);
  if (counts_[static_cast<std::size_t>(idx)] == 0) return 0.0;
  return sums_[static_cast<std::size_t>(idx)] / counts_[static_cast<std::size_t>(idx)];
}

Baseline GridBaseline::snapshot() const {
  // Copy the table so later updates do not mutate estimates already formed.
  auto sums = sums_;
  auto counts = counts_;
  auto lo = lo_;
  auto hi = hi_;
  auto bins = bins_;
  auto fn = [sums = std::move(sums), counts = std::move(counts), lo = std::move(lo),
             hi = std::move(hi), bins = std::move(bins)](const Eigen::VectorXd& s) {
    int idx = 0;
    for (std::size_t d = 0; d < bins.size(); ++d) {
      const double frac =
          (s[static_cast<int>(d)] - lo[static_cast<int>(d)]) / (hi[static_cast<int>(d)] - lo[static_cast<int>(d)]);
      int k = static_cast<int>(frac * bins[d]);
      k = std::clamp(k, 0, bins[d] - 1);
      idx = idx * bins[d] + k;
    }
    if (counts[static_cast<std::size_t>(idx)] == 0) return 0.0;
    return sums[static_cast<std::size_t>(idx)] / counts[static_cast<std::size_t>(idx)];
  };
  return Baseline{std::move(fn), bound_};
}

}  // namespace rsgf::estimate
