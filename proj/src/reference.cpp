#include "rsgf/reference.hpp"

#include <algorithm>
#include <cmath>

namespace rsgf::reference {

double is_weight_product(const mdp::Episode& episode, const policy::Policy& target,
                         const policy::Policy& behavior) {
  double w = 1.0;
  for (int t = 0; t < episode.realized_steps; ++t) {
    const Eigen::VectorXd a = episode.actions.row(t);
    const Eigen::VectorXd s = episode.states.row(t);
    w *= std::exp(target.log_prob(a, s)) / std::exp(behavior.log_prob(a, s));
  }
  return w;
}

double estimate_value(int j, const estimate::Batch& batch, const policy::Policy& target,
                      double gamma, const std::optional<estimate::ClipRange>& clip) {
  const double sign = j == 0 ? -1.0 : 1.0;
  double acc = 0.0;
  for (const mdp::Episode* ep : batch) {
    double w = estimate::is_weight(*ep, target, std::nullopt);
    if (clip) w = std::clamp(w, clip->lo, clip->hi);
    double ret = 0.0;
    double discount = 1.0;
    for (int t = 0; t < ep->rewards.cols(); ++t) {
      ret += discount * ep->rewards(j, t);
      discount *= gamma;
    }
    acc += w * ret;
  }
  return sign * acc / static_cast<double>(batch.size());
}

Eigen::VectorXd estimate_gradient(int j, const estimate::Batch& batch,
                                  const policy::Policy& target, double gamma,
                                  const estimate::Baseline& baseline,
                                  const std::optional<estimate::ClipRange>& clip) {
  const double sign = j == 0 ? -1.0 : 1.0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(target.param_dim());
  for (const mdp::Episode* ep : batch) {
    double w = estimate::is_weight(*ep, target, std::nullopt);
    if (clip) w = std::clamp(w, clip->lo, clip->hi);
    Eigen::VectorXd term = Eigen::VectorXd::Zero(target.param_dim());
    for (int t = 0; t < ep->realized_steps; ++t) {
      double togo = 0.0;
      for (int tp = t; tp < ep->rewards.cols(); ++tp) {
        togo += std::pow(gamma, tp - t) * ep->rewards(j, tp);
      }
      const Eigen::VectorXd s = ep->states.row(t);
      term += std::pow(gamma, t) * (togo - baseline.fn(s)) *
              target.grad_log_prob(ep->actions.row(t), s);
    }
    acc += w * term;
  }
  return sign * acc / static_cast<double>(batch.size());
}

double value_weightless(int j, const estimate::Batch& batch, double gamma) {
  const double sign = j == 0 ? -1.0 : 1.0;
  double acc = 0.0;
  for (const mdp::Episode* ep : batch) {
    double discount = 1.0;
    for (int t = 0; t < ep->rewards.cols(); ++t) {
      acc += discount * ep->rewards(j, t);
      discount *= gamma;
    }
  }
  return sign * acc / static_cast<double>(batch.size());
}

std::vector<mdp::Episode> rollout_batch(const mdp::CmdpSpec& spec, const policy::Policy& pi,
                                        std::uint64_t seed, std::uint64_t iteration, int n,
                                        const std::string& behavior_tag) {
  std::vector<mdp::Episode> episodes;
  episodes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, iteration, static_cast<std::uint64_t>(i));
    episodes.push_back(mdp::rollout(spec, pi, rng, behavior_tag));
  }
  return episodes;
}

}  // namespace rsgf::reference
