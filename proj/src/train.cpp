#include "rsgf/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace rsgf::train {

namespace {

// Locale-independent shortest round-trip formatting.
std::string fmt(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

std::vector<estimate::Batch> split_minibatches(const estimate::Batch& batch, int m) {
  std::vector<estimate::Batch> out(static_cast<std::size_t>(m));
  const int n = static_cast<int>(batch.size());
  const int base = n / m;
  int cursor = 0;
  for (int u = 0; u < m; ++u) {
    int take = base + (u < n % m ? 1 : 0);
    for (int k = 0; k < take; ++k) out[static_cast<std::size_t>(u)].push_back(batch[static_cast<std::size_t>(cursor++)]);
  }
  return out;
}

}  // namespace

std::string replay_rule_name(ReplayRule rule) {
  switch (rule) {
    case ReplayRule::CurrentOnly: return "current-only";
    case ReplayRule::LastTwo: return "last-two";
    case ReplayRule::Window: return "window";
    case ReplayRule::All: return "all";
  }
  return "unknown";
}

int ReplayBuffer::capacity_for(const ReplaySpec& spec, int total_iterations) {
  switch (spec.rule) {
    case ReplayRule::CurrentOnly: return 1;
    case ReplayRule::LastTwo: return 2;
    case ReplayRule::Window: return std::max(1, spec.window);
    case ReplayRule::All: return total_iterations;
  }
  return 1;
}

void ReplayBuffer::add(int iteration, std::vector<mdp::Episode> episodes) {
  store_.emplace_back(iteration, std::move(episodes));
  while (static_cast<int>(store_.size()) > capacity_) store_.pop_front();
}

estimate::Batch ReplayBuffer::select(int iteration, const ReplaySpec& spec) const {
  int window = 1;
  switch (spec.rule) {
    case ReplayRule::CurrentOnly: window = 1; break;
    case ReplayRule::LastTwo: window = 2; break;
    case ReplayRule::Window: window = std::max(1, spec.window); break;
    case ReplayRule::All: window = iteration; break;
  }
  estimate::Batch batch;
  for (const auto& [it, eps] : store_) {
    if (it > iteration || it <= iteration - window) continue;
    for (const auto& ep : eps) batch.push_back(&ep);
  }
  if (batch.empty()) throw std::runtime_error("replay: selection produced an empty batch");
  return batch;
}

TrainResult train(const TrainConfig& config, const mdp::CmdpSpec& env, policy::Policy& pi,
                  const TrainHooks& hooks) {
  if (config.alpha <= 0.0) throw std::invalid_argument("train: alpha must be positive");
  if (config.bound_C <= 0.0) throw std::invalid_argument("train: bound C must be positive");
  if (config.episodes_per_iteration < 1) throw std::invalid_argument("train: N_i >= 1 required");
  if (config.updates_per_iteration < 1) throw std::invalid_argument("train: m >= 1 required");

  Eigen::VectorXd theta = pi.params();
  if (theta.squaredNorm() > config.bound_C) {
    throw std::invalid_argument("train: initial policy violates |theta|^2 <= C");
  }

  const int q = env.num_reward_streams() - 1;
  const int d = pi.param_dim();
  const int T = env.horizon;
  const double gamma = env.gamma;
  const policy::LipschitzBounds pb = pi.lipschitz_bounds();
  const double nu = std::max(pi.nu_floor(), std::numeric_limits<double>::denorm_min());

  // Gradient-Lipschitz constants: [0] objective, [1..q] constraints.
  Eigen::VectorXd L(q + 1);
  for (int j = 0; j <= q; ++j) {
    L[j] = certify::lipschitz_L_j(env.reward_bounds[static_cast<std::size_t>(j)], pb.L, pb.B_tilde,
                                  gamma, T);
  }
  const double L_bound = certify::lipschitz_bounding(config.bound_C);

  // Baselines per stream.
  std::vector<estimate::GridBaseline> grids;
  if (config.baseline.kind == BaselineSpec::Kind::Grid) {
    for (int j = 0; j <= q; ++j) {
      grids.emplace_back(config.baseline.state_lo, config.baseline.state_hi, config.baseline.bins);
    }
  }
  const auto current_baselines = [&]() {
    std::vector<estimate::Baseline> out;
    for (int j = 0; j <= q; ++j) {
      out.push_back(config.baseline.kind == BaselineSpec::Kind::Grid
                        ? grids[static_cast<std::size_t>(j)].snapshot()
                        : estimate::zero_baseline());
    }
    return out;
  };

  ReplayBuffer buffer(ReplayBuffer::capacity_for(config.replay, config.iterations));
  TrainResult result;
  result.max_theta_norm_sq = theta.squaredNorm();

  const qcqp::BetaFn beta_fn = [&](const Eigen::VectorXd&) { return config.beta; };

  for (int i = 1; i <= config.iterations; ++i) {
    const auto t_start = std::chrono::steady_clock::now();
    buffer.add(i, mdp::rollout_batch(env, pi, config.seed, static_cast<std::uint64_t>(i),
                                     config.episodes_per_iteration, "iter" + std::to_string(i)));
    const estimate::Batch selected = buffer.select(i, config.replay);
    const auto minibatches = split_minibatches(selected, config.updates_per_iteration);
    const std::vector<estimate::Baseline> baselines = current_baselines();

    IterationMetrics row;
    row.iteration = i;

    for (const estimate::Batch& minibatch : minibatches) {
      if (minibatch.empty()) continue;
      estimate::EstimateBundle bundle;
      try {
        bundle = estimate::estimate_bundle(minibatch, pi, gamma, baselines, config.clip);
      } catch (const std::exception& e) {
        result.aborted = true;
        result.abort_message = std::string("estimation failed at iteration ") +
                               std::to_string(i) + ": " + e.what();
        if (hooks.on_abort) hooks.on_abort(pi, result.abort_message);
        result.final_params = pi.params();
        return result;
      }

      const qcqp::Problem sub =
          qcqp::build_subproblem(theta, bundle, config.alpha, beta_fn, config.bound_C);
      const qcqp::Solution sol = qcqp::solve(sub, config.solve);

      row.v_hat = bundle.values;
      row.n_episodes = bundle.batch_size;
      row.n_on_policy = bundle.on_policy_count;
      row.n_off_policy = bundle.off_policy_count;
      row.solve_status = qcqp::to_string(sol.status);

      if (sol.status == qcqp::SolveStatus::Infeasible) {
        // Freeze-and-log: the iterate stays put for this sub-update.
        ++result.infeasible_events;
        row.h = 0.0;
        row.xi_norm = 0.0;
        row.kkt_residual = std::numeric_limits<double>::quiet_NaN();
        row.multipliers = Eigen::VectorXd::Constant(q + 1, std::numeric_limits<double>::quiet_NaN());
        row.certificate = certify::SafetyCertificate{};
        row.required_n_value = Eigen::VectorXd::Constant(std::max(q, 0), std::numeric_limits<double>::quiet_NaN());
        row.required_n_grad = row.required_n_value;
        row.theta_norm_sq = theta.squaredNorm();
        continue;
      }

      const double xi_norm = sol.xi.norm();
      double h = 0.0;
      switch (config.stepsize.kind) {
        case StepsizeSpec::Kind::Constant: h = config.stepsize.value; break;
        case StepsizeSpec::Kind::InvSqrtAlpha:
          h = 1.0 / (config.alpha * std::sqrt(static_cast<double>(i)));
          break;
        case StepsizeSpec::Kind::Harmonic: h = config.stepsize.value / static_cast<double>(i); break;
        case StepsizeSpec::Kind::NormClamped:
          h = std::min(config.stepsize.value,
                       config.stepsize.clamp_scale / std::max(xi_norm, 1e-12));
          break;
      }

      // Certificate for this sub-update.
      certify::SafetyCertificate cert;
      cert.h = h;
      cert.alpha = config.alpha;
      cert.beta = config.beta;
      cert.r_norm = xi_norm;
      cert.delta = config.delta;
      cert.v_hat = bundle.values;
      cert.lipschitz = L;
      cert.margins = Eigen::VectorXd(std::max(q, 0));
      cert.value_thresholds = Eigen::VectorXd::Constant(std::max(q, 0), std::numeric_limits<double>::quiet_NaN());
      cert.gradient_thresholds = cert.value_thresholds;
      row.required_n_value = cert.value_thresholds;
      row.required_n_grad = cert.value_thresholds;
      double safe_step = 1.0 / config.alpha;
      for (int j = 1; j <= q; ++j) safe_step = std::min(safe_step, config.beta / L[j]);
      safe_step = std::min(safe_step, config.beta / L_bound);
      cert.h_within_safe_step = h < safe_step;
      cert.step_confidence_single = std::max(0.0, 1.0 - 2.0 * config.delta);
      cert.step_confidence_joint = std::max(0.0, 1.0 - 2.0 * q * config.delta);
      for (int j = 1; j <= q; ++j) {
        const double M = certify::margin(bundle.values[j], config.alpha, h, config.beta, L[j], xi_norm);
        cert.margins[j - 1] = M;
        if (M > 0.0) {
          const auto constants = estimate::stat_constants(
              env.reward_bounds[static_cast<std::size_t>(j)],
              baselines[static_cast<std::size_t>(j)].bound, gamma, T, nu, pb.B_tilde);
          const auto req = certify::episodes_required(
              M, config.delta, constants.phi, constants.phi_bar,
              certify::GradientConstants{constants.psi, constants.psi_bar, d});
          cert.value_thresholds[j - 1] = req.value_threshold;
          cert.gradient_thresholds[j - 1] = req.gradient_threshold;
          row.required_n_value[j - 1] = static_cast<double>(req.n_value);
          row.required_n_grad[j - 1] = static_cast<double>(req.n_gradient);
        }
      }

      theta += h * sol.xi;
      bool nan_found = false;
      for (int k = 0; k < theta.size(); ++k) nan_found = nan_found || !std::isfinite(theta[k]);
      if (nan_found) {
        result.aborted = true;
        result.abort_message = "NaN parameter update at iteration " + std::to_string(i);
        if (hooks.on_abort) hooks.on_abort(pi, result.abort_message);
        result.final_params = pi.params();
        return result;
      }
      pi.set_params(theta);
      result.max_theta_norm_sq = std::max(result.max_theta_norm_sq, theta.squaredNorm());

      row.h = h;
      row.xi_norm = xi_norm;
      row.kkt_residual = sol.kkt_residual;
      row.multipliers = sol.multipliers;
      row.certificate = cert;
      row.theta_norm_sq = theta.squaredNorm();
      // Variance bound used by the convergence diagnostics.
      double psi_max = 0.0;
      for (int j = 0; j <= q; ++j) {
        const auto constants = estimate::stat_constants(
            env.reward_bounds[static_cast<std::size_t>(j)],
            baselines[static_cast<std::size_t>(j)].bound, gamma, T, nu, pb.B_tilde);
        const double bound = (bundle.on_policy_count * constants.psi * constants.psi +
                              bundle.off_policy_count * constants.psi_bar * constants.psi_bar) /
                             (static_cast<double>(bundle.batch_size) * bundle.batch_size);
        psi_max = std::max(psi_max, bound);
      }
      row.grad_var_bound = psi_max;
    }

    if (config.baseline.kind == BaselineSpec::Kind::Grid) {
      const estimate::Batch current = buffer.select(i, ReplaySpec{ReplayRule::CurrentOnly, 1});
      for (int j = 0; j <= q; ++j) grids[static_cast<std::size_t>(j)].update(current, j, gamma);
    }

    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            t_start)
                      .count();
    result.metrics.push_back(std::move(row));

    if (config.checkpoint_interval > 0 && i % config.checkpoint_interval == 0 && hooks.on_checkpoint) {
      hooks.on_checkpoint(i, pi);
    }
  }

  result.final_params = pi.params();
  return result;
}

void write_metrics_csv(std::ostream& out, const std::vector<IterationMetrics>& metrics) {
  out << "# rsgf-metrics-v1\n";
  if (metrics.empty()) return;
  const int q1 = static_cast<int>(metrics.front().v_hat.size());
  const int q = q1 - 1;
  out << "iteration,h,solve_status";
  for (int j = 0; j < q1; ++j) out << ",v_hat_" << j;
  out << ",xi_norm,kkt_residual";
  for (int j = 1; j <= q + 1; ++j) out << ",u_" << j;
  for (int j = 1; j <= q; ++j) out << ",margin_" << j;
  for (int j = 1; j <= q; ++j) out << ",req_n_value_" << j;
  for (int j = 1; j <= q; ++j) out << ",req_n_grad_" << j;
  out << ",conf_step,conf_joint,h_safe_step,grad_var_bound,theta_norm_sq,n_episodes,n_on_policy,n_off_policy\n";
  for (const auto& row : metrics) {
    out << row.iteration << ',' << fmt(row.h) << ',' << row.solve_status;
    for (int j = 0; j < q1; ++j) out << ',' << fmt(row.v_hat[j]);
    out << ',' << fmt(row.xi_norm) << ',' << fmt(row.kkt_residual);
    for (int j = 0; j <= q; ++j) {
      out << ',' << (j < row.multipliers.size() ? fmt(row.multipliers[j]) : "nan");
    }
    for (int j = 0; j < q; ++j) {
      out << ',' << (j < row.certificate.margins.size() ? fmt(row.certificate.margins[j]) : "nan");
    }
    for (int j = 0; j < q; ++j) out << ',' << fmt(row.required_n_value[j]);
    for (int j = 0; j < q; ++j) out << ',' << fmt(row.required_n_grad[j]);
    out << ',' << fmt(row.certificate.step_confidence_single) << ','
        << fmt(row.certificate.step_confidence_joint) << ','
        << (row.certificate.h_within_safe_step ? 1 : 0) << ',' << fmt(row.grad_var_bound) << ','
        << fmt(row.theta_norm_sq) << ',' << row.n_episodes << ',' << row.n_on_policy << ','
        << row.n_off_policy << '\n';
  }
}

void write_timings_csv(std::ostream& out, const std::vector<IterationMetrics>& metrics) {
  out << "# rsgf-timings-v1\n";
  out << "iteration,wall_ms\n";
  for (const auto& row : metrics) out << row.iteration << ',' << fmt(row.wall_ms) << '\n';
}

ConvergenceReport convergence_diagnostics(const std::vector<IterationMetrics>& metrics,
                                          const TrainConfig& config) {
  ConvergenceReport report;
  double running = std::numeric_limits<double>::infinity();
  double ell_hat = 0.0;
  double max_u = 0.0;
  double sigma_bar = 0.0;
  for (const auto& row : metrics) {
    running = std::min(running, row.xi_norm * row.xi_norm);
    report.running_min_xi_sq.push_back(running);
    ell_hat = std::max(ell_hat, row.xi_norm);
    for (int j = 0; j < row.multipliers.size(); ++j) {
      if (std::isfinite(row.multipliers[j])) max_u = std::max(max_u, row.multipliers[j]);
    }
    sigma_bar = std::max(sigma_bar, row.grad_var_bound);
  }

  switch (config.stepsize.kind) {
    case StepsizeSpec::Kind::Constant:
      report.schedule_flag = "violated: constant h_i does not vanish";
      break;
    case StepsizeSpec::Kind::NormClamped:
      report.schedule_flag = "violated: norm-clamped h_i does not vanish";
      break;
    case StepsizeSpec::Kind::InvSqrtAlpha:
      report.stepsize_vanishes = true;
      report.stepsize_sum_diverges = true;
      report.schedule_flag = "satisfied: h_i = 1/(alpha sqrt(i)) vanishes with divergent sum";
      break;
    case StepsizeSpec::Kind::Harmonic:
      report.stepsize_vanishes = true;
      report.stepsize_sum_diverges = true;
      report.schedule_flag = "satisfied: h_i = c/i vanishes with divergent sum";
      break;
  }
  report.batch_flag = "episode count constant per iteration; vanishing estimation noise "
                      "requires growing batches";

  if (!metrics.empty()) {
    const int q = static_cast<int>(metrics.front().v_hat.size()) - 1;
    const double eps_star = 1.0 / (2.0 * std::max(max_u, 1.0));
    const double eps = report.running_min_xi_sq.back();
    // kappa per the finite-iteration bound: B_u alpha + L* ell / alpha, with
    // B_u the observed spread of the penalty function and L* from the
    // certificate's Lipschitz constants.
    double v_min = std::numeric_limits<double>::infinity();
    double v_max = -std::numeric_limits<double>::infinity();
    for (const auto& row : metrics) {
      double v = row.v_hat[0];
      for (int j = 1; j <= q; ++j) v += std::max(row.v_hat[j], 0.0) / eps_star;
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
    }
    const Eigen::VectorXd& L = metrics.back().certificate.lipschitz;
    double L_star = 0.0;
    if (L.size() == q + 1) {
      L_star = L[0] / 2.0;
      for (int j = 1; j <= q; ++j) L_star += L[j] / (2.0 * eps_star);
    }
    const double B_u = std::max(v_max - v_min, 0.0);
    const double kappa = B_u * config.alpha + L_star * ell_hat / config.alpha;
    try {
      report.theorem3_bound =
          certify::theorem3_iteration_bound(kappa, eps, ell_hat, sigma_bar, q, eps_star);
      report.theorem3_note = "bound applies with eps = running min |xi|^2";
    } catch (const std::exception&) {
      report.theorem3_note = "precondition fails: variance correction exceeds eps";
    }
  }
  return report;
}

}  // namespace rsgf::train
