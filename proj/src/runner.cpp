#include "rsgf/runner.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "rsgf/flow.hpp"
#include "rsgf/reference.hpp"

namespace rsgf::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

void write_manifest(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  nlohmann::json manifest;
  manifest["artifact"] = "rsgf";
  manifest["version"] = "0.1.0";
  manifest["schemas"] = {{"metrics", "rsgf-metrics-v1"},
                         {"timings", "rsgf-timings-v1"},
                         {"trace", "rsgf-trace-v1"},
                         {"policy", "rsgf-policy-v1"},
                         {"episodes", "rsgf-episodes-v1"}};
  manifest["seed"] = config.seed;
  manifest["config"] = to_json(config);
  std::ofstream f(fs::path(config.out_dir) / "manifest.json");
  f << manifest.dump(2) << "\n";
}

Eigen::VectorXd default_start(const std::string& fixture) {
  if (fixture == "banana") return Eigen::Vector2d(-0.5, 0.5);
  return Eigen::Vector2d(0.0, 0.0);
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& config) {
  Experiment ex;
  if (config.environment == "tabular") {
    envs::TabularFixture fixture = envs::make_tabular_fixture(config.horizon, config.gamma);
    ex.spec = std::move(fixture.spec);
    ex.policy = fixture.policy.clone();
    return ex;
  }
  if (config.environment == "nav2d") {
    ex.spec = envs::make_nav2d(config.nav2d, config.horizon, config.gamma);
  } else if (config.environment == "cartpole") {
    ex.spec = envs::make_cartpole(config.cartpole, config.horizon, config.gamma);
  } else {
    throw std::runtime_error("unknown environment " + config.environment);
  }
  const auto& pc = config.policy;
  if (static_cast<int>(pc.center_box.size()) != ex.spec.state_dim ||
      static_cast<int>(pc.centers_per_dim.size()) != ex.spec.state_dim) {
    throw std::runtime_error("policy config: center grid must match the state dimension");
  }
  if (static_cast<int>(pc.action_box.size()) != ex.spec.action_dim ||
      static_cast<int>(pc.action_cov.size()) != ex.spec.action_dim) {
    throw std::runtime_error("policy config: action box/covariance must match the action dimension");
  }
  Eigen::VectorXd slo(ex.spec.state_dim), shi(ex.spec.state_dim);
  for (int d = 0; d < ex.spec.state_dim; ++d) {
    slo[d] = pc.center_box[static_cast<std::size_t>(d)][0];
    shi[d] = pc.center_box[static_cast<std::size_t>(d)][1];
  }
  Eigen::VectorXd avar(ex.spec.action_dim), alo(ex.spec.action_dim), ahi(ex.spec.action_dim);
  for (int d = 0; d < ex.spec.action_dim; ++d) {
    avar[d] = pc.action_cov[static_cast<std::size_t>(d)];
    alo[d] = pc.action_box[static_cast<std::size_t>(d)][0];
    ahi[d] = pc.action_box[static_cast<std::size_t>(d)][1];
  }
  ex.policy = std::make_unique<policy::RbfGaussianPolicy>(
      policy::make_center_grid(slo, shi, pc.centers_per_dim), pc.rbf_variance, avar, alo, ahi);
  return ex;
}

int run_flow(const ExperimentConfig& config, std::ostream& log) {
  write_manifest(config);
  flow::AnalyticProblem problem;
  try {
    problem = flow::make_fixture(config.flow.fixture);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
  Eigen::VectorXd theta0;
  if (!config.flow.theta0.empty()) {
    theta0 = Eigen::Map<const Eigen::VectorXd>(config.flow.theta0.data(),
                                               static_cast<Eigen::Index>(config.flow.theta0.size()));
  } else {
    theta0 = default_start(config.flow.fixture);
  }

  flow::Schedule schedule;
  if (config.flow.schedule.kind == "constant") schedule.kind = flow::Schedule::Kind::Constant;
  else if (config.flow.schedule.kind == "invsqrt") schedule.kind = flow::Schedule::Kind::InvSqrt;
  else if (config.flow.schedule.kind == "harmonic") schedule.kind = flow::Schedule::Kind::Harmonic;
  else {
    log << "error: unknown flow schedule kind '" << config.flow.schedule.kind << "'\n";
    return 2;
  }
  schedule.c = config.flow.schedule.value;
  schedule.enforce_safe_step = config.flow.schedule.cap_safe_step;
  schedule.cap_factor = config.flow.schedule.cap_factor;

  const double beta = config.flow.beta;
  flow::Trace trace;
  try {
    trace = flow::integrate(problem, theta0, config.flow.alpha,
                            [beta](const Eigen::VectorXd&) { return beta; }, schedule,
                            config.flow.iterations);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }

  std::ofstream csv(fs::path(config.out_dir) / "trace.csv");
  csv << "# rsgf-trace-v1\n";
  const int q = static_cast<int>(problem.constraints.size());
  const int d = problem.dim;
  csv << "iteration,h,xi_norm,subproblem_kkt,outer_kkt";
  for (int j = 1; j <= q; ++j) csv << ",v_" << j;
  for (int k = 0; k < d; ++k) csv << ",theta_" << k;
  csv << "\n";
  for (std::size_t i = 0; i < trace.directions.size(); ++i) {
    const Eigen::VectorXd& th = trace.iterates[i + 1];
    const auto check = flow::kkt_check(problem, th, 1e-6);
    csv << (i + 1) << ',' << fmt(trace.stepsizes[i]) << ',' << fmt(trace.directions[i].norm())
        << ',' << fmt(trace.kkt_residuals[i]) << ',' << fmt(check.residual);
    for (int j = 0; j < q; ++j) csv << ',' << fmt(trace.constraint_values[i + 1][static_cast<std::size_t>(j)]);
    for (int k = 0; k < d; ++k) csv << ',' << fmt(th[k]);
    csv << "\n";
  }
  if (trace.infeasible_at) {
    log << "flow: subproblem infeasible at iteration " << *trace.infeasible_at << "\n";
    return 1;
  }
  const auto final_check = flow::kkt_check(problem, trace.iterates.back(), 1e-6);
  log << "flow: " << trace.directions.size() << " steps, final outer KKT residual "
      << fmt(final_check.residual) << "\n";
  return 0;
}

int run_train(const ExperimentConfig& config, std::ostream& log) {
  write_manifest(config);
  Experiment ex = build_experiment(config);
  train::TrainConfig tc = config.train;
  tc.seed = config.seed;

  const fs::path out(config.out_dir);
  train::TrainHooks hooks;
  hooks.on_checkpoint = [&](int iteration, const policy::Policy& pi) {
    if (const auto* rbf = dynamic_cast<const policy::RbfGaussianPolicy*>(&pi)) {
      rbf->save_checkpoint((out / ("policy_iter_" + std::to_string(iteration) + ".json")).string());
    }
  };
  hooks.on_abort = [&](const policy::Policy& pi, const std::string& reason) {
    log << "train: aborted: " << reason << "\n";
    if (const auto* rbf = dynamic_cast<const policy::RbfGaussianPolicy*>(&pi)) {
      rbf->save_checkpoint((out / "policy_abort.json").string());
    }
  };

  const train::TrainResult result = train::train(tc, ex.spec, *ex.policy, hooks);

  {
    std::ofstream metrics(out / "metrics.csv");
    train::write_metrics_csv(metrics, result.metrics);
    std::ofstream timings(out / "timings.csv");
    train::write_timings_csv(timings, result.metrics);
  }
  if (const auto* rbf = dynamic_cast<const policy::RbfGaussianPolicy*>(ex.policy.get())) {
    rbf->save_checkpoint((out / "policy_final.json").string());
  }
  const train::ConvergenceReport report = train::convergence_diagnostics(result.metrics, tc);
  {
    std::ofstream diag(out / "diagnostics.txt");
    diag << "stepsize schedule: " << report.schedule_flag << "\n";
    diag << "batch sizes: " << report.batch_flag << "\n";
    if (!report.running_min_xi_sq.empty()) {
      diag << "running min |xi|^2: " << fmt(report.running_min_xi_sq.back()) << "\n";
    }
    if (report.theorem3_bound) {
      diag << "finite-iteration bound: " << fmt(*report.theorem3_bound) << " (" << report.theorem3_note
           << ")\n";
    } else {
      diag << "finite-iteration bound: not applicable (" << report.theorem3_note << ")\n";
    }
  }
  log << "train: " << result.metrics.size() << " iterations, max |theta|^2 "
      << fmt(result.max_theta_norm_sq) << ", infeasible events " << result.infeasible_events
      << "\n";
  if (result.aborted) {
    log << "train: aborted: " << result.abort_message << "\n";
    return 1;
  }
  return 0;
}

int run_certify(const ExperimentConfig& config, std::ostream& log) {
  write_manifest(config);
  const CertifyConfig& c = config.certify;
  try {
    const double phi_bar = c.phi_bar.value_or(c.phi);
    std::optional<certify::GradientConstants> grad;
    if (c.gradient) grad = certify::GradientConstants{c.gradient->psi, c.gradient->psi_bar, c.gradient->dim};
    const auto req = certify::episodes_required(c.margin, c.delta, c.phi, phi_bar, grad);
    log << "margin                 " << fmt(c.margin) << "\n";
    log << "delta                  " << fmt(c.delta) << "\n";
    log << "value threshold        " << fmt(req.value_threshold) << "\n";
    log << "episodes (value)       " << req.n_value << "\n";
    if (c.gradient) {
      log << "gradient threshold     " << fmt(req.gradient_threshold) << "\n";
      log << "episodes (gradient)    " << req.n_gradient << "\n";
    }
    log << "episodes required      " << req.n_required << "\n";
    log << "per-step confidence    " << fmt(std::max(0.0, 1.0 - 2.0 * c.delta)) << "\n";
    log << "joint confidence       " << fmt(std::max(0.0, 1.0 - 2.0 * c.q * c.delta)) << "\n";
    log << "horizon confidence     "
        << fmt(certify::horizon_confidence(c.q, c.horizon, c.horizon_delta)) << "  (q=" << c.q
        << ", H=" << c.horizon << ", delta=" << fmt(c.horizon_delta) << ")\n";
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_validate(const ExperimentConfig& config, std::ostream& log) {
  write_manifest(config);
  envs::TabularFixture fixture = envs::make_tabular_fixture();
  const mdp::CmdpSpec& spec = fixture.spec;
  policy::DiscretizedRbfPolicy target = fixture.policy;
  Eigen::VectorXd theta_target(2);
  theta_target << 0.3, -0.2;
  target.set_params(theta_target);
  policy::DiscretizedRbfPolicy behavior = fixture.policy;
  Eigen::VectorXd theta_behavior(2);
  theta_behavior << -0.1, 0.25;
  behavior.set_params(theta_behavior);

  const ValidateConfig& v = config.validate;
  const int q1 = spec.num_reward_streams();
  const int d = target.param_dim();
  const double nu = target.nu_floor();
  const policy::LipschitzBounds pb = target.lipschitz_bounds();

  Eigen::VectorXd oracle_v(q1);
  std::vector<Eigen::VectorXd> oracle_g(static_cast<std::size_t>(q1));
  for (int j = 0; j < q1; ++j) {
    oracle_v[j] = mdp::oracle_value(spec, target, j);
    oracle_g[static_cast<std::size_t>(j)] = mdp::oracle_gradient(spec, target, j);
  }

  const std::vector<estimate::Baseline> baselines(static_cast<std::size_t>(q1),
                                                  estimate::zero_baseline());
  const std::vector<double> eps_grid = {0.1, 0.5, 1.0};
  bool all_ok = true;
  const char* modes[] = {"on-policy", "off-policy", "mixed"};

  for (int mode = 0; mode < 3; ++mode) {
    Eigen::VectorXd mean_v = Eigen::VectorXd::Zero(q1);
    Eigen::VectorXd m2_v = Eigen::VectorXd::Zero(q1);
    Eigen::MatrixXd mean_g = Eigen::MatrixXd::Zero(d, q1);
    Eigen::MatrixXd m2_g = Eigen::MatrixXd::Zero(d, q1);
    long bound_violations = 0;
    std::vector<Eigen::VectorXd> tail_v_hits(static_cast<std::size_t>(q1),
                                             Eigen::VectorXd::Zero(static_cast<Eigen::Index>(eps_grid.size())));
    std::vector<Eigen::VectorXd> tail_g_hits = tail_v_hits;
    Eigen::VectorXd tail_bounds_v(static_cast<Eigen::Index>(eps_grid.size()));
    Eigen::VectorXd tail_bounds_g(static_cast<Eigen::Index>(eps_grid.size()));

    int n_bar_cfg = v.batch_size, n_tilde_cfg = 0;
    if (mode == 1) { n_bar_cfg = 0; n_tilde_cfg = v.batch_size; }
    if (mode == 2) { n_bar_cfg = v.batch_size / 2; n_tilde_cfg = v.batch_size - v.batch_size / 2; }

    for (int trial = 0; trial < v.trials; ++trial) {
      std::vector<mdp::Episode> episodes;
      for (int e = 0; e < n_bar_cfg; ++e) {
        Rng rng = Rng::stream(config.seed, static_cast<std::uint64_t>(mode) * 1000003u + trial, e);
        episodes.push_back(mdp::rollout(spec, target, rng, "target"));
      }
      for (int e = 0; e < n_tilde_cfg; ++e) {
        Rng rng = Rng::stream(config.seed ^ 0x5bf0u, static_cast<std::uint64_t>(mode) * 1000003u + trial,
                              n_bar_cfg + e);
        episodes.push_back(mdp::rollout(spec, behavior, rng, "behavior"));
      }
      const estimate::Batch batch = estimate::as_batch(episodes);
      const estimate::EstimateBundle bundle =
          estimate::estimate_bundle(batch, target, spec.gamma, baselines, v.clip);

      for (int j = 0; j < q1; ++j) {
        const double dv = bundle.values[j] - mean_v[j];
        mean_v[j] += dv / (trial + 1);
        m2_v[j] += dv * (bundle.values[j] - mean_v[j]);
        for (int k = 0; k < d; ++k) {
          const double dg = bundle.gradients[static_cast<std::size_t>(j)][k] - mean_g(k, j);
          mean_g(k, j) += dg / (trial + 1);
          m2_g(k, j) += dg * (bundle.gradients[static_cast<std::size_t>(j)][k] - mean_g(k, j));
        }
        const auto cst = estimate::stat_constants(spec.reward_bounds[static_cast<std::size_t>(j)],
                                                  0.0, spec.gamma, spec.horizon, nu, pb.B_tilde);
        const double J = static_cast<double>(bundle.batch_size);
        const double vb = (bundle.on_policy_count * cst.phi + bundle.off_policy_count * cst.phi_bar) / J;
        const double gb = (bundle.on_policy_count * cst.psi + bundle.off_policy_count * cst.psi_bar) / J;
        if (std::abs(bundle.values[j]) > vb + 1e-12) ++bound_violations;
        for (int k = 0; k < d; ++k) {
          if (std::abs(bundle.gradients[static_cast<std::size_t>(j)][k]) > gb + 1e-12) ++bound_violations;
        }
        for (std::size_t ei = 0; ei < eps_grid.size(); ++ei) {
          if (std::abs(bundle.values[j] - oracle_v[j]) <= eps_grid[ei]) {
            tail_v_hits[static_cast<std::size_t>(j)][static_cast<Eigen::Index>(ei)] += 1.0;
          }
          if ((bundle.gradients[static_cast<std::size_t>(j)] - oracle_g[static_cast<std::size_t>(j)]).norm() <=
              eps_grid[ei]) {
            tail_g_hits[static_cast<std::size_t>(j)][static_cast<Eigen::Index>(ei)] += 1.0;
          }
          tail_bounds_v[static_cast<Eigen::Index>(ei)] = estimate::tail_bound_value(
              eps_grid[ei], J, bundle.on_policy_count, bundle.off_policy_count, cst.phi, cst.phi_bar);
          tail_bounds_g[static_cast<Eigen::Index>(ei)] = estimate::tail_bound_gradient(
              eps_grid[ei], J, bundle.on_policy_count, bundle.off_policy_count, cst.psi, cst.psi_bar, d);
        }
      }
    }

    // Unbiasedness: skipped under clipping (the clipped estimator is biased).
    if (v.clip) {
      log << "[SKIP] unbiasedness (" << modes[mode] << "): the unbiasedness guarantees assume unclipped weights\n";
    } else {
      bool ok = true;
      for (int j = 0; j < q1; ++j) {
        const double se_v = std::sqrt(m2_v[j] / v.trials / v.trials);
        if (std::abs(mean_v[j] - oracle_v[j]) > v.tolerance_se * std::max(se_v, 1e-14)) ok = false;
        for (int k = 0; k < d; ++k) {
          const double se_g = std::sqrt(m2_g(k, j) / v.trials / v.trials);
          if (std::abs(mean_g(k, j) - oracle_g[static_cast<std::size_t>(j)][k]) >
              v.tolerance_se * std::max(se_g, 1e-14)) {
            ok = false;
          }
        }
      }
      log << (ok ? "[PASS]" : "[FAIL]") << " unbiasedness (" << modes[mode] << "): value and "
          << "gradient means within " << v.tolerance_se << " SE of the enumeration oracle\n";
      all_ok = all_ok && ok;
    }

    const bool bounds_ok = bound_violations == 0;
    log << (bounds_ok ? "[PASS]" : "[FAIL]") << " uniform bounds (" << modes[mode]
        << "): " << bound_violations << " violations\n";
    all_ok = all_ok && bounds_ok;

    bool tails_ok = true;
    for (int j = 0; j < q1; ++j) {
      for (std::size_t ei = 0; ei < eps_grid.size(); ++ei) {
        const double freq_v = tail_v_hits[static_cast<std::size_t>(j)][static_cast<Eigen::Index>(ei)] / v.trials;
        const double freq_g = tail_g_hits[static_cast<std::size_t>(j)][static_cast<Eigen::Index>(ei)] / v.trials;
        if (freq_v < tail_bounds_v[static_cast<Eigen::Index>(ei)]) tails_ok = false;
        if (freq_g < tail_bounds_g[static_cast<Eigen::Index>(ei)]) tails_ok = false;
      }
    }
    if (v.clip) {
      log << "[SKIP] tail calibration (" << modes[mode] << "): bounds assume unclipped weights\n";
    } else {
      log << (tails_ok ? "[PASS]" : "[FAIL]") << " tail calibration (" << modes[mode]
          << "): frequencies above the probability lower bounds\n";
      all_ok = all_ok && tails_ok;
    }
  }
  return all_ok ? 0 : 1;
}

int run(const ExperimentConfig& config, std::ostream& log) {
  if (config.mode == "flow") return run_flow(config, log);
  if (config.mode == "train") return run_train(config, log);
  if (config.mode == "certify") return run_certify(config, log);
  if (config.mode == "validate") return run_validate(config, log);
  log << "error: unknown mode " << config.mode << "\n";
  return 2;
}

}  // namespace rsgf::cli
