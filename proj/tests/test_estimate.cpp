#include <doctest.h>

#include <Eigen/Core>

#include <cmath>

#include "rsgf/envs.hpp"
#include "rsgf/estimate.hpp"
#include "rsgf/reference.hpp"

using namespace rsgf;

namespace {

envs::TabularFixture fixture() { return envs::make_tabular_fixture(); }

policy::DiscretizedRbfPolicy with_theta(const policy::DiscretizedRbfPolicy& pi, double a, double b) {
  auto out = pi;
  Eigen::VectorXd theta(2);
  theta << a, b;
  out.set_params(theta);
  return out;
}

std::vector<mdp::Episode> sample_episodes(const mdp::CmdpSpec& spec, const policy::Policy& pi,
                                          std::uint64_t seed, int n) {
  std::vector<mdp::Episode> out;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(seed, 0, static_cast<std::uint64_t>(i));
    out.push_back(mdp::rollout(spec, pi, rng));
  }
  return out;
}

}  // namespace

TEST_CASE("is_weight is exactly one on-policy") {
  auto fix = fixture();
  const auto target = with_theta(fix.policy, 0.3, -0.2);
  const auto episodes = sample_episodes(fix.spec, target, 11, 20);
  for (const auto& ep : episodes) {
    CHECK(estimate::is_weight(ep, target) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(estimate::is_on_policy(ep, target));
  }
}

TEST_CASE("is_weight clamps a known raw weight to the clip range") {
  auto fix = fixture();
  const auto target = with_theta(fix.policy, 0.0, 0.0);
  Rng rng(3);
  mdp::Episode ep = mdp::rollout(fix.spec, target, rng);
  // Force the cached behavior log-prob so the raw weight is exactly 3.7.
  double log_target = 0.0;
  for (int t = 0; t < ep.realized_steps; ++t) {
    log_target += target.log_prob(ep.actions.row(t), ep.states.row(t));
  }
  ep.behavior_log_prob = log_target - std::log(3.7);
  CHECK(estimate::is_weight(ep, target) == doctest::Approx(3.7).epsilon(1e-12));
  CHECK(estimate::is_weight(ep, target, estimate::ClipRange{0.8, 1.2}) == 1.2);
}

TEST_CASE("is_weight clips the trajectory weight") {
  auto fix = fixture();
  const auto behavior = with_theta(fix.policy, -0.6, 0.6);
  const auto target = with_theta(fix.policy, 0.6, -0.6);
  const auto episodes = sample_episodes(fix.spec, behavior, 13, 200);
  bool clipped_high = false;
  for (const auto& ep : episodes) {
    const double raw = estimate::is_weight(ep, target);
    const double clipped = estimate::is_weight(ep, target, estimate::ClipRange{0.8, 1.2});
    CHECK(clipped >= 0.8);
    CHECK(clipped <= 1.2);
    if (raw > 1.2) {
      CHECK(clipped == 1.2);
      clipped_high = true;
    }
  }
  CHECK(clipped_high);  // the parameter gap is large enough to trigger clipping
}

TEST_CASE("log-space weight equals the naive per-step product") {
  auto fix = fixture();
  fix.spec.horizon = 5;
  const auto behavior = with_theta(fix.policy, -0.3, 0.4);
  const auto target = with_theta(fix.policy, 0.5, 0.1);
  const auto episodes = sample_episodes(fix.spec, behavior, 17, 100);
  for (const auto& ep : episodes) {
    const double log_space = estimate::is_weight(ep, target);
    const double product = reference::is_weight_product(ep, target, behavior);
    CHECK(std::abs(log_space - product) <= 1e-10);
  }
}

TEST_CASE("estimate_value worked examples") {
  auto fix = fixture();
  const auto target = with_theta(fix.policy, 0.0, 0.0);

  SUBCASE("zero rewards estimate to zero") {
    auto spec = fix.spec;
    spec.rewards[1] = [](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return 0.0;
    };
    const auto episodes = sample_episodes(spec, target, 19, 10);
    CHECK(estimate::estimate_value(1, estimate::as_batch(episodes), target, spec.gamma) ==
          doctest::Approx(0.0));
  }

  SUBCASE("one on-policy episode with unit rewards, gamma 0.5, T = 1") {
    auto spec = fix.spec;
    spec.horizon = 1;
    spec.rewards[1] = [](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return 1.0;
    };
    spec.reward_bounds[1] = 1.0;
    const auto episodes = sample_episodes(spec, target, 23, 1);
    CHECK(estimate::estimate_value(1, estimate::as_batch(episodes), target, 0.5) ==
          doctest::Approx(1.5).epsilon(1e-12));
  }

  SUBCASE("empty batch errors") {
    CHECK_THROWS(estimate::estimate_value(0, {}, target, 0.5));
  }
}

TEST_CASE("estimate_gradient zero case and baseline bound enforcement") {
  auto fix = fixture();
  const auto target = with_theta(fix.policy, 0.1, 0.2);
  auto spec = fix.spec;
  for (auto& r : spec.rewards) {
    r = [](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.0; };
  }
  const auto episodes = sample_episodes(spec, target, 29, 10);
  const auto batch = estimate::as_batch(episodes);
  CHECK(estimate::estimate_gradient(0, batch, target, spec.gamma, estimate::zero_baseline()).norm() ==
        doctest::Approx(0.0));

  estimate::Baseline lying{[](const Eigen::VectorXd&) { return 2.0; }, 1.0};
  CHECK_THROWS(estimate::estimate_gradient(0, batch, target, spec.gamma, lying));
}

TEST_CASE("bundle agrees with single-stream estimators and the serial reference") {
  auto fix = fixture();
  const auto behavior = with_theta(fix.policy, -0.2, 0.3);
  const auto target = with_theta(fix.policy, 0.4, -0.1);
  auto episodes = sample_episodes(fix.spec, behavior, 31, 40);
  auto on_policy = sample_episodes(fix.spec, target, 37, 40);
  episodes.insert(episodes.end(), on_policy.begin(), on_policy.end());
  const auto batch = estimate::as_batch(episodes);
  const std::vector<estimate::Baseline> baselines(2, estimate::zero_baseline());

  const auto bundle = estimate::estimate_bundle(batch, target, fix.spec.gamma, baselines);
  CHECK(bundle.batch_size == 80);
  CHECK(bundle.on_policy_count == 40);
  CHECK(bundle.off_policy_count == 40);

  for (int j = 0; j < 2; ++j) {
    const double direct = estimate::estimate_value(j, batch, target, fix.spec.gamma);
    CHECK(bundle.values[j] == doctest::Approx(direct).epsilon(1e-12));
    const double serial = reference::estimate_value(j, batch, target, fix.spec.gamma);
    CHECK(bundle.values[j] == doctest::Approx(serial).epsilon(1e-12));
    const Eigen::VectorXd direct_g =
        estimate::estimate_gradient(j, batch, target, fix.spec.gamma, baselines[0]);
    const Eigen::VectorXd serial_g =
        reference::estimate_gradient(j, batch, target, fix.spec.gamma, baselines[0]);
    CHECK((bundle.gradients[static_cast<std::size_t>(j)] - direct_g).norm() <= 1e-13);
    CHECK((bundle.gradients[static_cast<std::size_t>(j)] - serial_g).norm() <= 1e-13);
  }
}

TEST_CASE("on-policy estimates equal the weightless reference to 1e-12") {
  auto fix = fixture();
  const auto target = with_theta(fix.policy, 0.15, -0.35);
  const auto episodes = sample_episodes(fix.spec, target, 41, 60);
  const auto batch = estimate::as_batch(episodes);
  for (int j = 0; j < 2; ++j) {
    const double weighted = estimate::estimate_value(j, batch, target, fix.spec.gamma);
    const double weightless = reference::value_weightless(j, batch, fix.spec.gamma);
    CHECK(std::abs(weighted - weightless) <= 1e-12);
  }
}

TEST_CASE("unbiasedness against the enumeration oracle (reduced trials)") {
  auto fix = fixture();
  const auto target = with_theta(fix.policy, 0.3, -0.2);
  const auto behavior = with_theta(fix.policy, -0.1, 0.25);
  const std::vector<estimate::Baseline> baselines(2, estimate::zero_baseline());

  Eigen::Vector2d oracle_v;
  std::vector<Eigen::VectorXd> oracle_g;
  for (int j = 0; j < 2; ++j) {
    oracle_v[j] = mdp::oracle_value(fix.spec, target, j);
    oracle_g.push_back(mdp::oracle_gradient(fix.spec, target, j));
  }

  const int trials = 4000;
  Eigen::Vector2d mean_v = Eigen::Vector2d::Zero(), m2_v = Eigen::Vector2d::Zero();
  Eigen::MatrixXd mean_g = Eigen::MatrixXd::Zero(2, 2), m2_g = Eigen::MatrixXd::Zero(2, 2);
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<mdp::Episode> episodes;
    for (int e = 0; e < 3; ++e) {
      Rng rng = Rng::stream(55, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(e));
      episodes.push_back(mdp::rollout(fix.spec, target, rng));
    }
    for (int e = 0; e < 3; ++e) {
      Rng rng = Rng::stream(56, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(e));
      episodes.push_back(mdp::rollout(fix.spec, behavior, rng));
    }
    const auto bundle =
        estimate::estimate_bundle(estimate::as_batch(episodes), target, fix.spec.gamma, baselines);
    for (int j = 0; j < 2; ++j) {
      const double dv = bundle.values[j] - mean_v[j];
      mean_v[j] += dv / (trial + 1);
      m2_v[j] += dv * (bundle.values[j] - mean_v[j]);
      for (int k = 0; k < 2; ++k) {
        const double dg = bundle.gradients[static_cast<std::size_t>(j)][k] - mean_g(k, j);
        mean_g(k, j) += dg / (trial + 1);
        m2_g(k, j) += dg * (bundle.gradients[static_cast<std::size_t>(j)][k] - mean_g(k, j));
      }
    }
  }
  for (int j = 0; j < 2; ++j) {
    const double se_v = std::sqrt(m2_v[j] / trials / trials);
    CHECK(std::abs(mean_v[j] - oracle_v[j]) <= 4.0 * se_v);
    for (int k = 0; k < 2; ++k) {
      const double se_g = std::sqrt(m2_g(k, j) / trials / trials);
      CHECK(std::abs(mean_g(k, j) - oracle_g[static_cast<std::size_t>(j)][k]) <= 4.0 * se_g);
    }
  }
}

TEST_CASE("constant baseline shift leaves the gradient mean unchanged") {
  auto fix = fixture();
  const auto target = with_theta(fix.policy, 0.2, 0.1);
  const estimate::Baseline zero = estimate::zero_baseline();
  const estimate::Baseline shifted{[](const Eigen::VectorXd&) { return 0.3; }, 0.3};

  const int trials = 4000;
  Eigen::Vector2d mean_diff = Eigen::Vector2d::Zero(), m2_diff = Eigen::Vector2d::Zero();
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<mdp::Episode> episodes;
    for (int e = 0; e < 4; ++e) {
      Rng rng = Rng::stream(77, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(e));
      episodes.push_back(mdp::rollout(fix.spec, target, rng));
    }
    const auto batch = estimate::as_batch(episodes);
    const Eigen::VectorXd g0 = estimate::estimate_gradient(1, batch, target, fix.spec.gamma, zero);
    const Eigen::VectorXd g1 =
        estimate::estimate_gradient(1, batch, target, fix.spec.gamma, shifted);
    for (int k = 0; k < 2; ++k) {
      const double d = g1[k] - g0[k] - mean_diff[k];
      mean_diff[k] += d / (trial + 1);
      m2_diff[k] += d * (g1[k] - g0[k] - mean_diff[k]);
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double se = std::sqrt(m2_diff[k] / trials / trials);
    CHECK(std::abs(mean_diff[k]) <= 4.0 * std::max(se, 1e-12));
  }
}

TEST_CASE("stat constants worked examples") {
  SUBCASE("phi and phi_bar") {
    const auto c = estimate::stat_constants(1.0, 0.0, 0.5, 2, 0.5, 1.0);
    CHECK(c.phi == doctest::Approx(1.75).epsilon(1e-12));
    CHECK(c.phi_bar == doctest::Approx(14.0).epsilon(1e-12));
  }
  SUBCASE("psi via the double sum") {
    const auto c = estimate::stat_constants(1.0, 0.0, 0.5, 2, 0.5, 1.0);
    CHECK(c.psi == doctest::Approx(2.75).epsilon(1e-12));
    CHECK(c.psi_bar == doctest::Approx(2.75 / 0.125).epsilon(1e-12));
  }
  SUBCASE("tilde constants collapse at zero distance") {
    const auto c = estimate::stat_constants(1.0, 0.0, 0.5, 2, 0.5, 1.0, {0.0, 1.0}, 0.3);
    CHECK(c.phi_tilde[0] == doctest::Approx(c.phi));
    CHECK(c.phi_tilde[1] == doctest::Approx(c.phi * std::exp(3.0 * 0.3)));
    CHECK(c.psi_tilde[0] == doctest::Approx(c.psi));
  }
  SUBCASE("tilde dominance when the exponential stays below nu^-(T+1)") {
    Rng rng(91);
    for (int trial = 0; trial < 200; ++trial) {
      const double nu = rng.uniform(0.05, 0.9);
      const double L_tilde = rng.uniform(0.01, 2.0);
      const int T = 1 + static_cast<int>(rng.uniform_index(5));
      const double dist_limit = -std::log(nu) / L_tilde;  // exp((T+1) L d) <= nu^-(T+1)
      const double dist = rng.uniform(0.0, dist_limit);
      const auto c = estimate::stat_constants(1.0, 0.2, 0.7, T, nu, 1.0, {dist}, L_tilde);
      CHECK(c.phi_tilde[0] <= c.phi_bar * (1.0 + 1e-12));
      CHECK(c.psi_tilde[0] <= c.psi_bar * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("tail bounds") {
  SUBCASE("worked value bound") {
    const double b = estimate::tail_bound_value(0.5, 100, 100, 0, 1.75, 14.0);
    CHECK(b == doctest::Approx(1.0 - 2.0 * std::exp(-2500.0 / 612.5)).epsilon(1e-12));
    CHECK(b == doctest::Approx(0.9663).epsilon(1e-3));
  }
  SUBCASE("epsilon to zero clamps at zero") {
    CHECK(estimate::tail_bound_value(0.0, 100, 100, 0, 1.75, 14.0) == 0.0);
  }
  SUBCASE("gradient bound clamps into [0, 1]") {
    CHECK(estimate::tail_bound_gradient(1e-9, 10, 10, 0, 2.75, 22.0, 3) == 0.0);
    CHECK(estimate::tail_bound_gradient(1e9, 1000, 1000, 0, 2.75, 22.0, 3) ==
          doctest::Approx(1.0));
  }
}

TEST_CASE("uniform bounds hold on sampled batches") {
  auto fix = fixture();
  const auto target = with_theta(fix.policy, 0.3, -0.2);
  const auto behavior = with_theta(fix.policy, -0.1, 0.25);
  const double nu = target.nu_floor();
  const double B_tilde = target.lipschitz_bounds().B_tilde;
  const std::vector<estimate::Baseline> baselines(2, estimate::zero_baseline());

  for (int trial = 0; trial < 500; ++trial) {
    std::vector<mdp::Episode> episodes;
    for (int e = 0; e < 2; ++e) {
      Rng rng = Rng::stream(99, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(e));
      episodes.push_back(mdp::rollout(fix.spec, target, rng));
    }
    for (int e = 0; e < 2; ++e) {
      Rng rng = Rng::stream(100, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(e));
      episodes.push_back(mdp::rollout(fix.spec, behavior, rng));
    }
    const auto bundle =
        estimate::estimate_bundle(estimate::as_batch(episodes), target, fix.spec.gamma, baselines);
    for (int j = 0; j < 2; ++j) {
      const auto c = estimate::stat_constants(fix.spec.reward_bounds[static_cast<std::size_t>(j)],
                                              0.0, fix.spec.gamma, fix.spec.horizon, nu, B_tilde);
      const double J = bundle.batch_size;
      CHECK(std::abs(bundle.values[j]) <=
            (bundle.on_policy_count * c.phi + bundle.off_policy_count * c.phi_bar) / J + 1e-12);
      const double grad_bound =
          (bundle.on_policy_count * c.psi + bundle.off_policy_count * c.psi_bar) / J;
      CHECK(bundle.gradients[static_cast<std::size_t>(j)].lpNorm<Eigen::Infinity>() <=
            grad_bound + 1e-12);
    }
  }
}

TEST_CASE("single-episode variance stays below the Popoviciu-style bound") {
  auto fix = fixture();
  const auto target = with_theta(fix.policy, 0.3, -0.2);
  const auto behavior = with_theta(fix.policy, -0.1, 0.25);
  const double nu = target.nu_floor();
  const double B_tilde = target.lipschitz_bounds().B_tilde;

  const int trials = 10000;
  double mean = 0.0, m2 = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = Rng::stream(111, static_cast<std::uint64_t>(trial), 0);
    std::vector<mdp::Episode> episodes = {mdp::rollout(fix.spec, behavior, rng)};
    const double v =
        estimate::estimate_value(1, estimate::as_batch(episodes), target, fix.spec.gamma);
    const double delta = v - mean;
    mean += delta / (trial + 1);
    m2 += delta * (v - mean);
  }
  const auto c = estimate::stat_constants(fix.spec.reward_bounds[1], 0.0, fix.spec.gamma,
                                          fix.spec.horizon, nu, B_tilde);
  CHECK(m2 / (trials - 1) <= c.phi_bar * c.phi_bar);
}

TEST_CASE("grid baseline tracks binned reward-to-go and its own bound") {
  auto fix = fixture();
  const auto target = with_theta(fix.policy, 0.3, -0.2);
  auto episodes = sample_episodes(fix.spec, target, 119, 50);
  estimate::GridBaseline grid(Eigen::VectorXd::Constant(1, -0.5), Eigen::VectorXd::Constant(1, 1.5),
                              {2});
  grid.update(estimate::as_batch(episodes), 0, fix.spec.gamma);
  CHECK(grid.bound() > 0.0);
  const auto snapshot = grid.snapshot();
  for (const auto& ep : episodes) {
    for (int t = 0; t < ep.realized_steps; ++t) {
      CHECK(std::abs(snapshot.fn(ep.states.row(t))) <= snapshot.bound + 1e-12);
    }
  }
}
