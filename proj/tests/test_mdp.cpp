#include <doctest.h>

#include <Eigen/Core>

#include <cmath>
#include <sstream>

#include "rsgf/envs.hpp"
#include "rsgf/estimate.hpp"
#include "rsgf/mdp.hpp"
#include "rsgf/reference.hpp"

using namespace rsgf;

namespace {

// Deterministic 1-state 1-action chain with constant stream rewards.
mdp::CmdpSpec one_state_spec(double r0, double r1, int horizon, double gamma) {
  mdp::TabularData tab;
  tab.states = {Eigen::VectorXd::Zero(1)};
  tab.actions = {Eigen::VectorXd::Zero(1)};
  tab.initial_probs = Eigen::VectorXd::Constant(1, 1.0);
  tab.transition_probs = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  mdp::CmdpSpec spec;
  spec.state_dim = 1;
  spec.action_dim = 1;
  spec.horizon = horizon;
  spec.gamma = gamma;
  spec.tabular = tab;
  spec.initial_state = [](Rng&) { return Eigen::VectorXd::Zero(1); };
  spec.transition = [](const Eigen::VectorXd&, const Eigen::VectorXd&, Rng&) {
    return Eigen::VectorXd::Zero(1);
  };
  spec.rewards = {
      [r0](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) { return r0; },
      [r1](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) { return r1; }};
  spec.reward_bounds = {std::max(1.0, std::abs(r0)), std::max(1.0, std::abs(r1))};
  return spec;
}

// Degenerate one-cell policy: always emits the single action.
policy::DiscretizedRbfPolicy one_action_policy() {
  Eigen::MatrixXd centers(1, 1);
  centers << 0.0;
  policy::RbfGaussianPolicy base(centers, 0.5, Eigen::VectorXd::Constant(1, 1.0),
                                 Eigen::VectorXd::Constant(1, -1.0),
                                 Eigen::VectorXd::Constant(1, 1.0));
  return policy::DiscretizedRbfPolicy(base, {1});
}

}  // namespace

TEST_CASE("rollout shapes and deterministic rewards") {
  const auto spec = one_state_spec(1.0, 0.0, 2, 0.5);
  auto pi = one_action_policy();
  Rng rng(1);
  const auto ep = mdp::rollout(spec, pi, rng, "test");
  CHECK(ep.states.rows() == 4);   // T + 2
  CHECK(ep.actions.rows() == 3);  // T + 1
  CHECK(ep.rewards.rows() == 2);
  CHECK(ep.rewards.cols() == 3);
  for (int t = 0; t < 3; ++t) {
    CHECK(ep.rewards(0, t) == 1.0);
    CHECK(ep.rewards(1, t) == 0.0);
  }
  CHECK(ep.realized_steps == 3);
  CHECK(ep.behavior_tag == "test");
}

TEST_CASE("rollout is bit-identical under a fixed seed") {
  const auto fixture = envs::make_tabular_fixture();
  Rng r1(42), r2(42);
  const auto e1 = mdp::rollout(fixture.spec, fixture.policy, r1);
  const auto e2 = mdp::rollout(fixture.spec, fixture.policy, r2);
  CHECK((e1.states - e2.states).norm() == 0.0);
  CHECK((e1.actions - e2.actions).norm() == 0.0);
  CHECK((e1.rewards - e2.rewards).norm() == 0.0);
  CHECK(e1.behavior_log_prob == e2.behavior_log_prob);
}

TEST_CASE("parallel rollout batch equals the serial reference") {
  const auto fixture = envs::make_tabular_fixture();
  const auto parallel = mdp::rollout_batch(fixture.spec, fixture.policy, 9, 3, 64);
  const auto serial = reference::rollout_batch(fixture.spec, fixture.policy, 9, 3, 64);
  REQUIRE(parallel.size() == serial.size());
  for (std::size_t i = 0; i < parallel.size(); ++i) {
    CHECK((parallel[i].states - serial[i].states).norm() == 0.0);
    CHECK((parallel[i].actions - serial[i].actions).norm() == 0.0);
    CHECK((parallel[i].rewards - serial[i].rewards).norm() == 0.0);
  }
}

TEST_CASE("oracle_value on the deterministic chain") {
  auto pi = one_action_policy();

  SUBCASE("constant objective reward discounts with the sign convention") {
    const auto spec = one_state_spec(1.0, 0.0, 2, 0.5);
    CHECK(mdp::oracle_value(spec, pi, 0) == doctest::Approx(-1.75).epsilon(1e-12));
    CHECK(mdp::oracle_value(spec, pi, 1) == doctest::Approx(0.0));
  }

  SUBCASE("zero rewards give zero value and gradient") {
    const auto spec = one_state_spec(0.0, 0.0, 3, 0.9);
    CHECK(mdp::oracle_value(spec, pi, 0) == doctest::Approx(0.0));
    CHECK(mdp::oracle_gradient(spec, pi, 0).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("enumeration probabilities sum to one") {
  const auto fixture = envs::make_tabular_fixture();
  auto pi = fixture.policy;
  Eigen::VectorXd theta(2);
  theta << 0.4, -0.7;
  pi.set_params(theta);
  CHECK(mdp::oracle_probability_mass(fixture.spec, pi) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("policy-independent rewards have zero oracle gradient") {
  // Both actions share the same transition law and rewards ignore actions,
  // so the return cannot depend on theta.
  mdp::TabularData tab;
  tab.states = {Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0)};
  tab.actions = {Eigen::VectorXd::Constant(1, -0.5), Eigen::VectorXd::Constant(1, 0.5)};
  tab.initial_probs = Eigen::VectorXd::Constant(2, 0.5);
  Eigen::MatrixXd mix(2, 2);
  mix << 0.6, 0.4, 0.3, 0.7;
  tab.transition_probs = {mix, mix};
  mdp::CmdpSpec spec;
  spec.state_dim = 1;
  spec.action_dim = 1;
  spec.horizon = 2;
  spec.gamma = 0.5;
  spec.tabular = tab;
  spec.rewards = {[](const Eigen::VectorXd& s, const Eigen::VectorXd&, const Eigen::VectorXd&) {
    return s[0];
  }};
  spec.reward_bounds = {1.0};

  const auto fixture = envs::make_tabular_fixture();
  auto pi = fixture.policy;
  Eigen::VectorXd theta(2);
  theta << 0.3, 0.6;
  pi.set_params(theta);
  CHECK(mdp::oracle_gradient(spec, pi, 0).norm() <= 1e-12);
}

TEST_CASE("oracle gradient matches finite differences of oracle value") {
  const auto fixture = envs::make_tabular_fixture();
  auto pi = fixture.policy;
  Eigen::VectorXd theta(2);
  theta << 0.25, -0.4;
  pi.set_params(theta);
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd grad = mdp::oracle_gradient(fixture.spec, pi, j);
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[k] += 1e-5;
      tm[k] -= 1e-5;
      pi.set_params(tp);
      const double fp = mdp::oracle_value(fixture.spec, pi, j);
      pi.set_params(tm);
      const double fm = mdp::oracle_value(fixture.spec, pi, j);
      pi.set_params(theta);
      CHECK(std::abs(grad[k] - (fp - fm) / 2e-5) <= 1e-6);
    }
  }
}

TEST_CASE("enumeration budget is enforced") {
  const auto fixture = envs::make_tabular_fixture(/*horizon=*/25);
  CHECK_THROWS_WITH_AS(mdp::oracle_value(fixture.spec, fixture.policy, 0),
                       doctest::Contains("budget"), std::invalid_argument);
}

TEST_CASE("Monte-Carlo rollout mean matches the oracle within 4 SE") {
  const auto fixture = envs::make_tabular_fixture();
  auto pi = fixture.policy;
  Eigen::VectorXd theta(2);
  theta << 0.2, 0.1;
  pi.set_params(theta);
  const double oracle = mdp::oracle_value(fixture.spec, pi, 0);

  const int n = 100000;
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::stream(123, 0, static_cast<std::uint64_t>(i));
    const auto ep = mdp::rollout(fixture.spec, pi, rng);
    double ret = 0.0;
    for (int t = 0; t < ep.rewards.cols(); ++t) ret += std::pow(fixture.spec.gamma, t) * ep.rewards(0, t);
    ret = -ret;  // sigma_0
    const double delta = ret - mean;
    mean += delta / (i + 1);
    m2 += delta * (ret - mean);
  }
  const double se = std::sqrt(m2 / n / n);
  CHECK(std::abs(mean - oracle) <= 4.0 * se);
}

TEST_CASE("episode records round-trip through the line format") {
  const auto fixture = envs::make_tabular_fixture();
  std::vector<mdp::Episode> episodes;
  for (int i = 0; i < 5; ++i) {
    Rng rng = Rng::stream(7, 1, static_cast<std::uint64_t>(i));
    episodes.push_back(mdp::rollout(fixture.spec, fixture.policy, rng, "batch"));
  }
  std::stringstream buffer;
  mdp::write_episodes(buffer, episodes);
  const auto loaded = mdp::read_episodes(buffer);
  REQUIRE(loaded.size() == episodes.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK((loaded[i].states - episodes[i].states).norm() == 0.0);
    CHECK((loaded[i].actions - episodes[i].actions).norm() == 0.0);
    CHECK((loaded[i].rewards - episodes[i].rewards).norm() == 0.0);
    CHECK(loaded[i].behavior_log_prob == episodes[i].behavior_log_prob);
    CHECK(loaded[i].behavior_tag == episodes[i].behavior_tag);
    CHECK(loaded[i].realized_steps == episodes[i].realized_steps);
    CHECK((loaded[i].behavior_params - episodes[i].behavior_params).norm() == 0.0);
  }
}
