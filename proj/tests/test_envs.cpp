#include <doctest.h>

#include <Eigen/Core>

#include <cmath>

#include "rsgf/envs.hpp"
#include "rsgf/rng.hpp"

using namespace rsgf;

namespace {

Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

envs::Nav2dConfig single_obstacle() {
  envs::Nav2dConfig env;
  env.obstacles = {{4.0, 6.0, 4.0, 6.0}};
  return env;
}

}  // namespace

TEST_CASE("distance_to_obstacles") {
  const auto env = single_obstacle();
  SUBCASE("hand geometry: 2 away from the nearest edge") {
    CHECK(envs::distance_to_obstacles(env, vec2(2.0, 5.0)) == doctest::Approx(2.0));
  }
  SUBCASE("on a border the distance vanishes") {
    CHECK(envs::distance_to_obstacles(env, vec2(4.0, 5.0)) == doctest::Approx(0.0));
  }
  SUBCASE("no obstacles leaves the outer boundary") {
    envs::Nav2dConfig open = env;
    open.obstacles.clear();
    CHECK(envs::distance_to_obstacles(open, vec2(3.0, 5.0)) == doctest::Approx(3.0));
    CHECK(envs::distance_to_obstacles(open, vec2(9.5, 5.0)) == doctest::Approx(0.5));
  }
  SUBCASE("inside an obstacle errors") {
    CHECK_THROWS_AS(envs::distance_to_obstacles(env, vec2(5.0, 5.0)), std::domain_error);
  }
  SUBCASE("corner distance is Euclidean") {
    CHECK(envs::distance_to_obstacles(env, vec2(3.0, 3.0)) == doctest::Approx(std::sqrt(2.0)));
  }
}

TEST_CASE("nav2d_step rewards") {
  const auto env = single_obstacle();
  SUBCASE("zero action keeps the state; objective is the target distance") {
    const auto step = envs::nav2d_step(env, vec2(1.0, 1.0), vec2(0.0, 0.0));
    CHECK((step.next - Eigen::Vector2d(1.0, 1.0)).norm() == 0.0);
    CHECK(step.r0 == doctest::Approx(-std::hypot(7.5, 7.0)));
  }
  SUBCASE("touching the border gives constraint reward 0") {
    const auto step = envs::nav2d_step(env, vec2(4.0, 5.0), vec2(0.0, 0.0));
    CHECK(step.r1 == doctest::Approx(0.0));
  }
  SUBCASE("inside an obstacle gives 1 - eps") {
    const auto step = envs::nav2d_step(env, vec2(5.0, 5.0), vec2(0.0, 0.0));
    CHECK(step.r1 == doctest::Approx(0.99));
  }
  SUBCASE("safe states have nonpositive constraint reward approaching -eps") {
    const auto step = envs::nav2d_step(env, vec2(1.0, 1.0), vec2(0.0, 0.0));
    CHECK(step.r1 <= 0.0);
    CHECK(step.r1 > -env.epsilon);
    const auto far = envs::nav2d_step(env, vec2(0.5, 9.5), vec2(0.0, 0.0));
    CHECK(far.r1 > -env.epsilon);
  }
  SUBCASE("one-sided limit: the reward vanishes as the border is approached") {
    double prev = -1.0;
    for (double d : {0.5, 0.1, 0.01, 1e-4}) {
      const auto step = envs::nav2d_step(env, vec2(4.0 - d, 5.0), vec2(0.0, 0.0));
      CHECK(step.r1 <= 0.0);
      CHECK(step.r1 >= prev);
      prev = step.r1;
    }
    CHECK(std::abs(prev) <= env.epsilon * 1.1e-4);
  }
  SUBCASE("velocity and position are clamped") {
    const auto step = envs::nav2d_step(env, vec2(9.9, 9.9), vec2(50.0, 50.0));
    CHECK(step.next[0] == doctest::Approx(10.0));
    CHECK(step.next[1] == doctest::Approx(10.0));
  }
}

TEST_CASE("cartpole equilibrium is a fixed point") {
  const envs::CartpoleConfig env;
  const auto step = envs::cartpole_step(env, Eigen::Vector4d::Zero(), Eigen::VectorXd::Zero(1));
  CHECK(step.next.norm() <= 1e-12);
  CHECK(step.r0 == doctest::Approx(1.0));
  CHECK_FALSE(step.terminated);
}

TEST_CASE("cartpole constraint reward branches") {
  const envs::CartpoleConfig env;
  SUBCASE("exactly on the wall the in-set branch gives 0") {
    // Craft a state whose next x lands exactly on the wall: start with the
    // cart at rest on the wall with no force; x stays at 0.5.
    Eigen::Vector4d s(0.5, 0.0, 0.0, 0.0);
    const auto step = envs::cartpole_step(env, s, Eigen::VectorXd::Zero(1));
    CHECK(step.next[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(step.r1 == doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("past the wall gives 1 - eps") {
    Eigen::Vector4d s(1.0, 0.0, 0.0, 0.0);
    const auto step = envs::cartpole_step(env, s, Eigen::VectorXd::Zero(1));
    CHECK(step.r1 == doctest::Approx(0.9));
  }
  SUBCASE("safely left of the wall is negative and above -eps") {
    Eigen::Vector4d s(-1.0, 0.0, 0.0, 0.0);
    const auto step = envs::cartpole_step(env, s, Eigen::VectorXd::Zero(1));
    CHECK(step.r1 < 0.0);
    CHECK(step.r1 > -env.epsilon);
  }
}

TEST_CASE("cartpole RK4 converges at order >= 3.5") {
  const envs::CartpoleConfig env;
  Eigen::Vector4d s0(0.0, 0.2, 0.1, -0.3);
  const double force = 1.5;

  const auto integrate_to = [&](double dt) {
    Eigen::Vector4d s = s0;
    const int steps = static_cast<int>(std::round(1.0 / dt));
    for (int i = 0; i < steps; ++i) s = envs::cartpole_rk4(env, s, force, dt);
    return s;
  };

  const Eigen::Vector4d reference = integrate_to(1.0 / 8192.0);
  std::vector<double> dts = {0.04, 0.02, 0.01, 0.005};
  std::vector<double> errs;
  for (double dt : dts) errs.push_back((integrate_to(dt) - reference).norm());

  // Log-log slope across successive halvings.
  double slope_sum = 0.0;
  for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
    slope_sum += std::log2(errs[i] / errs[i + 1]);
  }
  const double avg_slope = slope_sum / (errs.size() - 1);
  CHECK(avg_slope >= 3.5);
}

TEST_CASE("cartpole truncation zero-fills rewards and freezes the state") {
  envs::CartpoleConfig env;
  env.angle_limit = 0.05;  // falls almost immediately
  const auto spec = envs::make_cartpole(env, 50, 0.995);
  envs::TabularFixture fixture = envs::make_tabular_fixture();
  // A 1-D continuous policy over the force range.
  Eigen::MatrixXd centers(1, 4);
  centers << 0.0, 0.0, 0.0, 0.0;
  policy::RbfGaussianPolicy pi(centers, 0.5, Eigen::VectorXd::Constant(1, 0.5),
                               Eigen::VectorXd::Constant(1, -3.0),
                               Eigen::VectorXd::Constant(1, 3.0));
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 3.0);  // push hard, fall fast
  pi.set_params(theta);
  Rng rng(5);
  const auto ep = mdp::rollout(spec, pi, rng);
  REQUIRE(ep.realized_steps < 51);
  for (int t = ep.realized_steps; t <= 50; ++t) {
    CHECK(ep.rewards(0, t) == 0.0);
    CHECK(ep.rewards(1, t) == 0.0);
    CHECK((ep.states.row(t + 1) - ep.states.row(ep.realized_steps)).norm() == 0.0);
  }
  ((void)fixture);
}

TEST_CASE("environment steps are deterministic under a fixed seed") {
  const auto spec = envs::make_nav2d(envs::Nav2dConfig{}, 20, 0.98);
  Eigen::MatrixXd centers = policy::make_center_grid(Eigen::VectorXd::Zero(2),
                                                     Eigen::VectorXd::Constant(2, 10.0), {3, 3});
  policy::RbfGaussianPolicy pi(centers, 0.5, Eigen::VectorXd::Constant(2, 0.5),
                               Eigen::VectorXd::Constant(2, -5.0),
                               Eigen::VectorXd::Constant(2, 5.0));
  Rng r1(1234), r2(1234);
  const auto e1 = mdp::rollout(spec, pi, r1);
  const auto e2 = mdp::rollout(spec, pi, r2);
  CHECK((e1.states - e2.states).norm() == 0.0);
  CHECK((e1.rewards - e2.rewards).norm() == 0.0);
}

TEST_CASE("tabular fixture: conflicting streams and valid pmf transitions") {
  const auto fixture = envs::make_tabular_fixture();
  REQUIRE(fixture.spec.tabular.has_value());
  const auto& tab = *fixture.spec.tabular;
  for (const auto& P : tab.transition_probs) {
    for (int s = 0; s < P.rows(); ++s) {
      CHECK(P.row(s).sum() == doctest::Approx(1.0));
    }
  }
  CHECK(tab.initial_probs.sum() == doctest::Approx(1.0));
  // Constraint reward penalizes the action the objective likes.
  const auto& r1 = fixture.spec.rewards[1];
  CHECK(r1(tab.states[0], tab.actions[1], tab.states[1]) > 0.0);
  CHECK(r1(tab.states[0], tab.actions[0], tab.states[0]) < 0.0);
}
