#include "rsgf/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rsgf::envs {

namespace {

bool inside_any_obstacle(const Nav2dConfig& env, double x, double y) {
  for (const Rect& r : env.obstacles) {
    if (r.strictly_inside(x, y)) return true;
  }
  return false;
}

double nav2d_constraint_reward(const Nav2dConfig& env, const Eigen::VectorXd& s) {
  if (inside_any_obstacle(env, s[0], s[1])) return 1.0 - env.epsilon;
  const double d = distance_to_obstacles(env, s);
  return env.epsilon * (std::exp(-d) - 1.0);
}

}  // namespace

double distance_to_obstacles(const Nav2dConfig& env, const Eigen::VectorXd& s) {
  const double x = s[0];
  const double y = s[1];
  if (inside_any_obstacle(env, x, y)) {
    throw std::domain_error("distance_to_obstacles: point lies inside an obstacle");
  }
  double d = std::min({x - env.lo[0], env.hi[0] - x, y - env.lo[1], env.hi[1] - y});
  d = std::max(d, 0.0);
  for (const Rect& r : env.obstacles) d = std::min(d, r.border_distance(x, y));
  return d;
}

Nav2dStep nav2d_step(const Nav2dConfig& env, const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
  Nav2dStep out;
  for (int k = 0; k < 2; ++k) {
    const double v = std::clamp(a[k], env.vel_lo[static_cast<std::size_t>(k)],
                                env.vel_hi[static_cast<std::size_t>(k)]);
    out.next[k] = std::clamp(s[k] + env.dt * v, env.lo[static_cast<std::size_t>(k)],
                             env.hi[static_cast<std::size_t>(k)]);
  }
  out.r0 = -std::hypot(out.next[0] - env.target[0], out.next[1] - env.target[1]);
  out.r1 = nav2d_constraint_reward(env, out.next);
  return out;
}

mdp::CmdpSpec make_nav2d(const Nav2dConfig& env, int horizon, double gamma) {
  mdp::CmdpSpec spec;
  spec.state_dim = 2;
  spec.action_dim = 2;
  spec.horizon = horizon;
  spec.gamma = gamma;
  spec.initial_state = [env](Rng& rng) {
    Eigen::VectorXd s(2);
    s[0] = rng.uniform(env.start_lo[0], env.start_hi[0]);
    s[1] = rng.uniform(env.start_lo[1], env.start_hi[1]);
    return s;
  };
  spec.transition = [env](const Eigen::VectorXd& s, const Eigen::VectorXd& a, Rng&) {
    return Eigen::VectorXd(nav2d_step(env, s, a).next);
  };
  spec.rewards.push_back([env](const Eigen::VectorXd&, const Eigen::VectorXd&,
                               const Eigen::VectorXd& sn) {
    return -std::hypot(sn[0] - env.target[0], sn[1] - env.target[1]);
  });
  spec.rewards.push_back([env](const Eigen::VectorXd&, const Eigen::VectorXd&,
                               const Eigen::VectorXd& sn) {
    return nav2d_constraint_reward(env, sn);
  });
  const double diag = std::hypot(env.hi[0] - env.lo[0], env.hi[1] - env.lo[1]);
  spec.reward_bounds = {diag, 1.0};
  return spec;
}

Eigen::Vector4d cartpole_rk4(const CartpoleConfig& env, const Eigen::Vector4d& s, double force,
                             double dt) {
  const auto deriv = [&](const Eigen::Vector4d& state) {
    const double theta = state[1];
    const double xdot = state[2];
    const double thetadot = state[3];
    const double total_mass = env.cart_mass + env.pole_mass;
    const double sin_t = std::sin(theta);
    const double cos_t = std::cos(theta);
    const double temp =
        (force + env.pole_mass * env.half_length * thetadot * thetadot * sin_t) / total_mass;
    const double theta_acc =
        (env.gravity * sin_t - cos_t * temp) /
        (env.half_length * (4.0 / 3.0 - env.pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - env.pole_mass * env.half_length * theta_acc * cos_t / total_mass;
    return Eigen::Vector4d(xdot, thetadot, x_acc, theta_acc);
  };
  const Eigen::Vector4d k1 = deriv(s);
  const Eigen::Vector4d k2 = deriv(s + 0.5 * dt * k1);
  const Eigen::Vector4d k3 = deriv(s + 0.5 * dt * k2);
  const Eigen::Vector4d k4 = deriv(s + dt * k3);
  return s + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

CartpoleStep cartpole_step(const CartpoleConfig& env, const Eigen::VectorXd& s,
                           const Eigen::VectorXd& a) {
  CartpoleStep out;
  const double force = std::clamp(a[0], -env.force_max, env.force_max);
  out.next = cartpole_rk4(env, Eigen::Vector4d(s[0], s[1], s[2], s[3]), force, env.dt);
  for (int k = 0; k < 4; ++k) {
    if (!std::isfinite(out.next[k])) {
      throw std::runtime_error("cartpole_step: non-finite state");
    }
  }
  out.r0 = 1.0;
  const double d = out.next[0] - env.wall;
  out.r1 = d <= 0.0 ? env.epsilon * (std::exp(d) - 1.0) : 1.0 - env.epsilon;
  out.terminated = std::abs(out.next[1]) > env.angle_limit;
  return out;
}

mdp::CmdpSpec make_cartpole(const CartpoleConfig& env, int horizon, double gamma) {
  mdp::CmdpSpec spec;
  spec.state_dim = 4;
  spec.action_dim = 1;
  spec.horizon = horizon;
  spec.gamma = gamma;
  spec.initial_state = [env](Rng& rng) {
    Eigen::VectorXd s(4);
    for (int k = 0; k < 4; ++k) s[k] = rng.uniform(-env.init_noise, env.init_noise);
    return s;
  };
  spec.transition = [env](const Eigen::VectorXd& s, const Eigen::VectorXd& a, Rng&) {
    return Eigen::VectorXd(cartpole_step(env, s, a).next);
  };
  spec.rewards.push_back(
      [](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) { return 1.0; });
  spec.rewards.push_back([env](const Eigen::VectorXd&, const Eigen::VectorXd&,
                               const Eigen::VectorXd& sn) {
    const double d = sn[0] - env.wall;
    return d <= 0.0 ? env.epsilon * (std::exp(d) - 1.0) : 1.0 - env.epsilon;
  });
  spec.reward_bounds = {1.0, 1.0};
  spec.terminate = [env](const Eigen::VectorXd& sn) {
    return std::abs(sn[1]) > env.angle_limit;
  };
  return spec;
}

TabularFixture make_tabular_fixture(int horizon, double gamma) {
  mdp::TabularData tab;
  tab.states = {Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0)};
  tab.actions = {Eigen::VectorXd::Constant(1, -0.5), Eigen::VectorXd::Constant(1, 0.5)};
  tab.initial_probs = Eigen::VectorXd::Constant(2, 0.5);
  // Action "left" pulls toward state 0, "right" toward state 1.
  Eigen::MatrixXd left(2, 2), right(2, 2);
  left << 0.8, 0.2, 0.8, 0.2;
  right << 0.2, 0.8, 0.2, 0.8;
  tab.transition_probs = {left, right};

  mdp::CmdpSpec spec;
  spec.state_dim = 1;
  spec.action_dim = 1;
  spec.horizon = horizon;
  spec.gamma = gamma;
  spec.tabular = tab;
  spec.initial_state = [tab](Rng& rng) {
    double u = rng.uniform01();
    for (int s = 0; s < tab.initial_probs.size(); ++s) {
      u -= tab.initial_probs[s];
      if (u <= 0.0) return tab.states[static_cast<std::size_t>(s)];
    }
    return tab.states.back();
  };
  spec.transition = [tab](const Eigen::VectorXd& s, const Eigen::VectorXd& a, Rng& rng) {
    const int si = s[0] > 0.5 ? 1 : 0;
    const int ai = a[0] > 0.0 ? 1 : 0;
    double u = rng.uniform01();
    for (int sn = 0; sn < 2; ++sn) {
      u -= tab.transition_probs[static_cast<std::size_t>(ai)](si, sn);
      if (u <= 0.0) return tab.states[static_cast<std::size_t>(sn)];
    }
    return tab.states.back();
  };
  // Objective rewards occupancy of the right state (sign flips at estimation).
  spec.rewards.push_back([](const Eigen::VectorXd&, const Eigen::VectorXd&,
                            const Eigen::VectorXd& sn) { return sn[0]; });
  // Constraint charges for right-moving actions; the mix keeps uniform
  // policies feasible while policies that favor the right state violate it.
  spec.rewards.push_back([](const Eigen::VectorXd&, const Eigen::VectorXd& a,
                            const Eigen::VectorXd&) { return a[0] > 0.0 ? 0.15 : -0.25; });
  spec.reward_bounds = {1.0, 0.25};

  Eigen::MatrixXd centers(2, 1);
  centers << 0.0, 1.0;
  Eigen::VectorXd action_var = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(1, -1.0);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(1, 1.0);
  policy::RbfGaussianPolicy base(centers, 0.5, action_var, lo, hi);
  return TabularFixture{std::move(spec), policy::DiscretizedRbfPolicy(std::move(base), {2})};
}

}  // namespace rsgf::envs
