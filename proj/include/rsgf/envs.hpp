#pragma once

#include <Eigen/Core>

#include <array>
#include <vector>

#include "rsgf/mdp.hpp"

namespace rsgf::envs {

struct Rect {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;

  bool strictly_inside(double x, double y) const {
    return x > xmin && x < xmax && y > ymin && y < ymax;
  }
  /// Euclidean distance to the rectangle border for points on or outside it.
  double border_distance(double x, double y) const {
    const double dx = std::max({xmin - x, 0.0, x - xmax});
    const double dy = std::max({ymin - y, 0.0, y - ymax});
    return std::hypot(dx, dy);
  }
};

/// Single integrator in [0,10]^2 with rectangular obstacles. The constraint
/// reward is eps*(exp(-d)-1) in the obstacle-free region (d >= 0 the distance
/// to the nearest obstacle border, so the reward vanishes at the border and
/// approaches -eps far from obstacles) and 1-eps inside an obstacle.
struct Nav2dConfig {
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{10.0, 10.0};
  std::vector<Rect> obstacles{{3.0, 4.0, 0.0, 3.0}, {6.0, 7.0, 8.0, 10.0}, {7.5, 9.0, 2.0, 3.0}};
  std::array<double, 2> target{8.5, 8.0};
  double epsilon = 0.01;
  double dt = 0.1;
  std::array<double, 2> vel_lo{-5.0, -5.0};
  std::array<double, 2> vel_hi{5.0, 5.0};
  std::array<double, 2> start_lo{1.0, 2.0};
  std::array<double, 2> start_hi{2.0, 3.0};
};

struct Nav2dStep {
  Eigen::Vector2d next;
  double r0 = 0.0;
  double r1 = 0.0;
};

Nav2dStep nav2d_step(const Nav2dConfig& env, const Eigen::VectorXd& s, const Eigen::VectorXd& a);

/// Distance from an obstacle-free point to the closest obstacle border or the
/// outer boundary. Throws if s lies strictly inside an obstacle.
double distance_to_obstacles(const Nav2dConfig& env, const Eigen::VectorXd& s);

mdp::CmdpSpec make_nav2d(const Nav2dConfig& env, int horizon, double gamma);

/// Classical cart-pole (cart mass, pole mass, pole half-length) integrated
/// with RK4; the wall at x = 0.5 enters only through the constraint reward
/// with d(s) = x - 0.5. Episodes truncate when the pole leaves the upright
/// band.
struct CartpoleConfig {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double half_length = 0.5;
  double gravity = 9.81;
  double force_max = 3.0;
  double dt = 0.02;
  double wall = 0.5;
  double epsilon = 0.1;
  double angle_limit = 0.7853981633974483;  // pi/4
  double init_noise = 0.01;
};

struct CartpoleStep {
  Eigen::Vector4d next;
  double r0 = 0.0;
  double r1 = 0.0;
  bool terminated = false;
};

/// One RK4 step of the dynamics under constant force.
Eigen::Vector4d cartpole_rk4(const CartpoleConfig& env, const Eigen::Vector4d& s, double force,
                             double dt);

CartpoleStep cartpole_step(const CartpoleConfig& env, const Eigen::VectorXd& s,
                           const Eigen::VectorXd& a);

mdp::CmdpSpec make_cartpole(const CartpoleConfig& env, int horizon, double gamma);

/// Two-state, two-action CMDP with explicit transition probabilities, small
/// enough for exhaustive enumeration, paired with the grid-discretized RBF
/// policy whose cells are exactly the spec's action set. The objective favors
/// the right state while the constraint charges for right-moving actions, so
/// the two streams conflict.
struct TabularFixture {
  mdp::CmdpSpec spec;
  policy::DiscretizedRbfPolicy policy;
};

TabularFixture make_tabular_fixture(int horizon = 2, double gamma = 0.5);

}  // namespace rsgf::envs
