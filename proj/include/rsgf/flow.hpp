#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rsgf/qcqp.hpp"

namespace rsgf::flow {

struct SmoothFunction {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  double grad_lipschitz = 0.0;
};

/// Constrained problem with analytic values and gradients, used to exercise
/// the deterministic flow. Constraint gradients carry known Lipschitz
/// constants for the stepsize rule.
struct AnalyticProblem {
  int dim = 0;
  SmoothFunction objective;
  std::vector<SmoothFunction> constraints;
  std::vector<Eigen::VectorXd> known_kkt_points;
  std::string name;

  std::vector<double> constraint_lipschitz() const {
    std::vector<double> out;
    out.reserve(constraints.size());
    for (const auto& c : constraints) out.push_back(c.grad_lipschitz);
    return out;
  }
};

/// Evaluates exact data at theta and solves the subproblem.
qcqp::Solution rsgf_map(const AnalyticProblem& problem, const Eigen::VectorXd& theta, double alpha,
                        const qcqp::BetaFn& beta_fn, const qcqp::SolveOptions& options = {});

/// min{1/alpha, beta/L_1, ..., beta/L_m}; L = 0 entries impose no cap.
double max_stepsize(double alpha, double beta_at_theta, const std::vector<double>& lipschitz);

struct Schedule {
  enum class Kind { Constant, InvSqrt, Harmonic } kind = Kind::Constant;
  double c = 0.1;                 // constant value, or numerator for Harmonic
  bool enforce_safe_step = true;  // cap by cap_factor * max_stepsize
  double cap_factor = 0.99;

  /// Step for 1-based iteration i given the current safe-step cap.
  double step(int i, double alpha, double safe_step_cap) const;
};

struct Trace {
  std::vector<Eigen::VectorXd> iterates;          // length n+1
  std::vector<Eigen::VectorXd> directions;        // length n
  std::vector<Eigen::VectorXd> multipliers;       // length n
  std::vector<std::vector<double>> constraint_values;  // length n+1, per j
  std::vector<double> kkt_residuals;              // length n (solver residuals)
  std::vector<double> stepsizes;                  // length n
  std::optional<int> infeasible_at;
};

/// Forward-Euler iteration theta <- theta + h * xi. Stops early with the
/// partial trace if the subproblem reports Infeasible; throws on NaN with the
/// iteration index in the message.
Trace integrate(const AnalyticProblem& problem, const Eigen::VectorXd& theta0, double alpha,
                const qcqp::BetaFn& beta_fn, const Schedule& schedule, int iters);

struct KktCheck {
  bool is_kkt = false;
  double residual = 0.0;
  Eigen::VectorXd multipliers;
};

/// Stationarity over the active constraints as a nonnegative least-squares
/// problem; KKT iff the (feasible-sign) residual and constraint violations
/// are within tol.
KktCheck kkt_check(const AnalyticProblem& problem, const Eigen::VectorXd& theta, double tol);

/// Fixtures: "disk" (linear objective over the unit disk), "corner"
/// (quadratic objective, two linear constraints active at the solution),
/// "banana" (mild Rosenbrock objective over a disk).
AnalyticProblem make_fixture(const std::string& name);
std::vector<std::string> fixture_names();

}  // namespace rsgf::flow
