#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsgf::qcqp {

/// One quadratic constraint  a + g'xi + (beta/2)|xi|^2 <= 0.
/// `level` already carries the alpha factor when built from value estimates.
struct Constraint {
  double level = 0.0;
  Eigen::VectorXd grad;
};

/// Strongly convex subproblem
///   min_xi  (1/2)|xi + g0|^2
///   s.t.    a_j + g_j'xi + (beta/2)|xi|^2 <= 0,  j = 1..q.
///
/// beta must be strictly positive: beta == 0 is a different flow with
/// halfspace constraints and is rejected at construction.
class Problem {
 public:
  Problem(Eigen::VectorXd g0, std::vector<Constraint> constraints, double beta);

  const Eigen::VectorXd& g0() const { return g0_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  double beta() const { return beta_; }
  Eigen::Index dim() const { return g0_.size(); }

  /// a_j + g_j'xi + (beta/2)|xi|^2.
  double constraint_value(int j, const Eigen::VectorXd& xi) const;
  /// (1/2)|xi + g0|^2.
  double objective(const Eigen::VectorXd& xi) const;

 private:
  Eigen::VectorXd g0_;
  std::vector<Constraint> constraints_;
  double beta_;
};

enum class SolveStatus { Optimal, Infeasible, MaxIterations };

std::string to_string(SolveStatus s);

struct Solution {
  Eigen::VectorXd xi;
  Eigen::VectorXd multipliers;
  SolveStatus status = SolveStatus::MaxIterations;
  double kkt_residual = std::numeric_limits<double>::infinity();
  std::vector<int> active_set;
  double objective = std::numeric_limits<double>::quiet_NaN();
};

struct SolveOptions {
  double tol = 1e-8;
  int max_iters = 10000;
  double divergence_norm = 1e12;
};

/// Dual ascent on u >= 0 with the exact primal map from the closed form:
/// each dual evaluation recovers xi(u) and the dual gradient is the vector of
/// constraint values. Backtracking line search on the dual objective.
Solution solve(const Problem& problem, const SolveOptions& options = {});

/// xi(u) = -(g0 + sum_j u_j g_j) / (1 + beta * sum_j u_j).
Eigen::VectorXd closed_form_direction(const Eigen::VectorXd& g0,
                                      const std::vector<Constraint>& constraints,
                                      const Eigen::VectorXd& multipliers,
                                      double beta);

/// Max of stationarity norm, primal violation, dual negativity and
/// complementarity for the pair (xi, u).
double kkt_residual(const Problem& problem, const Eigen::VectorXd& xi,
                    const Eigen::VectorXd& multipliers);

struct SlaterProbe {
  bool strictly_feasible = false;
  std::optional<Eigen::VectorXd> witness;
};

/// Solves the linearized minimum-norm QP  min |xi|^2 s.t. a_j + g_j'xi <= 0,
/// then scans scaled candidates t*xi_star (including each constraint's 1-D
/// vertex along the ray) for a point satisfying the quadratic constraints
/// strictly.
SlaterProbe slater_probe(const Problem& problem, double tol = 1e-10);

using BetaFn = std::function<double(const Eigen::VectorXd&)>;

}  // namespace rsgf::qcqp

namespace rsgf::estimate {
struct EstimateBundle;
}

namespace rsgf::qcqp {

/// Assembles the estimated subproblem at theta: constraints j = 1..q from the
/// bundle (level alpha * Vhat_j, gradient grad Vhat_j) plus the exact
/// iterate-bounding constraint (alpha (|theta|^2 - C), 2 theta).
Problem build_subproblem(const Eigen::VectorXd& theta, const estimate::EstimateBundle& estimates,
                         double alpha, const BetaFn& beta_fn, double bound_C);

}  // namespace rsgf::qcqp
