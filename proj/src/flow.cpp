#include "rsgf/flow.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rsgf::flow {

qcqp::Solution rsgf_map(const AnalyticProblem& problem, const Eigen::VectorXd& theta, double alpha,
                        const qcqp::BetaFn& beta_fn, const qcqp::SolveOptions& options) {
  std::vector<qcqp::Constraint> constraints;
  constraints.reserve(problem.constraints.size());
  for (const auto& c : problem.constraints) {
    constraints.push_back({alpha * c.value(theta), c.grad(theta)});
  }
  qcqp::Problem sub(problem.objective.grad(theta), std::move(constraints), beta_fn(theta));
  return qcqp::solve(sub, options);
}

double max_stepsize(double alpha, double beta_at_theta, const std::vector<double>& lipschitz) {
  double h = 1.0 / alpha;
  for (double L : lipschitz) {
    if (L > 0.0) h = std::min(h, beta_at_theta / L);
  }
  return h;
}

double Schedule::step(int i, double alpha, double safe_step_cap) const {
  double h = c;
  switch (kind) {
    case Kind::Constant: h = c; break;
    case Kind::InvSqrt: h = 1.0 / (alpha * std::sqrt(static_cast<double>(i))); break;
    case Kind::Harmonic: h = c / static_cast<double>(i); break;
  }
  if (enforce_safe_step) h = std::min(h, cap_factor * safe_step_cap);
  return h;
}

Trace integrate(const AnalyticProblem& problem, const Eigen::VectorXd& theta0, double alpha,
                const qcqp::BetaFn& beta_fn, const Schedule& schedule, int iters) {
  if (theta0.size() != problem.dim) throw std::invalid_argument("integrate: dimension mismatch");
  Trace trace;
  Eigen::VectorXd theta = theta0;

  const auto record_point = [&](const Eigen::VectorXd& th) {
    std::vector<double> values;
    values.reserve(problem.constraints.size());
    for (const auto& c : problem.constraints) values.push_back(c.value(th));
    trace.iterates.push_back(th);
    trace.constraint_values.push_back(std::move(values));
  };
  record_point(theta);

  for (int i = 1; i <= iters; ++i) {
    const qcqp::Solution sol = rsgf_map(problem, theta, alpha, beta_fn);
    if (sol.status == qcqp::SolveStatus::Infeasible) {
      trace.infeasible_at = i;
      break;
    }
    const double cap = max_stepsize(alpha, beta_fn(theta), problem.constraint_lipschitz());
    const double h = schedule.step(i, alpha, cap);
    theta = theta + h * sol.xi;
    for (int k = 0; k < theta.size(); ++k) {
      if (!std::isfinite(theta[k])) {
        throw std::runtime_error("integrate: NaN at iteration " + std::to_string(i));
      }
    }
    trace.directions.push_back(sol.xi);
    trace.multipliers.push_back(sol.multipliers);
    trace.kkt_residuals.push_back(sol.kkt_residual);
    trace.stepsizes.push_back(h);
    record_point(theta);
  }
  return trace;
}

KktCheck kkt_check(const AnalyticProblem& problem, const Eigen::VectorXd& theta, double tol) {
  KktCheck out;
  const int q = static_cast<int>(problem.constraints.size());
  out.multipliers = Eigen::VectorXd::Zero(q);

  double max_violation = 0.0;
  std::vector<int> active;
  for (int j = 0; j < q; ++j) {
    const double v = problem.constraints[static_cast<std::size_t>(j)].value(theta);
    max_violation = std::max(max_violation, v);
    if (std::abs(v) <= tol) active.push_back(j);
  }
  const Eigen::VectorXd g0 = problem.objective.grad(theta);

  // Nonnegative least squares over active-set subsets: the number of active
  // constraints is tiny, so exhaustive subsets are exact.
  double best = g0.norm();
  Eigen::VectorXd best_u = Eigen::VectorXd::Zero(q);
  const int subsets = 1 << active.size();
  for (int mask = 1; mask < subsets; ++mask) {
    std::vector<int> chosen;
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (mask & (1 << k)) chosen.push_back(active[k]);
    }
    Eigen::MatrixXd G(theta.size(), static_cast<Eigen::Index>(chosen.size()));
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      G.col(static_cast<Eigen::Index>(k)) =
          problem.constraints[static_cast<std::size_t>(chosen[k])].grad(theta);
    }
    const Eigen::VectorXd u = G.colPivHouseholderQr().solve(-g0);
    if ((u.array() < -1e-12).any()) continue;
    const double residual = (g0 + G * u).norm();
    if (residual < best) {
      best = residual;
      best_u.setZero();
      for (std::size_t k = 0; k < chosen.size(); ++k) {
        best_u[chosen[k]] = std::max(0.0, u[static_cast<Eigen::Index>(k)]);
      }
    }
  }
  out.residual = std::max(best, max_violation);
  out.multipliers = best_u;
  out.is_kkt = best <= tol && max_violation <= tol;
  return out;
}

AnalyticProblem make_fixture(const std::string& name) {
  AnalyticProblem p;
  p.name = name;
  if (name == "disk") {
    // min x1 + x2  s.t. |x|^2 - 1 <= 0; KKT point at (-1/sqrt(2), -1/sqrt(2)).
    p.dim = 2;
    p.objective = {[](const Eigen::VectorXd& x) { return x[0] + x[1]; },
                   [](const Eigen::VectorXd& x) {
                     (void)x;
                     return Eigen::Vector2d(1.0, 1.0);
                   },
                   0.0};
    p.constraints.push_back({[](const Eigen::VectorXd& x) { return x.squaredNorm() - 1.0; },
                             [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); },
                             2.0});
    p.known_kkt_points.push_back(Eigen::Vector2d(-std::sqrt(0.5), -std::sqrt(0.5)));
    return p;
  }
  if (name == "corner") {
    // min (1/2)|x - (2,2)|^2  s.t. x1 <= 1, x2 <= 1; both constraints active
    // at the KKT point (1,1) with multipliers (1,1).
    p.dim = 2;
    p.objective = {[](const Eigen::VectorXd& x) {
                     return 0.5 * (x - Eigen::Vector2d(2.0, 2.0)).squaredNorm();
                   },
                   [](const Eigen::VectorXd& x) {
                     return Eigen::VectorXd(x - Eigen::Vector2d(2.0, 2.0));
                   },
                   1.0};
    p.constraints.push_back({[](const Eigen::VectorXd& x) { return x[0] - 1.0; },
                             [](const Eigen::VectorXd& x) {
                               (void)x;
                               return Eigen::Vector2d(1.0, 0.0);
                             },
                             0.0});
    p.constraints.push_back({[](const Eigen::VectorXd& x) { return x[1] - 1.0; },
                             [](const Eigen::VectorXd& x) {
                               (void)x;
                               return Eigen::Vector2d(0.0, 1.0);
                             },
                             0.0});
    p.known_kkt_points.push_back(Eigen::Vector2d(1.0, 1.0));
    return p;
  }
  if (name == "banana") {
    // min (1-x1)^2 + 5 (x2 - x1^2)^2  s.t. |x|^2 - 2 <= 0; the unconstrained
    // minimizer (1,1) sits on the boundary with zero multiplier. Gradient
    // Lipschitz constants are Hessian bounds over the disk.
    p.dim = 2;
    p.objective = {[](const Eigen::VectorXd& x) {
                     const double a = 1.0 - x[0];
                     const double b = x[1] - x[0] * x[0];
                     return a * a + 5.0 * b * b;
                   },
                   [](const Eigen::VectorXd& x) {
                     const double b = x[1] - x[0] * x[0];
                     return Eigen::VectorXd(Eigen::Vector2d(
                         -2.0 * (1.0 - x[0]) - 20.0 * x[0] * b, 10.0 * b));
                   },
                   190.0};
    p.constraints.push_back({[](const Eigen::VectorXd& x) { return x.squaredNorm() - 2.0; },
                             [](const Eigen::VectorXd& x) { return Eigen::VectorXd(2.0 * x); },
                             2.0});
    p.known_kkt_points.push_back(Eigen::Vector2d(1.0, 1.0));
    return p;
  }
  throw std::invalid_argument("unknown fixture: " + name);
}

std::vector<std::string> fixture_names() { return {"disk", "corner", "banana"}; }

}  // namespace rsgf::flow
