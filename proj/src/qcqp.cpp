#include "rsgf/qcqp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rsgf/estimate.hpp"

namespace rsgf::qcqp {

namespace {

// Dual (Lagrangian at the exact inner minimizer). Concave in u.
double dual_value(const Problem& p, const Eigen::VectorXd& u, const Eigen::VectorXd& xi) {
  double val = p.objective(xi);
  for (int j = 0; j < static_cast<int>(p.constraints().size()); ++j) {
    val += u[j] * p.constraint_value(j, xi);
  }
  return val;
}

Eigen::VectorXd constraint_values(const Problem& p, const Eigen::VectorXd& xi) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(p.constraints().size()));
  for (int j = 0; j < c.size(); ++j) c[j] = p.constraint_value(j, xi);
  return c;
}

// Local refinement: Newton on the active complementarity system c_A(u) = 0.
// The dual Jacobian is -M^T M / (1 + beta sum u) with M = [g_j + beta xi],
// so each step solves a tiny SPD system. Projection keeps u >= 0.
void newton_polish(const Problem& p, Eigen::VectorXd& u, Eigen::VectorXd& xi, double tol) {
  const int q = static_cast<int>(p.constraints().size());
  for (int inner = 0; inner < 60; ++inner) {
    xi = closed_form_direction(p.g0(), p.constraints(), u, p.beta());
    const Eigen::VectorXd c = constraint_values(p, xi);
    std::vector<int> active;
    for (int j = 0; j < q; ++j) {
      if (u[j] > 0.0 || c[j] > tol) active.push_back(j);
    }
    if (active.empty()) return;
    double residual = 0.0;
    for (int j : active) residual = std::max(residual, std::abs(c[j]));
    if (residual <= tol * 0.01) return;

    const double scale = 1.0 + p.beta() * u.sum();
    Eigen::MatrixXd M(p.dim(), static_cast<Eigen::Index>(active.size()));
    Eigen::VectorXd c_active(static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
      M.col(static_cast<Eigen::Index>(k)) =
          p.constraints()[static_cast<std::size_t>(active[k])].grad + p.beta() * xi;
      c_active[static_cast<Eigen::Index>(k)] = c[active[k]];
    }
    Eigen::MatrixXd H = M.transpose() * M / scale;
    H.diagonal().array() += 1e-14 * (1.0 + H.trace());
    const Eigen::VectorXd du = H.ldlt().solve(c_active);
    if (!du.allFinite()) return;
    for (std::size_t k = 0; k < active.size(); ++k) {
      u[active[k]] = std::max(0.0, u[active[k]] + du[static_cast<Eigen::Index>(k)]);
    }
  }
  xi = closed_form_direction(p.g0(), p.constraints(), u, p.beta());
}

}  // namespace

Problem::Problem(Eigen::VectorXd g0, std::vector<Constraint> constraints, double beta)
    : g0_(std::move(g0)), constraints_(std::move(constraints)), beta_(beta) {
  if (!(beta_ > 0.0)) {
    throw std::invalid_argument("qcqp: beta must be strictly positive");
  }
  for (const auto& c : constraints_) {
    if (c.grad.size() != g0_.size()) {
      throw std::invalid_argument("qcqp: constraint gradient dimension mismatch");
    }
  }
}

double Problem::constraint_value(int j, const Eigen::VectorXd& xi) const {
  const auto& c = constraints_[static_cast<std::size_t>(j)];
  return c.level + c.grad.dot(xi) + 0.5 * beta_ * xi.squaredNorm();
}

double Problem::objective(const Eigen::VectorXd& xi) const {
  return 0.5 * (xi + g0_).squaredNorm();
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

Eigen::VectorXd closed_form_direction(const Eigen::VectorXd& g0,
                                      const std::vector<Constraint>& constraints,
                                      const Eigen::VectorXd& multipliers,
                                      double beta) {
  Eigen::VectorXd numerator = g0;
  double mult_sum = 0.0;
  for (int j = 0; j < multipliers.size(); ++j) {
    numerator += multipliers[j] * constraints[static_cast<std::size_t>(j)].grad;
    mult_sum += multipliers[j];
  }
  return -numerator / (1.0 + beta * mult_sum);
}

double kkt_residual(const Problem& problem, const Eigen::VectorXd& xi,
                    const Eigen::VectorXd& multipliers) {
  const auto& cons = problem.constraints();
  Eigen::VectorXd stationarity = xi + problem.g0();
  double residual = 0.0;
  for (int j = 0; j < multipliers.size(); ++j) {
    const double cj = problem.constraint_value(j, xi);
    stationarity += multipliers[j] * (cons[static_cast<std::size_t>(j)].grad + problem.beta() * xi);
    residual = std::max(residual, std::max(0.0, cj));              // primal
    residual = std::max(residual, std::max(0.0, -multipliers[j])); // dual
    residual = std::max(residual, std::abs(multipliers[j] * cj));  // complementarity
  }
  return std::max(residual, stationarity.norm());
}

Solution solve(const Problem& problem, const SolveOptions& options) {
  const int q = static_cast<int>(problem.constraints().size());
  Solution out;

  if (q == 0) {
    out.xi = -problem.g0();
    out.multipliers = Eigen::VectorXd::Zero(0);
    out.status = SolveStatus::Optimal;
    out.kkt_residual = 0.0;
    out.objective = 0.0;
    return out;
  }

  // A single constraint with min value a_j - |g_j|^2/(2 beta) > 0 is
  // unsatisfiable on its own.
  for (const auto& c : problem.constraints()) {
    if (c.level - c.grad.squaredNorm() / (2.0 * problem.beta()) > options.tol) {
      out.status = SolveStatus::Infeasible;
      return out;
    }
  }

  Eigen::VectorXd u = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd xi = closed_form_direction(problem.g0(), problem.constraints(), u, problem.beta());
  double phi = dual_value(problem, u, xi);
  double step = 1.0;

  double best_residual = kkt_residual(problem, xi, u);
  Eigen::VectorXd best_xi = xi;
  Eigen::VectorXd best_u = u;

  bool diverged = false;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    if (best_residual <= options.tol) break;

    const Eigen::VectorXd grad = constraint_values(problem, xi);

    // Projected ascent step with backtracking on the dual objective.
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd u_next = (u + step * grad).cwiseMax(0.0);
      if ((u_next - u).lpNorm<Eigen::Infinity>() == 0.0) break;
      Eigen::VectorXd xi_next =
          closed_form_direction(problem.g0(), problem.constraints(), u_next, problem.beta());
      const double phi_next = dual_value(problem, u_next, xi_next);
      const double gain_needed = 1e-4 / step * (u_next - u).squaredNorm();
      if (phi_next >= phi + gain_needed) {
        u = std::move(u_next);
        xi = std::move(xi_next);
        phi = phi_next;
        step = std::min(step * 2.0, 1e12);
        accepted = true;
        break;
      }
      step *= 0.5;
    }

    double residual = kkt_residual(problem, xi, u);
    if (residual < best_residual) {
      best_residual = residual;
      best_xi = xi;
      best_u = u;
    }

    // Once ascent has localized the active set (or stalls in the flat
    // region), polish with Newton on the complementarity system.
    if (!accepted || (residual < 1e-2 && residual > options.tol)) {
      Eigen::VectorXd u_polish = u;
      Eigen::VectorXd xi_polish = xi;
      newton_polish(problem, u_polish, xi_polish, options.tol);
      const double polished = kkt_residual(problem, xi_polish, u_polish);
      if (polished < best_residual) {
        best_residual = polished;
        best_xi = xi_polish;
        best_u = u_polish;
      }
      if (polished < residual) {
        u = std::move(u_polish);
        xi = std::move(xi_polish);
        phi = dual_value(problem, u, xi);
        residual = polished;
      } else if (!accepted) {
        break;  // neither ascent nor polish makes progress
      }
    }
    if (u.norm() > options.divergence_norm) {
      diverged = true;
      break;
    }
  }

  if (diverged && !slater_probe(problem).strictly_feasible) {
    out.status = SolveStatus::Infeasible;
    return out;
  }

  out.xi = best_xi;
  out.multipliers = best_u;
  out.kkt_residual = best_residual;
  out.objective = problem.objective(best_xi);
  out.status = best_residual <= options.tol ? SolveStatus::Optimal : SolveStatus::MaxIterations;
  const double act_tol = std::max(options.tol * 10.0, 1e-12);
  for (int j = 0; j < q; ++j) {
    if (std::abs(problem.constraint_value(j, out.xi)) <= act_tol) out.active_set.push_back(j);
  }
  return out;
}

Problem build_subproblem(const Eigen::VectorXd& theta, const estimate::EstimateBundle& estimates,
                         double alpha, const BetaFn& beta_fn, double bound_C) {
  if (!(alpha > 0.0)) throw std::invalid_argument("build_subproblem: alpha must be positive");
  if (!(bound_C > 0.0)) throw std::invalid_argument("build_subproblem: bound C must be positive");
  const int q = static_cast<int>(estimates.gradients.size()) - 1;
  if (q < 0 || estimates.values.size() != q + 1) {
    throw std::invalid_argument("build_subproblem: bundle must carry q+1 gradients and values");
  }
  for (const auto& g : estimates.gradients) {
    if (g.size() != theta.size()) {
      throw std::invalid_argument("build_subproblem: gradient dimension mismatch");
    }
  }
  std::vector<Constraint> constraints;
  constraints.reserve(static_cast<std::size_t>(q) + 1);
  for (int j = 1; j <= q; ++j) {
    constraints.push_back({alpha * estimates.values[j], estimates.gradients[static_cast<std::size_t>(j)]});
  }
  constraints.push_back({alpha * (theta.squaredNorm() - bound_C), 2.0 * theta});
  return Problem(estimates.gradients[0], std::move(constraints), beta_fn(theta));
}

SlaterProbe slater_probe(const Problem& problem, double tol) {
  SlaterProbe out;
  const int q = static_cast<int>(problem.constraints().size());
  if (q == 0) {
    out.strictly_feasible = true;
    out.witness = Eigen::VectorXd::Zero(problem.dim());
    return out;
  }

  const auto strict_margin = [&](const Eigen::VectorXd& xi) {
    double m = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < q; ++j) m = std::max(m, problem.constraint_value(j, xi));
    return m;
  };

  // xi = 0 handles the all-interior case directly.
  {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(problem.dim());
    if (strict_margin(zero) < -tol) {
      out.strictly_feasible = true;
      out.witness = zero;
      return out;
    }
  }

  // Linearized minimum-norm QP: min (1/2)|xi|^2 s.t. a_j + g_j'xi <= -slack.
  // Dual ascent with xi(lambda) = -sum lambda_j g_j; infeasibility shows up
  // as divergent multipliers.
  const auto linearized = [&](double slack) -> std::optional<Eigen::VectorXd> {
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(problem.dim());
    double step = 1.0;
    const auto lin_value = [&](int j, const Eigen::VectorXd& x) {
      const auto& c = problem.constraints()[static_cast<std::size_t>(j)];
      return c.level + slack + c.grad.dot(x);
    };
    const auto dual = [&](const Eigen::VectorXd& l, const Eigen::VectorXd& x) {
      double v = 0.5 * x.squaredNorm();
      for (int j = 0; j < q; ++j) v += l[j] * lin_value(j, x);
      return v;
    };
    double phi = dual(lambda, xi);
    for (int iter = 0; iter < 20000; ++iter) {
      Eigen::VectorXd grad(q);
      for (int j = 0; j < q; ++j) grad[j] = lin_value(j, xi);
      double viol = 0.0;
      for (int j = 0; j < q; ++j) viol = std::max(viol, grad[j]);
      double comp = 0.0;
      for (int j = 0; j < q; ++j) comp = std::max(comp, std::abs(lambda[j] * grad[j]));
      if (viol <= 1e-12 && comp <= 1e-12) return xi;
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        Eigen::VectorXd l_next = (lambda + step * grad).cwiseMax(0.0);
        if ((l_next - lambda).lpNorm<Eigen::Infinity>() == 0.0) break;
        Eigen::VectorXd xi_next = Eigen::VectorXd::Zero(problem.dim());
        for (int j = 0; j < q; ++j) {
          xi_next -= l_next[j] * problem.constraints()[static_cast<std::size_t>(j)].grad;
        }
        const double phi_next = dual(l_next, xi_next);
        if (phi_next >= phi + 1e-4 / step * (l_next - lambda).squaredNorm()) {
          lambda = std::move(l_next);
          xi = std::move(xi_next);
          phi = phi_next;
          step = std::min(step * 2.0, 1e12);
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (lambda.norm() > 1e10) return std::nullopt;  // linear system infeasible
      if (!moved) return xi;
    }
    return xi;
  };

  std::optional<Eigen::VectorXd> xi_star = linearized(0.0);
  if (xi_star && xi_star->norm() <= tol) {
    // Degenerate direction (some a_j ~ 0): retry with a positive slack to get
    // a usable ray.
    xi_star = linearized(std::max(tol * 100.0, 1e-8));
  }
  if (!xi_star) return out;
  const double norm2 = xi_star->squaredNorm();
  if (norm2 <= 0.0) return out;

  // Scan the ray t * xi_star: each constraint value is a scalar quadratic in
  // t, so candidate t's are powers of two plus each constraint's vertex.
  std::vector<double> candidates;
  for (int k = -30; k <= 30; ++k) candidates.push_back(std::ldexp(1.0, k));
  for (int j = 0; j < q; ++j) {
    const auto& c = problem.constraints()[static_cast<std::size_t>(j)];
    const double slope = c.grad.dot(*xi_star);
    const double curv = problem.beta() * norm2;
    if (slope < 0.0 && curv > 0.0) candidates.push_back(-slope / curv);
  }
  double best_t = 0.0;
  double best_margin = std::numeric_limits<double>::infinity();
  for (double t : candidates) {
    const double m = strict_margin(t * (*xi_star));
    if (m < best_margin) {
      best_margin = m;
      best_t = t;
    }
  }
  if (best_margin < -tol) {
    out.strictly_feasible = true;
    out.witness = best_t * (*xi_star);
  }
  return out;
}

}  // namespace rsgf::qcqp
