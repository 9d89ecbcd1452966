#pragma once

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

#include "rsgf/rng.hpp"

namespace rsgf::policy {

/// Constants of the differentiability/Lipschitzness assumptions:
/// L bounds the score's Lipschitz modulus in theta, B_tilde the per-component
/// score magnitude, L_tilde the log-density's Lipschitz modulus in theta.
struct LipschitzBounds {
  double L = 0.0;
  double B_tilde = 0.0;
  double L_tilde = 0.0;
};

/// Stochastic policy over vector actions. For discretized policies the
/// actions are the cell representatives and log_prob is the log of the cell
/// mass, so exp(log_prob) sums to one over the action list.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int param_dim() const = 0;
  virtual Eigen::VectorXd params() const = 0;
  virtual void set_params(const Eigen::VectorXd& theta) = 0;

  virtual double log_prob(const Eigen::VectorXd& a, const Eigen::VectorXd& s) const = 0;
  virtual Eigen::VectorXd grad_log_prob(const Eigen::VectorXd& a, const Eigen::VectorXd& s) const = 0;
  virtual Eigen::VectorXd sample(const Eigen::VectorXd& s, Rng& rng) const = 0;
  virtual LipschitzBounds lipschitz_bounds() const = 0;

  /// Density (or pmf) floor over the action set, nu of the importance
  /// sampling assumption. May underflow to 0 for extreme configurations.
  virtual double nu_floor() const = 0;

  virtual std::unique_ptr<Policy> clone() const = 0;
};

/// Gaussian policy with RBF-kernel mean
///   mu(s)^(l) = sum_i tanh(theta_{i,l}) exp(-|s - c_i|^2 / (2 sigma^2)),
/// truncated to a bounded action box and renormalized, so the density has a
/// strictly positive floor nu over the box.
///
/// Parameters are stored as an N_c x action_dim matrix, flattened row-major
/// (index i*action_dim + l) for optimization.
class RbfGaussianPolicy : public Policy {
 public:
  RbfGaussianPolicy(Eigen::MatrixXd centers, double rbf_variance,
                    Eigen::VectorXd action_variances, Eigen::VectorXd box_lo,
                    Eigen::VectorXd box_hi);

  int state_dim() const override { return static_cast<int>(centers_.cols()); }
  int action_dim() const override { return static_cast<int>(action_var_.size()); }
  int param_dim() const override { return static_cast<int>(theta_.size()); }
  int num_centers() const { return static_cast<int>(centers_.rows()); }

  Eigen::VectorXd params() const override;
  void set_params(const Eigen::VectorXd& theta) override;

  Eigen::VectorXd mean(const Eigen::VectorXd& s) const;
  Eigen::VectorXd kernels(const Eigen::VectorXd& s) const;

  double log_prob(const Eigen::VectorXd& a, const Eigen::VectorXd& s) const override;
  Eigen::VectorXd grad_log_prob(const Eigen::VectorXd& a, const Eigen::VectorXd& s) const override;
  Eigen::VectorXd sample(const Eigen::VectorXd& s, Rng& rng) const override;
  LipschitzBounds lipschitz_bounds() const override;

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<RbfGaussianPolicy>(*this);
  }

  /// Density floor over the box given the |mu| <= N_c mean bound. Computed in
  /// log space at construction; exp may underflow for large N_c, in which
  /// case log_nu_floor carries the information.
  double nu_floor() const override { return nu_; }
  double log_nu_floor() const { return log_nu_; }

  const Eigen::MatrixXd& centers() const { return centers_; }
  double rbf_variance() const { return rbf_variance_; }
  const Eigen::VectorXd& action_variances() const { return action_var_; }
  const Eigen::VectorXd& box_lo() const { return box_lo_; }
  const Eigen::VectorXd& box_hi() const { return box_hi_; }

  void save_checkpoint(const std::string& path) const;
  static RbfGaussianPolicy load_checkpoint(const std::string& path);

 private:
  Eigen::MatrixXd centers_;   // N_c x state_dim
  double rbf_variance_;
  Eigen::MatrixXd theta_;     // N_c x action_dim
  Eigen::VectorXd action_var_;
  Eigen::VectorXd box_lo_, box_hi_;
  double log_nu_ = 0.0;
  double nu_ = 1.0;

  void compute_nu_floor();
};

/// Evenly spaced center grid over a state box; sizes per dimension.
Eigen::MatrixXd make_center_grid(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                 const std::vector<int>& per_dim);

/// RBF-Gaussian policy restricted to a finite action grid: each grid action
/// owns a cell of the box and its probability is the truncated-Gaussian mass
/// of the cell. This keeps the mean/score machinery of the continuous policy
/// while producing an exact pmf for tabular enumeration.
class DiscretizedRbfPolicy : public Policy {
 public:
  DiscretizedRbfPolicy(RbfGaussianPolicy base, std::vector<int> cells_per_dim);

  int state_dim() const override { return base_.state_dim(); }
  int action_dim() const override { return base_.action_dim(); }
  int param_dim() const override { return base_.param_dim(); }
  Eigen::VectorXd params() const override { return base_.params(); }
  void set_params(const Eigen::VectorXd& theta) override { base_.set_params(theta); }

  double log_prob(const Eigen::VectorXd& a, const Eigen::VectorXd& s) const override;
  Eigen::VectorXd grad_log_prob(const Eigen::VectorXd& a, const Eigen::VectorXd& s) const override;
  Eigen::VectorXd sample(const Eigen::VectorXd& s, Rng& rng) const override;
  LipschitzBounds lipschitz_bounds() const override { return base_.lipschitz_bounds(); }
  double nu_floor() const override { return nu_; }
  double log_nu_floor() const { return log_nu_; }

  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<DiscretizedRbfPolicy>(*this);
  }

  /// Cell representatives (cell centers), one per discrete action.
  std::vector<Eigen::VectorXd> actions() const;
  const RbfGaussianPolicy& base() const { return base_; }

 private:
  RbfGaussianPolicy base_;
  std::vector<int> cells_per_dim_;
  std::vector<std::vector<double>> edges_;  // per dim, cells+1 edges
  double log_nu_ = 0.0;
  double nu_ = 1.0;

  std::vector<int> locate_cell(const Eigen::VectorXd& a) const;
  void compute_nu_floor();
};

}  // namespace rsgf::policy
