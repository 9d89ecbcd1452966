#include "rsgf/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "rsgf/normal.hpp"

namespace rsgf::policy {

namespace {

// max |d/dt tanh'(t)| = max |2 tanh (1 - tanh^2)| = 4/(3 sqrt 3)
constexpr double kTanhSecondDerivBound = 0.769800358919501;

void check_box(const Eigen::VectorXd& a, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  for (int l = 0; l < a.size(); ++l) {
    if (a[l] < lo[l] || a[l] > hi[l]) {
      throw std::domain_error("policy: action outside the configured action box");
    }
  }
}

}  // namespace

RbfGaussianPolicy::RbfGaussianPolicy(Eigen::MatrixXd centers, double rbf_variance,
                                     Eigen::VectorXd action_variances, Eigen::VectorXd box_lo,
                                     Eigen::VectorXd box_hi)
    : centers_(std::move(centers)),
      rbf_variance_(rbf_variance),
      action_var_(std::move(action_variances)),
      box_lo_(std::move(box_lo)),
      box_hi_(std::move(box_hi)) {
  if (rbf_variance_ <= 0.0) throw std::invalid_argument("policy: rbf variance must be positive");
  if (action_var_.size() != box_lo_.size() || action_var_.size() != box_hi_.size()) {
    throw std::invalid_argument("policy: action dimension mismatch");
  }
  for (int l = 0; l < action_var_.size(); ++l) {
    if (action_var_[l] <= 0.0) throw std::invalid_argument("policy: action variance must be positive");
    if (box_lo_[l] >= box_hi_[l]) throw std::invalid_argument("policy: empty action box");
  }
  theta_ = Eigen::MatrixXd::Zero(centers_.rows(), action_var_.size());
  compute_nu_floor();
}

Eigen::VectorXd RbfGaussianPolicy::params() const {
  Eigen::VectorXd flat(theta_.size());
  for (int i = 0; i < theta_.rows(); ++i)
    for (int l = 0; l < theta_.cols(); ++l) flat[i * theta_.cols() + l] = theta_(i, l);
  return flat;
}

void RbfGaussianPolicy::set_params(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size()) throw std::invalid_argument("policy: parameter size mismatch");
  for (int i = 0; i < theta_.rows(); ++i)
    for (int l = 0; l < theta_.cols(); ++l) theta_(i, l) = theta[i * theta_.cols() + l];
}

Eigen::VectorXd RbfGaussianPolicy::kernels(const Eigen::VectorXd& s) const {
  Eigen::VectorXd k(centers_.rows());
  for (int i = 0; i < centers_.rows(); ++i) {
    const double d2 = (centers_.row(i).transpose() - s).squaredNorm();
    k[i] = std::exp(-d2 / (2.0 * rbf_variance_));
  }
  return k;
}

Eigen::VectorXd RbfGaussianPolicy::mean(const Eigen::VectorXd& s) const {
  const Eigen::VectorXd k = kernels(s);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(action_dim());
  for (int i = 0; i < theta_.rows(); ++i) {
    for (int l = 0; l < theta_.cols(); ++l) mu[l] += std::tanh(theta_(i, l)) * k[i];
  }
  return mu;
}

double RbfGaussianPolicy::log_prob(const Eigen::VectorXd& a, const Eigen::VectorXd& s) const {
  check_box(a, box_lo_, box_hi_);
  const Eigen::VectorXd mu = mean(s);
  double lp = 0.0;
  for (int l = 0; l < action_dim(); ++l) {
    const double sigma = std::sqrt(action_var_[l]);
    const double z = (a[l] - mu[l]) / sigma;
    const double log_mass =
        normal::log_cdf_interval((box_lo_[l] - mu[l]) / sigma, (box_hi_[l] - mu[l]) / sigma);
    lp += -0.5 * z * z - normal::kLogSqrt2Pi - std::log(sigma) - log_mass;
  }
  return lp;
}

Eigen::VectorXd RbfGaussianPolicy::grad_log_prob(const Eigen::VectorXd& a,
                                                 const Eigen::VectorXd& s) const {
  check_box(a, box_lo_, box_hi_);
  const Eigen::VectorXd mu = mean(s);
  Eigen::VectorXd score(action_dim());
  for (int l = 0; l < action_dim(); ++l) {
    const double sigma = std::sqrt(action_var_[l]);
    const double zlo = (box_lo_[l] - mu[l]) / sigma;
    const double zhi = (box_hi_[l] - mu[l]) / sigma;
    // d log pi / d mu = (a - E[truncated]) / sigma^2
    const double trunc_mean = mu[l] + sigma * normal::truncated_mean(zlo, zhi);
    score[l] = (a[l] - trunc_mean) / action_var_[l];
  }
  const Eigen::VectorXd k = kernels(s);
  Eigen::VectorXd grad(param_dim());
  for (int i = 0; i < theta_.rows(); ++i) {
    for (int l = 0; l < theta_.cols(); ++l) {
      const double t = std::tanh(theta_(i, l));
      grad[i * theta_.cols() + l] = k[i] * (1.0 - t * t) * score[l];
    }
  }
  return grad;
}

Eigen::VectorXd RbfGaussianPolicy::sample(const Eigen::VectorXd& s, Rng& rng) const {
  const Eigen::VectorXd mu = mean(s);
  Eigen::VectorXd a(action_dim());
  for (int attempt = 0; attempt < 10000; ++attempt) {
    bool inside = true;
    for (int l = 0; l < action_dim(); ++l) {
      a[l] = mu[l] + std::sqrt(action_var_[l]) * rng.normal();
      if (a[l] < box_lo_[l] || a[l] > box_hi_[l]) inside = false;
    }
    if (inside) return a;
  }
  throw std::runtime_error(
      "policy: rejection sampling budget exhausted; action box and covariance "
      "are inconsistent with the current mean");
}

LipschitzBounds RbfGaussianPolicy::lipschitz_bounds() const {
  // Derivation (W_l = box width, sigma_l^2 = action variance, N_c centers):
  //
  //   d chi / d mu_l = (a_l - mu_l)/sigma_l^2 + d(-log Z_l)/d mu_l
  //                  = (a_l - E[truncated])/sigma_l^2,
  //
  // since d log Z/d mu is the truncated first moment; both a_l and the
  // truncated mean lie in the box, so |score_l| <= W_l/sigma_l^2. Each
  // parameter enters through d mu_l/d theta_{i,l} = K_i(s) tanh'(theta_{i,l})
  // with K_i <= 1 and tanh' <= 1, hence
  //
  //   B_tilde = max_l W_l / sigma_l^2            (per-component score bound)
  //   L_tilde = sqrt(N_c sum_l (W_l/sigma_l^2)^2) (|grad chi| <= L_tilde, so
  //             the mean value theorem gives the log-density modulus).
  //
  // For the score's own modulus, d score_l/d mu_l = -Var[truncated]/sigma_l^4
  // and Popoviciu bounds Var[truncated] <= W_l^2/4. The Hessian of chi splits
  // into per-dimension rank-one blocks (sum_l c_l k_l k_l^T, |c_l| as above,
  // |k_l|^2 <= N_c) plus a diagonal tanh'' term bounded by 4/(3 sqrt 3):
  //
  //   L = N_c max_l W_l^2/(4 sigma_l^4) + (4/(3 sqrt 3)) B_tilde.
  LipschitzBounds b;
  const int nc = num_centers();
  double max_score = 0.0, max_curv = 0.0, score_sq = 0.0;
  for (int l = 0; l < action_dim(); ++l) {
    const double width = box_hi_[l] - box_lo_[l];
    const double var = action_var_[l];
    max_score = std::max(max_score, width / var);
    max_curv = std::max(max_curv, width * width / (4.0 * var * var));
    score_sq += (width / var) * (width / var);
  }
  b.B_tilde = max_score;
  b.L_tilde = std::sqrt(static_cast<double>(nc) * score_sq);
  b.L = static_cast<double>(nc) * max_curv + kTanhSecondDerivBound * max_score;
  return b;
}

void RbfGaussianPolicy::compute_nu_floor() {
  // Worst-case truncated density over the box, minimized over mean values
  // |mu| <= N_c. The density is unimodal in a, so per dimension the minimum
  // sits at a box endpoint; scan mu on a grid including the extremes.
  const double mu_bound = static_cast<double>(num_centers());
  log_nu_ = 0.0;
  for (int l = 0; l < action_dim(); ++l) {
    const double sigma = std::sqrt(action_var_[l]);
    double worst = std::numeric_limits<double>::infinity();
    const int grid = 512;
    for (int g = 0; g <= grid; ++g) {
      const double mu = -mu_bound + 2.0 * mu_bound * g / grid;
      const double zlo = (box_lo_[l] - mu) / sigma;
      const double zhi = (box_hi_[l] - mu) / sigma;
      const double log_mass = normal::log_cdf_interval(zlo, zhi);
      const double at_lo = -0.5 * zlo * zlo - normal::kLogSqrt2Pi - std::log(sigma) - log_mass;
      const double at_hi = -0.5 * zhi * zhi - normal::kLogSqrt2Pi - std::log(sigma) - log_mass;
      worst = std::min(worst, std::min(at_lo, at_hi));
    }
    log_nu_ += worst;
  }
  nu_ = std::exp(log_nu_);
}

void RbfGaussianPolicy::save_checkpoint(const std::string& path) const {
  nlohmann::json j;
  j["format"] = "rsgf-policy-v1";
  j["rbf_variance"] = rbf_variance_;
  j["centers"] = nlohmann::json::array();
  for (int i = 0; i < centers_.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < centers_.cols(); ++c) row.push_back(centers_(i, c));
    j["centers"].push_back(row);
  }
  const auto vec = [](const Eigen::VectorXd& v) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
  };
  j["action_variances"] = vec(action_var_);
  j["box_lo"] = vec(box_lo_);
  j["box_hi"] = vec(box_hi_);
  j["theta"] = vec(params());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("policy: cannot write checkpoint " + path);
  f << j.dump(2) << "\n";
}

RbfGaussianPolicy RbfGaussianPolicy::load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("policy: cannot read checkpoint " + path);
  nlohmann::json j;
  f >> j;
  if (j.value("format", "") != "rsgf-policy-v1") {
    throw std::runtime_error("policy: unknown checkpoint format in " + path);
  }
  const auto& jc = j.at("centers");
  Eigen::MatrixXd centers(jc.size(), jc.empty() ? 0 : jc[0].size());
  for (int i = 0; i < centers.rows(); ++i)
    for (int c = 0; c < centers.cols(); ++c) centers(i, c) = jc[i][c].get<double>();
  const auto vec = [](const nlohmann::json& arr) {
    Eigen::VectorXd v(arr.size());
    for (int i = 0; i < v.size(); ++i) v[i] = arr[i].get<double>();
    return v;
  };
  RbfGaussianPolicy p(centers, j.at("rbf_variance").get<double>(), vec(j.at("action_variances")),
                      vec(j.at("box_lo")), vec(j.at("box_hi")));
  p.set_params(vec(j.at("theta")));
  return p;
}

Eigen::MatrixXd make_center_grid(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                 const std::vector<int>& per_dim) {
  const int dims = static_cast<int>(per_dim.size());
  int total = 1;
  for (int n : per_dim) {
    if (n < 1) throw std::invalid_argument("policy: center grid needs >= 1 point per dim");
    total *= n;
  }
  Eigen::MatrixXd centers(total, dims);
  for (int idx = 0; idx < total; ++idx) {
    int rem = idx;
    for (int d = dims - 1; d >= 0; --d) {
      const int k = rem % per_dim[d];
      rem /= per_dim[d];
      centers(idx, d) = per_dim[d] == 1 ? 0.5 * (lo[d] + hi[d])
                                        : lo[d] + (hi[d] - lo[d]) * k / (per_dim[d] - 1);
    }
  }
  return centers;
}

DiscretizedRbfPolicy::DiscretizedRbfPolicy(RbfGaussianPolicy base, std::vector<int> cells_per_dim)
    : base_(std::move(base)), cells_per_dim_(std::move(cells_per_dim)) {
  if (static_cast<int>(cells_per_dim_.size()) != base_.action_dim()) {
    throw std::invalid_argument("policy: cells_per_dim size mismatch");
  }
  edges_.resize(cells_per_dim_.size());
  for (std::size_t d = 0; d < cells_per_dim_.size(); ++d) {
    const int n = cells_per_dim_[d];
    if (n < 1) throw std::invalid_argument("policy: need >= 1 cell per dim");
    edges_[d].resize(n + 1);
    for (int k = 0; k <= n; ++k) {
      edges_[d][k] = base_.box_lo()[static_cast<int>(d)] +
                     (base_.box_hi()[static_cast<int>(d)] - base_.box_lo()[static_cast<int>(d)]) *
                         k / n;
    }
  }
  compute_nu_floor();
}

void DiscretizedRbfPolicy::compute_nu_floor() {
  // Smallest conditional cell mass over mean values |mu| <= N_c: the pmf
  // analogue of the continuous density floor.
  const double mu_bound = static_cast<double>(base_.num_centers());
  log_nu_ = 0.0;
  for (std::size_t dim = 0; dim < cells_per_dim_.size(); ++dim) {
    const int l = static_cast<int>(dim);
    const double sigma = std::sqrt(base_.action_variances()[l]);
    double worst = std::numeric_limits<double>::infinity();
    const int grid = 256;
    for (int g = 0; g <= grid; ++g) {
      const double mu = -mu_bound + 2.0 * mu_bound * g / grid;
      const double log_box = normal::log_cdf_interval((base_.box_lo()[l] - mu) / sigma,
                                                      (base_.box_hi()[l] - mu) / sigma);
      for (int k = 0; k < cells_per_dim_[dim]; ++k) {
        const double zlo = (edges_[dim][static_cast<std::size_t>(k)] - mu) / sigma;
        const double zhi = (edges_[dim][static_cast<std::size_t>(k) + 1] - mu) / sigma;
        worst = std::min(worst, normal::log_cdf_interval(zlo, zhi) - log_box);
      }
    }
    log_nu_ += worst;
  }
  nu_ = std::exp(log_nu_);
}

std::vector<int> DiscretizedRbfPolicy::locate_cell(const Eigen::VectorXd& a) const {
  std::vector<int> cell(cells_per_dim_.size());
  for (std::size_t d = 0; d < cells_per_dim_.size(); ++d) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cells_per_dim_[d]; ++k) {
      const double center = 0.5 * (edges_[d][k] + edges_[d][k + 1]);
      const double dist = std::abs(a[static_cast<int>(d)] - center);
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    cell[d] = best;
  }
  return cell;
}

double DiscretizedRbfPolicy::log_prob(const Eigen::VectorXd& a, const Eigen::VectorXd& s) const {
  const Eigen::VectorXd mu = base_.mean(s);
  const std::vector<int> cell = locate_cell(a);
  double lp = 0.0;
  for (int l = 0; l < action_dim(); ++l) {
    const double sigma = std::sqrt(base_.action_variances()[l]);
    const double zlo = (edges_[static_cast<std::size_t>(l)][cell[static_cast<std::size_t>(l)]] - mu[l]) / sigma;
    const double zhi = (edges_[static_cast<std::size_t>(l)][cell[static_cast<std::size_t>(l)] + 1] - mu[l]) / sigma;
    const double zbl = (base_.box_lo()[l] - mu[l]) / sigma;
    const double zbh = (base_.box_hi()[l] - mu[l]) / sigma;
    lp += normal::log_cdf_interval(zlo, zhi) - normal::log_cdf_interval(zbl, zbh);
  }
  return lp;
}

Eigen::VectorXd DiscretizedRbfPolicy::grad_log_prob(const Eigen::VectorXd& a,
                                                    const Eigen::VectorXd& s) const {
  const Eigen::VectorXd mu = base_.mean(s);
  const std::vector<int> cell = locate_cell(a);
  Eigen::VectorXd score(action_dim());
  for (int l = 0; l < action_dim(); ++l) {
    const double sigma = std::sqrt(base_.action_variances()[l]);
    const double zlo = (edges_[static_cast<std::size_t>(l)][cell[static_cast<std::size_t>(l)]] - mu[l]) / sigma;
    const double zhi = (edges_[static_cast<std::size_t>(l)][cell[static_cast<std::size_t>(l)] + 1] - mu[l]) / sigma;
    const double zbl = (base_.box_lo()[l] - mu[l]) / sigma;
    const double zbh = (base_.box_hi()[l] - mu[l]) / sigma;
    // d log P(cell) / d mu = (E[cell] - E[box]) / sigma^2
    score[l] = (normal::truncated_mean(zlo, zhi) - normal::truncated_mean(zbl, zbh)) / sigma;
  }
  const Eigen::VectorXd k = base_.kernels(s);
  const Eigen::VectorXd theta = base_.params();
  Eigen::VectorXd grad(param_dim());
  const int adim = action_dim();
  for (int i = 0; i < base_.num_centers(); ++i) {
    for (int l = 0; l < adim; ++l) {
      const double t = std::tanh(theta[i * adim + l]);
      grad[i * adim + l] = k[i] * (1.0 - t * t) * score[l];
    }
  }
  return grad;
}

Eigen::VectorXd DiscretizedRbfPolicy::sample(const Eigen::VectorXd& s, Rng& rng) const {
  const Eigen::VectorXd mu = base_.mean(s);
  Eigen::VectorXd a(action_dim());
  for (int l = 0; l < action_dim(); ++l) {
    const double sigma = std::sqrt(base_.action_variances()[l]);
    const double zbl = (base_.box_lo()[l] - mu[l]) / sigma;
    const double zbh = (base_.box_hi()[l] - mu[l]) / sigma;
    const double log_box = normal::log_cdf_interval(zbl, zbh);
    const double u = rng.uniform01();
    double cum = 0.0;
    int chosen = cells_per_dim_[static_cast<std::size_t>(l)] - 1;
    for (int k = 0; k < cells_per_dim_[static_cast<std::size_t>(l)]; ++k) {
      const double zlo = (edges_[static_cast<std::size_t>(l)][k] - mu[l]) / sigma;
      const double zhi = (edges_[static_cast<std::size_t>(l)][k + 1] - mu[l]) / sigma;
      cum += std::exp(normal::log_cdf_interval(zlo, zhi) - log_box);
      if (u <= cum) {
        chosen = k;
        break;
      }
    }
    a[l] = 0.5 * (edges_[static_cast<std::size_t>(l)][chosen] + edges_[static_cast<std::size_t>(l)][chosen + 1]);
  }
  return a;
}

std::vector<Eigen::VectorXd> DiscretizedRbfPolicy::actions() const {
  int total = 1;
  for (int n : cells_per_dim_) total *= n;
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(total));
  for (int idx = 0; idx < total; ++idx) {
    Eigen::VectorXd a(action_dim());
    int rem = idx;
    for (int d = action_dim() - 1; d >= 0; --d) {
      const int k = rem % cells_per_dim_[static_cast<std::size_t>(d)];
      rem /= cells_per_dim_[static_cast<std::size_t>(d)];
      a[d] = 0.5 * (edges_[static_cast<std::size_t>(d)][k] + edges_[static_cast<std::size_t>(d)][k + 1]);
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace rsgf::policy
