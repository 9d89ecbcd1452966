// Throughput comparison between the OpenMP batch kernels and the serial
// reference implementations, on a synthetic Nav2D workload.
#include <chrono>
#include <cstdio>

#include "rsgf/envs.hpp"
#include "rsgf/estimate.hpp"
#include "rsgf/reference.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

int main() {
  using namespace rsgf;

  const envs::Nav2dConfig env_cfg;
  const mdp::CmdpSpec spec = envs::make_nav2d(env_cfg, 40, 0.98);
  Eigen::VectorXd slo(2), shi(2);
  slo << 0.0, 0.0;
  shi << 10.0, 10.0;
  Eigen::VectorXd avar = Eigen::VectorXd::Constant(2, 0.5);
  Eigen::VectorXd alo = Eigen::VectorXd::Constant(2, -5.0);
  Eigen::VectorXd ahi = Eigen::VectorXd::Constant(2, 5.0);
  policy::RbfGaussianPolicy pi(policy::make_center_grid(slo, shi, {8, 8}), 0.5, avar, alo, ahi);

  constexpr int kEpisodes = 256;
  constexpr int kReps = 3;

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif

  double parallel_rollout_ms = 0.0, serial_rollout_ms = 0.0;
  std::vector<mdp::Episode> parallel_eps, serial_eps;
  for (int rep = 0; rep < kReps; ++rep) {
    auto t0 = Clock::now();
    parallel_eps = mdp::rollout_batch(spec, pi, 7, 1, kEpisodes);
    parallel_rollout_ms += ms_since(t0);
    t0 = Clock::now();
    serial_eps = reference::rollout_batch(spec, pi, 7, 1, kEpisodes);
    serial_rollout_ms += ms_since(t0);
  }
  std::printf("rollout_batch   %8.1f ms (openmp)  %8.1f ms (serial reference)\n",
              parallel_rollout_ms / kReps, serial_rollout_ms / kReps);

  const estimate::Batch batch = estimate::as_batch(parallel_eps);
  const std::vector<estimate::Baseline> baselines(2, estimate::zero_baseline());
  double parallel_est_ms = 0.0, serial_est_ms = 0.0;
  Eigen::VectorXd g_par, g_ser;
  for (int rep = 0; rep < kReps; ++rep) {
    auto t0 = Clock::now();
    const auto bundle = estimate::estimate_bundle(batch, pi, spec.gamma, baselines);
    parallel_est_ms += ms_since(t0);
    g_par = bundle.gradients[1];
    t0 = Clock::now();
    g_ser = reference::estimate_gradient(1, batch, pi, spec.gamma, baselines[1]);
    serial_est_ms += ms_since(t0);
  }
  std::printf("estimate kernel %8.1f ms (openmp)  %8.1f ms (serial reference)\n",
              parallel_est_ms / kReps, serial_est_ms / kReps);
  std::printf("gradient agreement |par - ser| = %.3e\n", (g_par - g_ser).norm());
  return 0;
}
