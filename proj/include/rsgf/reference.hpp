#pragma once

#include <Eigen/Core>

#include "rsgf/estimate.hpp"
#include "rsgf/mdp.hpp"

// Plain serial implementations of the batch kernels, kept deliberately
// simple. Tests check the OpenMP kernels against these exactly, and
// tools/bench compares their throughput.
namespace rsgf::reference {

/// Per-step density-ratio product, no log-space trick.
double is_weight_product(const mdp::Episode& episode, const policy::Policy& target,
                         const policy::Policy& behavior);

double estimate_value(int j, const estimate::Batch& batch, const policy::Policy& target,
                      double gamma, const std::optional<estimate::ClipRange>& clip = std::nullopt);

Eigen::VectorXd estimate_gradient(int j, const estimate::Batch& batch,
                                  const policy::Policy& target, double gamma,
                                  const estimate::Baseline& baseline,
                                  const std::optional<estimate::ClipRange>& clip = std::nullopt);

/// On-policy special case: average discounted return, no weights at all.
double value_weightless(int j, const estimate::Batch& batch, double gamma);

std::vector<mdp::Episode> rollout_batch(const mdp::CmdpSpec& spec, const policy::Policy& pi,
                                        std::uint64_t seed, std::uint64_t iteration, int n,
                                        const std::string& behavior_tag = "");

}  // namespace rsgf::reference
