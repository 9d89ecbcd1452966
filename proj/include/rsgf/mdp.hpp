#pragma once

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rsgf/policy.hpp"
#include "rsgf/rng.hpp"

namespace rsgf::mdp {

using RewardFn = std::function<double(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                                      const Eigen::VectorXd& s_next)>;

/// Explicit-probability data for exhaustive enumeration. transition_probs[a]
/// is |S| x |S| with row s giving P(s, a, .); rows sum to one.
struct TabularData {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> actions;
  Eigen::VectorXd initial_probs;
  std::vector<Eigen::MatrixXd> transition_probs;
};

struct CmdpSpec {
  int state_dim = 0;
  int action_dim = 0;
  std::function<Eigen::VectorXd(Rng&)> initial_state;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&, Rng&)> transition;
  std::vector<RewardFn> rewards;        // j = 0..q
  std::vector<double> reward_bounds;    // B_j, |R_j| <= B_j
  int horizon = 0;                       // T
  double gamma = 0.0;
  std::function<bool(const Eigen::VectorXd&)> terminate;  // optional truncation
  std::optional<TabularData> tabular;

  int num_reward_streams() const { return static_cast<int>(rewards.size()); }
};

/// One trajectory [s_0, a_0, ..., s_T, a_T, s_{T+1}]: T+2 states, T+1 actions,
/// (q+1) x (T+1) rewards. Truncated episodes keep full-length arrays with the
/// remaining rewards zero-filled; realized_steps counts actions actually taken
/// and the behavior log-prob cache runs over realized steps only.
struct Episode {
  Eigen::MatrixXd states;   // (T+2) x state_dim
  Eigen::MatrixXd actions;  // (T+1) x action_dim
  Eigen::MatrixXd rewards;  // (q+1) x (T+1)
  int realized_steps = 0;
  std::string behavior_tag;
  Eigen::VectorXd behavior_params;
  double behavior_log_prob = 0.0;

  int horizon() const { return static_cast<int>(actions.rows()) - 1; }
};

Episode rollout(const CmdpSpec& spec, const policy::Policy& pi, Rng& rng,
                const std::string& behavior_tag = "");

/// n rollouts in parallel. Episode i draws from the counter-based stream
/// (seed, iteration, i), so the batch is reproducible for any thread count.
std::vector<Episode> rollout_batch(const CmdpSpec& spec, const policy::Policy& pi,
                                   std::uint64_t seed, std::uint64_t iteration, int n,
                                   const std::string& behavior_tag = "");

/// Exact value of stream j under pi by enumerating every trajectory,
/// sign convention included (sigma_0 = -1, sigma_j = 1 for j >= 1).
/// Errors if the path count |S|^(T+2) |A|^(T+1) exceeds 1e7.
double oracle_value(const CmdpSpec& spec, const policy::Policy& pi, int j);

/// Exact gradient of stream j: sum over trajectories of
/// p(tau) * grad log p(tau) * discounted return, sign applied.
Eigen::VectorXd oracle_gradient(const CmdpSpec& spec, const policy::Policy& pi, int j);

/// Sum of path probabilities (should be 1): enumeration self-check.
double oracle_probability_mass(const CmdpSpec& spec, const policy::Policy& pi);

/// Line-delimited episode records (one JSON object per line).
void write_episodes(std::ostream& out, const std::vector<Episode>& episodes);
std::vector<Episode> read_episodes(std::istream& in);

}  // namespace rsgf::mdp
