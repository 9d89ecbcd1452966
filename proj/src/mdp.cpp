#include "rsgf/mdp.hpp"

#include <cassert>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace rsgf::mdp {

namespace {

void check_finite(const Eigen::VectorXd& v, const char* what, int step) {
  for (int i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw std::runtime_error(std::string("rollout: non-finite ") + what + " at step " +
                               std::to_string(step));
    }
  }
}

struct EnumerationContext {
  const CmdpSpec& spec;
  const policy::Policy& pi;
  int j = 0;
  bool with_gradient = false;
  double value = 0.0;
  double mass = 0.0;
  Eigen::VectorXd gradient = {};
};

// Depth-first over (s_0, a_0, ..., a_T, s_{T+1}); prob and score accumulate
// along the path, ret holds the discounted stream-j return.
void enumerate_paths(EnumerationContext& ctx, int t, int state_index, double prob, double ret,
                     Eigen::VectorXd& score) {
  const auto& tab = *ctx.spec.tabular;
  if (t == ctx.spec.horizon + 1) {
    ctx.mass += prob;
    ctx.value += prob * ret;
    if (ctx.with_gradient) ctx.gradient += prob * ret * score;
    return;
  }
  const Eigen::VectorXd& s = tab.states[static_cast<std::size_t>(state_index)];
  for (std::size_t ai = 0; ai < tab.actions.size(); ++ai) {
    const Eigen::VectorXd& a = tab.actions[ai];
    const double pa = std::exp(ctx.pi.log_prob(a, s));
    if (pa <= 0.0) continue;
    Eigen::VectorXd grad;
    if (ctx.with_gradient) {
      grad = ctx.pi.grad_log_prob(a, s);
      score += grad;
    }
    for (int sn = 0; sn < static_cast<int>(tab.states.size()); ++sn) {
      const double pt = tab.transition_probs[ai](state_index, sn);
      if (pt <= 0.0) continue;
      const double r = ctx.spec.rewards[static_cast<std::size_t>(ctx.j)](
          s, a, tab.states[static_cast<std::size_t>(sn)]);
      enumerate_paths(ctx, t + 1, sn, prob * pa * pt,
                      ret + std::pow(ctx.spec.gamma, t) * r, score);
    }
    if (ctx.with_gradient) score -= grad;
  }
}

void run_enumeration(EnumerationContext& ctx) {
  if (!ctx.spec.tabular) throw std::invalid_argument("oracle: spec is not tabular");
  const auto& tab = *ctx.spec.tabular;
  const double paths = std::pow(static_cast<double>(tab.states.size()), ctx.spec.horizon + 2) *
                       std::pow(static_cast<double>(tab.actions.size()), ctx.spec.horizon + 1);
  if (paths > 1e7) {
    throw std::invalid_argument("oracle: enumeration budget exceeded; use a smaller horizon");
  }
  ctx.gradient = Eigen::VectorXd::Zero(ctx.pi.param_dim());
  Eigen::VectorXd score = Eigen::VectorXd::Zero(ctx.pi.param_dim());
  for (int s0 = 0; s0 < static_cast<int>(tab.states.size()); ++s0) {
    const double p0 = tab.initial_probs[s0];
    if (p0 <= 0.0) continue;
    enumerate_paths(ctx, 0, s0, p0, 0.0, score);
  }
}

}  // namespace

Episode rollout(const CmdpSpec& spec, const policy::Policy& pi, Rng& rng,
                const std::string& behavior_tag) {
  const int T = spec.horizon;
  const int q1 = spec.num_reward_streams();
  Episode ep;
  ep.states = Eigen::MatrixXd::Zero(T + 2, spec.state_dim);
  ep.actions = Eigen::MatrixXd::Zero(T + 1, spec.action_dim);
  ep.rewards = Eigen::MatrixXd::Zero(q1, T + 1);
  ep.behavior_tag = behavior_tag;
  ep.behavior_params = pi.params();
  ep.realized_steps = 0;
  ep.behavior_log_prob = 0.0;

  Eigen::VectorXd s = spec.initial_state(rng);
  check_finite(s, "state", 0);
  ep.states.row(0) = s;
  bool done = false;
  for (int t = 0; t <= T; ++t) {
    if (done) {
      ep.states.row(t + 1) = s;
      continue;
    }
    const Eigen::VectorXd a = pi.sample(s, rng);
    check_finite(a, "action", t);
    const Eigen::VectorXd s_next = spec.transition(s, a, rng);
    check_finite(s_next, "state", t + 1);
    ep.actions.row(t) = a;
    ep.states.row(t + 1) = s_next;
    for (int j = 0; j < q1; ++j) {
      ep.rewards(j, t) = spec.rewards[static_cast<std::size_t>(j)](s, a, s_next);
      // Declared reward bounds hold on every sampled transition (debug builds).
      assert(j >= static_cast<int>(spec.reward_bounds.size()) ||
             std::abs(ep.rewards(j, t)) <= spec.reward_bounds[static_cast<std::size_t>(j)]);
    }
    ep.behavior_log_prob += pi.log_prob(a, s);
    ep.realized_steps = t + 1;
    if (spec.terminate && spec.terminate(s_next)) done = true;
    s = s_next;
  }
  return ep;
}

std::vector<Episode> rollout_batch(const CmdpSpec& spec, const policy::Policy& pi,
                                   std::uint64_t seed, std::uint64_t iteration, int n,
                                   const std::string& behavior_tag) {
  std::vector<Episode> episodes(static_cast<std::size_t>(n));
  std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      Rng rng = Rng::stream(seed, iteration, static_cast<std::uint64_t>(i));
      episodes[static_cast<std::size_t>(i)] = rollout(spec, pi, rng, behavior_tag);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return episodes;
}

double oracle_value(const CmdpSpec& spec, const policy::Policy& pi, int j) {
  EnumerationContext ctx{spec, pi, j, /*with_gradient=*/false};
  run_enumeration(ctx);
  const double sigma = j == 0 ? -1.0 : 1.0;
  return sigma * ctx.value;
}

Eigen::VectorXd oracle_gradient(const CmdpSpec& spec, const policy::Policy& pi, int j) {
  EnumerationContext ctx{spec, pi, j, /*with_gradient=*/true};
  run_enumeration(ctx);
  const double sigma = j == 0 ? -1.0 : 1.0;
  return sigma * ctx.gradient;
}

double oracle_probability_mass(const CmdpSpec& spec, const policy::Policy& pi) {
  EnumerationContext ctx{spec, pi, 0, /*with_gradient=*/false};
  run_enumeration(ctx);
  return ctx.mass;
}

void write_episodes(std::ostream& out, const std::vector<Episode>& episodes) {
  for (const Episode& ep : episodes) {
    nlohmann::json j;
    j["v"] = 1;
    j["tag"] = ep.behavior_tag;
    j["realized"] = ep.realized_steps;
    j["blp"] = ep.behavior_log_prob;
    j["params"] = std::vector<double>(ep.behavior_params.data(),
                                      ep.behavior_params.data() + ep.behavior_params.size());
    const auto mat = [](const Eigen::MatrixXd& m) {
      nlohmann::json rows = nlohmann::json::array();
      for (int r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
      }
      return rows;
    };
    j["states"] = mat(ep.states);
    j["actions"] = mat(ep.actions);
    j["rewards"] = mat(ep.rewards);
    out << j.dump() << "\n";
  }
}

std::vector<Episode> read_episodes(std::istream& in) {
  std::vector<Episode> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    Episode ep;
    ep.behavior_tag = j.at("tag").get<std::string>();
    ep.realized_steps = j.at("realized").get<int>();
    ep.behavior_log_prob = j.at("blp").get<double>();
    const auto& params = j.at("params");
    ep.behavior_params = Eigen::VectorXd(params.size());
    for (int i = 0; i < ep.behavior_params.size(); ++i) ep.behavior_params[i] = params[i];
    const auto mat = [](const nlohmann::json& rows) {
      Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c].get<double>();
      return m;
    };
    ep.states = mat(j.at("states"));
    ep.actions = mat(j.at("actions"));
    ep.rewards = mat(j.at("rewards"));
    out.push_back(std::move(ep));
  }
  return out;
}

}  // namespace rsgf::mdp
