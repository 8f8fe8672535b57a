#pragma once
// Tabular Q-learning with epsilon-greedy exploration.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "axdse/env.hpp"
#include "axdse/error.hpp"
#include "axdse/reward.hpp"

namespace axdse {

struct AgentParams {
  double alpha = 0.1;
  double gamma = 0.95;
  double epsilon = 0.3;
  double epsilon_decay = 0.999;  // multiplicative, per step
  double epsilon_floor = 0.05;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::ConfigError, "alpha must be in [0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(Errc::ConfigError, "gamma must be in [0, 1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      throw Error(Errc::ConfigError, "epsilon must be in [0, 1]");
    if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
      throw Error(Errc::ConfigError, "epsilon_decay must be in (0, 1]");
    if (!(epsilon_floor >= 0.0 && epsilon_floor <= 1.0))
      throw Error(Errc::ConfigError, "epsilon_floor must be in [0, 1]");
  }
};

/// mt19937_64 with portable draws, so traces do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

/// Sparse state -> action-value table. Entries never written read as 0.
class QTable {
 public:
  QTable(std::size_t n_actions, AgentParams params) : n_actions_(n_actions), params_(params) {
    params_.validate();
    epsilon_ = params_.epsilon;
  }

  std::size_t n_actions() const { return n_actions_; }
  const AgentParams& params() const { return params_; }
  double epsilon() const { return epsilon_; }
  void set_epsilon(double e) { epsilon_ = e; }
  void decay_epsilon() { epsilon_ = std::max(params_.epsilon_floor, epsilon_ * params_.epsilon_decay); }

  double value(StateKey s, std::size_t a) const {
    auto it = values_.find(s);
    return it == values_.end() ? 0.0 : it->second.at(a);
  }

  void set(StateKey s, std::size_t a, double v) { row(s).at(a) = v; }

  double max_value(StateKey s) const {
    auto it = values_.find(s);
    if (it == values_.end()) return 0.0;
    return *std::max_element(it->second.begin(), it->second.end());
  }

  /// argmax_a Q(s, a), lowest index on ties.
  std::size_t greedy(StateKey s) const {
    if (n_actions_ == 0) throw Error(Errc::NoValidAction, "empty action space");
    auto it = values_.find(s);
    if (it == values_.end()) return 0;
    const auto& r = it->second;
    return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }

  std::size_t visited_states() const { return values_.size(); }

  std::vector<StateKey> keys() const {
    std::vector<StateKey> k;
    k.reserve(values_.size());
    for (const auto& [key, _] : values_) k.push_back(key);
    std::sort(k.begin(), k.end());
    return k;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [_, r] : values_)
      for (double v : r) m = std::max(m, std::abs(v));
    return m;
  }

  /// Text snapshot: a header line, then "state action value" per written
  /// entry, sorted by state.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
    out << "# qtable actions " << n_actions_ << " epsilon " << fmt(epsilon_) << "\n";
    for (StateKey k : keys()) {
      const auto& r = values_.at(k);
      for (std::size_t a = 0; a < r.size(); ++a)
        if (r[a] != 0.0) out << k << ' ' << a << ' ' << fmt(r[a]) << '\n';
    }
  }

  static QTable load(const std::filesystem::path& path, AgentParams params) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
    std::string hash, tag, actions_tag, eps_tag;
    std::size_t n = 0;
    double eps = params.epsilon;
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    if (!(hs >> hash >> tag >> actions_tag >> n >> eps_tag >> eps) || tag != "qtable")
      throw Error(Errc::InvalidField, path.string() + ": not a Q-table snapshot");
    QTable q(n, params);
    q.epsilon_ = eps;
    StateKey k;
    std::size_t a;
    double v;
    while (in >> k >> a >> v) {
      if (a >= n) throw Error(Errc::InvalidField, path.string() + ": action index out of range");
      q.set(k, a, v);
    }
    if (!in.eof()) throw Error(Errc::InvalidField, path.string() + ": malformed entry");
    return q;
  }

 private:
  static std::string fmt(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  }

  std::vector<double>& row(StateKey s) {
    auto [it, inserted] = values_.try_emplace(s);
    if (inserted) it->second.assign(n_actions_, 0.0);
    return it->second;
  }

  std::size_t n_actions_;
  AgentParams params_;
  double epsilon_ = 0.0;
  std::unordered_map<StateKey, std::vector<double>> values_;
};

/// Uniform random action with probability epsilon, greedy otherwise. Always
/// consumes one uniform draw, plus one index draw when exploring.
inline std::size_t select_action(const QTable& q, StateKey s, Rng& rng) {
  if (q.n_actions() == 0) throw Error(Errc::NoValidAction, "empty action space");
  if (rng.uniform01() < q.epsilon()) return rng.index(q.n_actions());
  return q.greedy(s);
}

/// Q(s,a) += alpha * (reward + gamma * max_b Q(s',b) - Q(s,a)); the bootstrap
/// term is dropped for terminal transitions.
inline void update(QTable& q, StateKey s, std::size_t a, double reward, StateKey s_next,
                   bool terminal = false) {
  const auto& p = q.params();
  const double old = q.value(s, a);
  const double target = reward + (terminal ? 0.0 : p.gamma * q.max_value(s_next));
  q.set(s, a, old + p.alpha * (target - old));
}

enum class StopCause { Terminal, CumulativeCap, StepCap };

inline std::string to_string(StopCause c) {
  switch (c) {
    case StopCause::Terminal: return "terminal";
    case StopCause::CumulativeCap: return "cumulative_cap";
    case StopCause::StepCap: return "step_cap";
  }
  return "?";
}

inline StopCause parse_stop_cause(const std::string& s) {
  if (s == "terminal") return StopCause::Terminal;
  if (s == "cumulative_cap") return StopCause::CumulativeCap;
  if (s == "step_cap") return StopCause::StepCap;
  throw Error(Errc::InvalidField, "unknown stop cause '" + s + "'");
}

struct EpisodeOptions {
  std::uint64_t step_cap = 10'000;
  /// Restart from the reset state every this many steps (0: one long episode).
  std::uint64_t episode_length = 0;
  /// Restart after an accuracy violation instead of continuing.
  bool reset_on_violation = false;
  /// Restart after a terminal reward instead of stopping.
  bool continue_after_terminal = false;
};

struct Trajectory {
  std::vector<TraceRecord> steps;
  StopCause stop = StopCause::StepCap;
  EnvState initial_state;
  EnvState final_state;
  double cumulative = 0.0;
};

/// Runs select -> step -> reward -> update until the terminal reward, the
/// cumulative-reward target or the step cap. The cumulative reward restarts
/// from 0 with every episode restart.
inline Trajectory run_episode(Environment& env, QTable& q, const RewardConfig& cfg,
                              const EpisodeOptions& opts, Rng& rng, const StateEncoder& encoder) {
  const EnvSizes sizes = env.sizes();
  const ActionSpace space = env.actions();
  if (q.n_actions() != space.size())
    throw Error(Errc::ConfigError, "Q-table action count does not match the environment");

  Trajectory t;
  EnvState state = env.reset(env.seed());
  t.initial_state = state;
  double r_cum = 0.0;
  std::uint64_t in_episode = 0;
  const auto& add_specs = env.catalog().adders;
  const auto& mul_specs = env.catalog().multipliers;
  [[maybe_unused]] const double q_bound =
      q.params().gamma < 1.0 ? cfg.max_reward / (1.0 - q.params().gamma) + cfg.max_reward
                             : std::numeric_limits<double>::infinity();

  for (std::uint64_t step = 1; step <= opts.step_cap; ++step) {
    const StateKey s = encoder.encode(state);
    const double eps = q.epsilon();
    const std::size_t a = select_action(q, s, rng);
    const Action action = space.decode(a);
    auto [next, obs] = env.step(state, action);
    const RewardOutcome out = evaluate(next, cfg, r_cum, sizes);
    r_cum = out.cumulative;
    update(q, s, a, out.reward, encoder.encode(next), out.terminate);
    assert(std::abs(q.value(s, a)) <= q_bound);

    TraceRecord rec;
    rec.step = step;
    rec.action_index = a;
    rec.action = action.to_string();
    rec.adder_idx = next.adder_idx;
    rec.mul_idx = next.mul_idx;
    rec.adder = add_specs[next.adder_idx].name;
    rec.multiplier = mul_specs[next.mul_idx].name;
    rec.selection = next.selection.to_string();
    rec.d_acc = obs.d_acc;
    rec.d_power = obs.d_power;
    rec.d_time = obs.d_time;
    rec.reward = out.reward;
    rec.cumulative = r_cum;
    rec.epsilon = eps;
    t.steps.push_back(std::move(rec));

    q.decay_epsilon();
    state = next;
    ++in_episode;

    if (out.terminate && !opts.continue_after_terminal) {
      t.stop = StopCause::Terminal;
      t.final_state = state;
      t.cumulative = r_cum;
      return t;
    }
    if (r_cum >= cfg.max_cumulative) {
      t.stop = StopCause::CumulativeCap;
      t.final_state = state;
      t.cumulative = r_cum;
      return t;
    }
    const bool restart = out.terminate ||
                         (opts.reset_on_violation && out.reward == -cfg.max_reward) ||
                         (opts.episode_length > 0 && in_episode >= opts.episode_length);
    if (restart && step < opts.step_cap) {
      state = env.reset(env.seed());
      r_cum = 0.0;
      in_episode = 0;
    }
  }
  t.stop = StopCause::StepCap;
  t.final_state = t.steps.empty() ? t.initial_state : state;
  t.cumulative = r_cum;
  return t;
}

}  // namespace axdse
