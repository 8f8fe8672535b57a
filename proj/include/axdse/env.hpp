#pragma once
// Exploration environment: configuration state, actions, observations.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "axdse/error.hpp"
#include "axdse/kernels.hpp"
#include "axdse/operators.hpp"

namespace axdse {

/// Accuracy degradation and power/time reductions versus the precise run.
struct Observation {
  double d_acc = 0.0;
  double d_power = 0.0;  // mW-units
  double d_time = 0.0;   // ns-units

  bool operator==(const Observation&) const = default;
};

/// Operator indices, variable selection and the observation of the most
/// recent execution of that configuration.
struct EnvState {
  std::size_t adder_idx = 0;
  std::size_t mul_idx = 0;
  Selection selection;
  Observation obs;

  bool same_configuration(const EnvState& o) const {
    return adder_idx == o.adder_idx && mul_idx == o.mul_idx && selection == o.selection;
  }
  bool operator==(const EnvState&) const = default;
};

struct EnvSizes {
  std::size_t n_add = 0;
  std::size_t n_mul = 0;
  std::size_t n_vars = 0;
};

struct Action {
  enum class Type { SetAdder, SetMultiplier, ToggleVariable };
  Type type = Type::SetAdder;
  std::size_t index = 0;

  static Action set_adder(std::size_t k) { return {Type::SetAdder, k}; }
  static Action set_multiplier(std::size_t k) { return {Type::SetMultiplier, k}; }
  static Action toggle(std::size_t i) { return {Type::ToggleVariable, i}; }

  std::string to_string() const {
    switch (type) {
      case Type::SetAdder: return "SetAdder(" + std::to_string(index) + ")";
      case Type::SetMultiplier: return "SetMultiplier(" + std::to_string(index) + ")";
      case Type::ToggleVariable: return "ToggleVariable(" + std::to_string(index) + ")";
    }
    return "?";
  }
  bool operator==(const Action&) const = default;
};

/// Flat action indexing: [0, n_add) set the adder, the next n_mul set the
/// multiplier, the last n_vars toggle a variable.
class ActionSpace {
 public:
  explicit ActionSpace(EnvSizes s) : s_(s) {}

  std::size_t size() const { return s_.n_add + s_.n_mul + s_.n_vars; }

  Action decode(std::size_t i) const {
    if (i < s_.n_add) return Action::set_adder(i);
    i -= s_.n_add;
    if (i < s_.n_mul) return Action::set_multiplier(i);
    i -= s_.n_mul;
    if (i < s_.n_vars) return Action::toggle(i);
    throw Error(Errc::InvalidAction, "action index out of range");
  }

  std::size_t encode(const Action& a) const {
    check(a);
    switch (a.type) {
      case Action::Type::SetAdder: return a.index;
      case Action::Type::SetMultiplier: return s_.n_add + a.index;
      case Action::Type::ToggleVariable: return s_.n_add + s_.n_mul + a.index;
    }
    return 0;
  }

  void check(const Action& a) const {
    const std::size_t limit = a.type == Action::Type::SetAdder        ? s_.n_add
                              : a.type == Action::Type::SetMultiplier ? s_.n_mul
                                                                      : s_.n_vars;
    if (a.index >= limit)
      throw Error(Errc::InvalidAction, a.to_string() + " outside [0, " + std::to_string(limit) + ")");
  }

 private:
  EnvSizes s_;
};

using StateKey = std::uint64_t;

inline constexpr std::uint64_t kDefaultStateCapacity = std::uint64_t{1} << 24;

/// Maps (adder_idx, mul_idx, selection) to a Q-table key; observations are
/// not part of the key. Keys are a bijection onto [0, state_count()) unless
/// the state space exceeds `capacity`, in which case encoding fails, or, with
/// `hashed` enabled, keys are folded into [0, capacity) and may collide.
class StateEncoder {
 public:
  StateEncoder(EnvSizes sizes, std::uint64_t capacity = kDefaultStateCapacity, bool hashed = false)
      : sizes_(sizes), capacity_(capacity), hashed_(hashed) {
    const long double count = static_cast<long double>(sizes.n_add) * sizes.n_mul *
                              std::ldexp(1.0L, static_cast<int>(sizes.n_vars));
    exact_ = count <= static_cast<long double>(capacity);
    if (!exact_ && !hashed_)
      throw Error(Errc::StateSpaceTooLarge,
                  std::to_string(sizes.n_add) + " adders x " + std::to_string(sizes.n_mul) +
                      " multipliers x 2^" + std::to_string(sizes.n_vars) +
                      " selections exceeds capacity " + std::to_string(capacity) +
                      "; reduce the variable count or enable hashed state keys");
    if (exact_) count_ = static_cast<std::uint64_t>(count);
  }

  bool bijective() const { return exact_; }
  std::uint64_t state_count() const { return exact_ ? count_ : capacity_; }

  StateKey encode(const EnvState& s) const {
    const std::uint64_t ops = s.adder_idx * sizes_.n_mul + s.mul_idx;
    if (exact_) return (ops << sizes_.n_vars) | s.selection.bits();
    std::uint64_t h = ops * 0x9E3779B97F4A7C15ull ^ (s.selection.bits() + 0x632BE59BD9B4E019ull);
    h ^= h >> 31;
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 29;
    return h % capacity_;
  }

  /// Inverse of encode (bijective mode only). The observation is left zero.
  EnvState decode(StateKey key) const {
    if (!exact_ || key >= count_) throw Error(Errc::InvalidField, "key cannot be decoded");
    EnvState s;
    s.selection = Selection(sizes_.n_vars, key & ((std::uint64_t{1} << sizes_.n_vars) - 1));
    const std::uint64_t ops = key >> sizes_.n_vars;
    s.adder_idx = ops / sizes_.n_mul;
    s.mul_idx = ops % sizes_.n_mul;
    return s;
  }

 private:
  EnvSizes sizes_;
  std::uint64_t capacity_;
  bool hashed_;
  bool exact_ = false;
  std::uint64_t count_ = 0;
};

struct EnvOptions {
  MaeMode mae_mode = MaeMode::Absolute;
  bool cache = true;
};

/// One benchmark bound to one operator catalog (single width class per kind).
/// Not thread-safe: the observation cache is mutated by step(). Independent
/// instances share nothing mutable.
class Environment {
 public:
  Environment(BenchmarkProgram program, OperatorCatalog catalog,
              std::vector<FunctionalModel> adder_models, std::vector<FunctionalModel> mul_models,
              Baseline base, EnvOptions options = {})
      : program_(std::move(program)),
        catalog_(std::move(catalog)),
        adders_(std::move(adder_models)),
        muls_(std::move(mul_models)),
        base_(std::move(base)),
        options_(options) {
    if (adders_.size() != catalog_.n_add() || muls_.size() != catalog_.n_mul())
      throw Error(Errc::ConfigError, "one model per catalog operator is required");
    if (adders_.empty() || muls_.empty())
      throw Error(Errc::ConfigError, "environment needs at least one adder and one multiplier");
    for (std::size_t i = 0; i < adders_.size(); ++i)
      if (!(adders_[i].spec() == catalog_.adders[i]))
        throw Error(Errc::ConfigError, "adder model " + std::to_string(i) + " does not match catalog");
    for (std::size_t i = 0; i < muls_.size(); ++i)
      if (!(muls_[i].spec() == catalog_.multipliers[i]))
        throw Error(Errc::ConfigError,
                    "multiplier model " + std::to_string(i) + " does not match catalog");
  }

  /// Convenience: computes the baseline from the catalog's precise operators.
  static Environment with_baseline(BenchmarkProgram program, OperatorCatalog catalog,
                                   std::vector<FunctionalModel> adder_models,
                                   std::vector<FunctionalModel> mul_models,
                                   EnvOptions options = {}) {
    Baseline b = baseline(program, catalog);
    return Environment(std::move(program), std::move(catalog), std::move(adder_models),
                       std::move(mul_models), std::move(b), options);
  }

  EnvSizes sizes() const { return {catalog_.n_add(), catalog_.n_mul(), program_.n_vars()}; }
  ActionSpace actions() const { return ActionSpace(sizes()); }
  const BenchmarkProgram& program() const { return program_; }
  const OperatorCatalog& catalog() const { return catalog_; }
  const Baseline& base() const { return base_; }
  const EnvOptions& options() const { return options_; }
  const std::vector<FunctionalModel>& adder_models() const { return adders_; }
  const std::vector<FunctionalModel>& mul_models() const { return muls_; }
  std::uint64_t seed() const { return seed_; }

  /// Precise operators, nothing selected, zero observation. The environment
  /// itself is deterministic; the seed is only recorded.
  EnvState reset(std::uint64_t seed = 0) {
    if (base_.empty()) throw Error(Errc::BaselineMissing, "baseline not computed for " + program_.label());
    seed_ = seed;
    EnvState s;
    s.selection = Selection(program_.n_vars());
    return s;
  }

  bool valid(const EnvState& s) const {
    return s.adder_idx < catalog_.n_add() && s.mul_idx < catalog_.n_mul() &&
           s.selection.size() == program_.n_vars();
  }

  /// Applies the action, executes the benchmark under the new configuration
  /// and returns the successor state together with its observation.
  std::pair<EnvState, Observation> step(const EnvState& state, const Action& action) const {
    if (!valid(state)) throw Error(Errc::InvalidAction, "state outside environment ranges");
    actions().check(action);
    EnvState next = state;
    switch (action.type) {
      case Action::Type::SetAdder: next.adder_idx = action.index; break;
      case Action::Type::SetMultiplier: next.mul_idx = action.index; break;
      case Action::Type::ToggleVariable: next.selection.toggle(action.index); break;
    }
    next.obs = observe(next.adder_idx, next.mul_idx, next.selection);
    return {next, next.obs};
  }

  /// Executes one configuration and derives its observation.
  Observation observe(std::size_t adder_idx, std::size_t mul_idx, const Selection& sel) const {
    if (base_.empty()) throw Error(Errc::BaselineMissing, "baseline not computed for " + program_.label());
    const auto key = std::make_tuple(adder_idx, mul_idx, sel.bits());
    if (options_.cache) {
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    const auto report = program_.execute(sel, adders_.at(adder_idx), muls_.at(mul_idx));
    const auto& add0 = catalog_.adders.front();
    const auto& addk = catalog_.adders[adder_idx];
    const auto& mul0 = catalog_.multipliers.front();
    const auto& mulk = catalog_.multipliers[mul_idx];
    const auto n_add = static_cast<double>(report.approx_add_ops);
    const auto n_mul = static_cast<double>(report.approx_mul_ops);

    Observation o;
    o.d_acc = mae(base_.outputs, report.outputs, options_.mae_mode);
    // Unselected operations cost the same as in the baseline, so only the
    // approximated ones contribute to the reduction.
    o.d_power = n_add * (add0.power_mw - addk.power_mw) + n_mul * (mul0.power_mw - mulk.power_mw);
    o.d_time = n_add * (add0.latency_ns - addk.latency_ns) + n_mul * (mul0.latency_ns - mulk.latency_ns);
    if (options_.cache) cache_.emplace(key, o);
    return o;
  }

  std::size_t cache_size() const { return cache_.size(); }

 private:
  BenchmarkProgram program_;
  OperatorCatalog catalog_;
  std::vector<FunctionalModel> adders_;
  std::vector<FunctionalModel> muls_;
  Baseline base_;
  EnvOptions options_;
  std::uint64_t seed_ = 0;
  mutable std::map<std::tuple<std::size_t, std::size_t, std::uint64_t>, Observation> cache_;
};

/// One exploration step as written to trace.jsonl.
struct TraceRecord {
  std::uint64_t step = 0;
  std::size_t action_index = 0;
  std::string action;
  std::string adder;
  std::string multiplier;
  std::string selection;
  std::size_t adder_idx = 0;
  std::size_t mul_idx = 0;
  double d_acc = 0.0;
  double d_power = 0.0;
  double d_time = 0.0;
  double reward = 0.0;
  double cumulative = 0.0;
  double epsilon = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

inline void to_json(nlohmann::ordered_json& j, const TraceRecord& r) {
  j = nlohmann::ordered_json{{"step", r.step},
                             {"action", r.action},
                             {"action_index", r.action_index},
                             {"adder", r.adder},
                             {"multiplier", r.multiplier},
                             {"adder_idx", r.adder_idx},
                             {"mul_idx", r.mul_idx},
                             {"selection", r.selection},
                             {"d_acc", r.d_acc},
                             {"d_power", r.d_power},
                             {"d_time", r.d_time},
                             {"reward", r.reward},
                             {"cumulative", r.cumulative},
                             {"epsilon", r.epsilon}};
}

inline TraceRecord trace_record_from_json(const nlohmann::json& j) {
  TraceRecord r;
  try {
    r.step = j.at("step").get<std::uint64_t>();
    r.action = j.at("action").get<std::string>();
    r.action_index = j.value("action_index", std::size_t{0});
    r.adder = j.at("adder").get<std::string>();
    r.multiplier = j.at("multiplier").get<std::string>();
    r.adder_idx = j.value("adder_idx", std::size_t{0});
    r.mul_idx = j.value("mul_idx", std::size_t{0});
    r.selection = j.at("selection").get<std::string>();
    r.d_acc = j.at("d_acc").get<double>();
    r.d_power = j.at("d_power").get<double>();
    r.d_time = j.at("d_time").get<double>();
    r.reward = j.at("reward").get<double>();
    r.cumulative = j.at("cumulative").get<double>();
    r.epsilon = j.value("epsilon", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidField, std::string("trace record: ") + e.what());
  }
  return r;
}

}  // namespace axdse
