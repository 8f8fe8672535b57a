#pragma once
// Run configuration, exploration driver, run artifacts and multi-seed
// comparison.
//
// Cost units: every power/time figure is a per-operation table value
// multiplied by an operation count ("mW-units", "ns-units"), not a physical
// power or a wall-clock time.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "axdse/agent.hpp"
#include "axdse/env.hpp"
#include "axdse/error.hpp"
#include "axdse/kernels.hpp"
#include "axdse/operators.hpp"
#include "axdse/plots.hpp"
#include "axdse/reward.hpp"

namespace axdse {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct BenchmarkConfig {
  std::string name = "matmul";
  int n = 10;          // matmul
  int samples = 100;   // fir
  int taps = 16;       // fir
  int length = 8;      // toy
  int acc_groups = 1;  // matmul, fir
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  BenchmarkConfig benchmark;
  std::uint64_t input_seed = 1;
  fs::path catalog_path;
  int adder_width = 8;
  int multiplier_width = 8;
  std::vector<std::string> adder_names;
  std::vector<std::string> multiplier_names;
  ModelFamily family = ModelFamily::Auto;
  std::map<std::string, fs::path> tables;  // operator name -> truth table
  AgentParams agent;
  double max_reward = 10.0;
  std::optional<double> max_cumulative;  // default: max_reward
  std::optional<double> acc_th, p_th, t_th;
  EpisodeOptions episode;
  std::uint64_t state_capacity = kDefaultStateCapacity;
  bool hashed_states = false;
  bool cache = true;
  bool paper_literal_mae = false;
  std::vector<std::uint64_t> seeds{1};
  fs::path output_dir = "runs";
  std::size_t plot_window = 100;
  unsigned jobs = 0;  // parallel seeds; 0 = hardware concurrency

  void validate() const {
    if (schema_version != kSchemaVersion)
      throw Error(Errc::ConfigError, "schema_version: expected " + std::to_string(kSchemaVersion) +
                                         ", got " + std::to_string(schema_version));
    if (seeds.empty()) throw Error(Errc::ConfigError, "seeds: list must not be empty");
    if (catalog_path.empty()) throw Error(Errc::ConfigError, "catalog: path is required");
    if (!fs::exists(catalog_path))
      throw Error(Errc::ConfigError, "catalog: file not found '" + catalog_path.string() + "'");
    for (const auto& [name, path] : tables)
      if (!fs::exists(path))
        throw Error(Errc::ConfigError,
                    "operators.tables." + name + ": file not found '" + path.string() + "'");
    const std::set<std::string> names{"matmul", "fir", "toy"};
    if (!names.count(benchmark.name))
      throw Error(Errc::ConfigError, "benchmark.name: unknown benchmark '" + benchmark.name + "'");
    if (plot_window == 0) throw Error(Errc::ConfigError, "plot_window: must be > 0");
    agent.validate();
    if (!(max_reward > 0.0)) throw Error(Errc::ConfigError, "reward.max_reward: must be > 0");
    for (const auto& [field, v] : {std::pair{"acc_th", acc_th}, {"p_th", p_th}, {"t_th", t_th}})
      if (v && !(*v >= 0.0)) throw Error(Errc::ConfigError, std::string("reward.") + field + ": must be >= 0");
  }
};

inline std::string default_catalog_path() {
#ifdef AXDSE_DATA_DIR
  return std::string(AXDSE_DATA_DIR) + "/catalog.json";
#else
  return "data/catalog.json";
#endif
}

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error(Errc::ConfigError, where + key + ": unknown field");
  }
}

template <typename T>
T field(const nlohmann::json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::ConfigError, where + key + ": wrong type");
  }
}

inline std::optional<double> optional_number(const nlohmann::json& obj, const char* key,
                                             const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  const auto& v = obj.at(key);
  if (v.is_string() && (v == "inf" || v == "none")) return std::numeric_limits<double>::infinity();
  if (!v.is_number()) throw Error(Errc::ConfigError, where + key + ": expected a number");
  return v.get<double>();
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

inline nlohmann::json number_or_inf(double v) {
  return std::isinf(v) ? nlohmann::json(v > 0 ? "inf" : "-inf") : nlohmann::json(v);
}

inline double number_from(const nlohmann::json& v) {
  if (v.is_string()) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    if (v == "-inf") return -std::numeric_limits<double>::infinity();
  }
  return v.get<double>();
}

}  // namespace detail

/// Parses a config document. Relative paths resolve against `base_dir`.
inline RunConfig parse_config(const nlohmann::json& doc, const fs::path& base_dir = {}) {
  using detail::field;
  if (!doc.is_object()) throw Error(Errc::ConfigError, "config must be an object");
  detail::reject_unknown(doc, "",
                         {"schema_version", "benchmark", "input_seed", "catalog", "width_class",
                          "operators", "agent", "reward", "exploration", "seeds", "output_dir",
                          "paper_literal_mae", "plot_window", "jobs"});
  RunConfig c;
  if (!doc.contains("schema_version"))
    throw Error(Errc::ConfigError, "schema_version: field is required");
  c.schema_version = field<int>(doc, "schema_version", "", kSchemaVersion);
  c.input_seed = field<std::uint64_t>(doc, "input_seed", "", 1);
  c.catalog_path = doc.contains("catalog")
                       ? detail::resolve(base_dir, field<std::string>(doc, "catalog", "", ""))
                       : fs::path(default_catalog_path());
  c.paper_literal_mae = field<bool>(doc, "paper_literal_mae", "", false);
  c.plot_window = field<std::size_t>(doc, "plot_window", "", 100);
  c.jobs = field<unsigned>(doc, "jobs", "", 0);
  if (doc.contains("output_dir"))
    c.output_dir = detail::resolve(base_dir, field<std::string>(doc, "output_dir", "", "runs"));
  if (doc.contains("seeds")) c.seeds = field<std::vector<std::uint64_t>>(doc, "seeds", "", {});

  if (doc.contains("benchmark")) {
    const auto& b = doc.at("benchmark");
    if (b.is_string()) {
      c.benchmark.name = b.get<std::string>();
    } else {
      const std::string w = "benchmark.";
      detail::reject_unknown(b, w, {"name", "n", "samples", "taps", "length", "acc_groups"});
      c.benchmark.name = field<std::string>(b, "name", w, "matmul");
      c.benchmark.n = field<int>(b, "n", w, 10);
      c.benchmark.samples = field<int>(b, "samples", w, 100);
      c.benchmark.taps = field<int>(b, "taps", w, 16);
      c.benchmark.length = field<int>(b, "length", w, 8);
      c.benchmark.acc_groups = field<int>(b, "acc_groups", w, 1);
    }
  }

  if (doc.contains("width_class")) {
    const auto wc = field<std::string>(doc, "width_class", "", "8");
    if (wc == "8") c.adder_width = 8, c.multiplier_width = 8;
    else if (wc == "wide") c.adder_width = 16, c.multiplier_width = 32;
    else throw Error(Errc::ConfigError, "width_class: expected \"8\" or \"wide\", got '" + wc + "'");
  }
  if (doc.contains("operators")) {
    const auto& o = doc.at("operators");
    const std::string w = "operators.";
    detail::reject_unknown(o, w, {"adder_width", "multiplier_width", "adders", "multipliers",
                                  "family", "tables"});
    c.adder_width = field<int>(o, "adder_width", w, c.adder_width);
    c.multiplier_width = field<int>(o, "multiplier_width", w, c.multiplier_width);
    c.adder_names = field<std::vector<std::string>>(o, "adders", w, {});
    c.multiplier_names = field<std::vector<std::string>>(o, "multipliers", w, {});
    c.family = parse_family(field<std::string>(o, "family", w, "auto"));
    if (o.contains("tables")) {
      for (const auto& [name, p] : o.at("tables").items()) {
        if (!p.is_string()) throw Error(Errc::ConfigError, w + "tables." + name + ": expected a path");
        c.tables[name] = detail::resolve(base_dir, p.get<std::string>());
      }
    }
  }
  if (doc.contains("agent")) {
    const auto& a = doc.at("agent");
    const std::string w = "agent.";
    detail::reject_unknown(a, w, {"alpha", "gamma", "epsilon", "epsilon_decay", "epsilon_floor"});
    c.agent.alpha = field<double>(a, "alpha", w, c.agent.alpha);
    c.agent.gamma = field<double>(a, "gamma", w, c.agent.gamma);
    c.agent.epsilon = field<double>(a, "epsilon", w, c.agent.epsilon);
    c.agent.epsilon_decay = field<double>(a, "epsilon_decay", w, c.agent.epsilon_decay);
    c.agent.epsilon_floor = field<double>(a, "epsilon_floor", w, c.agent.epsilon_floor);
  }
  if (doc.contains("reward")) {
    const auto& r = doc.at("reward");
    const std::string w = "reward.";
    detail::reject_unknown(r, w, {"max_reward", "max_cumulative", "acc_th", "p_th", "t_th"});
    c.max_reward = field<double>(r, "max_reward", w, c.max_reward);
    c.max_cumulative = detail::optional_number(r, "max_cumulative", w);
    c.acc_th = detail::optional_number(r, "acc_th", w);
    c.p_th = detail::optional_number(r, "p_th", w);
    c.t_th = detail::optional_number(r, "t_th", w);
  }
  if (doc.contains("exploration")) {
    const auto& e = doc.at("exploration");
    const std::string w = "exploration.";
    detail::reject_unknown(e, w, {"step_cap", "episode_length", "reset_on_violation",
                                  "continue_after_terminal", "state_capacity", "hashed_states",
                                  "cache"});
    c.episode.step_cap = field<std::uint64_t>(e, "step_cap", w, c.episode.step_cap);
    c.episode.episode_length = field<std::uint64_t>(e, "episode_length", w, 0);
    c.episode.reset_on_violation = field<bool>(e, "reset_on_violation", w, false);
    c.episode.continue_after_terminal = field<bool>(e, "continue_after_terminal", w, false);
    c.state_capacity = field<std::uint64_t>(e, "state_capacity", w, c.state_capacity);
    c.hashed_states = field<bool>(e, "hashed_states", w, false);
    c.cache = field<bool>(e, "cache", w, true);
  }
  return c;
}

inline RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
  try {
    return parse_config(doc, path.parent_path());
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
}

inline ojson config_to_json(const RunConfig& c) {
  ojson bench{{"name", c.benchmark.name}};
  if (c.benchmark.name == "matmul") bench["n"] = c.benchmark.n, bench["acc_groups"] = c.benchmark.acc_groups;
  if (c.benchmark.name == "fir")
    bench["samples"] = c.benchmark.samples, bench["taps"] = c.benchmark.taps,
    bench["acc_groups"] = c.benchmark.acc_groups;
  if (c.benchmark.name == "toy") bench["length"] = c.benchmark.length;
  ojson tables = ojson::object();
  for (const auto& [n, p] : c.tables) tables[n] = p.string();
  auto opt = [](const std::optional<double>& v) {
    return v ? ojson(detail::number_or_inf(*v)) : ojson(nullptr);
  };
  std::string family = c.family == ModelFamily::Auto       ? "auto"
                       : c.family == ModelFamily::Truncate ? "truncate"
                                                           : "lower-part-or";
  return ojson{
      {"schema_version", c.schema_version},
      {"benchmark", bench},
      {"input_seed", c.input_seed},
      {"catalog", c.catalog_path.string()},
      {"operators",
       {{"adder_width", c.adder_width},
        {"multiplier_width", c.multiplier_width},
        {"adders", c.adder_names},
        {"multipliers", c.multiplier_names},
        {"family", family},
        {"tables", tables}}},
      {"agent",
       {{"alpha", c.agent.alpha},
        {"gamma", c.agent.gamma},
        {"epsilon", c.agent.epsilon},
        {"epsilon_decay", c.agent.epsilon_decay},
        {"epsilon_floor", c.agent.epsilon_floor}}},
      {"reward",
       {{"max_reward", c.max_reward},
        {"max_cumulative", opt(c.max_cumulative)},
        {"acc_th", opt(c.acc_th)},
        {"p_th", opt(c.p_th)},
        {"t_th", opt(c.t_th)}}},
      {"exploration",
       {{"step_cap", c.episode.step_cap},
        {"episode_length", c.episode.episode_length},
        {"reset_on_violation", c.episode.reset_on_violation},
        {"continue_after_terminal", c.episode.continue_after_terminal},
        {"state_capacity", c.state_capacity},
        {"hashed_states", c.hashed_states},
        {"cache", c.cache}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir.string()},
      {"paper_literal_mae", c.paper_literal_mae},
      {"plot_window", c.plot_window},
      {"jobs", c.jobs}};
}

inline BenchmarkProgram make_program(const RunConfig& c) {
  const auto& b = c.benchmark;
  if (b.name == "matmul") return BenchmarkProgram::matmul(b.n, c.adder_width, c.input_seed, b.acc_groups);
  if (b.name == "fir")
    return BenchmarkProgram::fir(b.samples, b.taps, c.adder_width, c.input_seed, b.acc_groups);
  if (b.name == "toy") return BenchmarkProgram::toy(b.length, c.adder_width, c.input_seed);
  throw Error(Errc::ConfigError, "benchmark.name: unknown benchmark '" + b.name + "'");
}

/// Everything shared by the seeds of one configuration.
struct Pipeline {
  RunConfig config;
  Environment env;
  Thresholds thresholds;
  RewardConfig reward;
};

inline std::vector<FunctionalModel> build_models(const std::vector<OperatorSpec>& specs,
                                                 const RunConfig& c) {
  std::vector<FunctionalModel> out;
  for (const auto& s : specs) {
    if (auto it = c.tables.find(s.name); it != c.tables.end())
      out.push_back(FunctionalModel::table_driven(s, it->second));
    else
      out.push_back(calibrate(s, c.family));
  }
  return out;
}

inline RewardConfig reward_config(const RunConfig& c, const Thresholds& t) {
  RewardConfig r;
  r.max_reward = c.max_reward;
  r.max_cumulative = c.max_cumulative.value_or(c.max_reward);
  r.acc_th = c.acc_th.value_or(t.acc_th);
  r.p_th = c.p_th.value_or(t.p_th);
  r.t_th = c.t_th.value_or(t.t_th);
  r.validate();
  return r;
}

inline Pipeline build_pipeline(const RunConfig& c) {
  c.validate();
  auto program = make_program(c);
  auto catalog = load_catalog_file(c.catalog_path)
                     .for_widths(c.adder_width, c.multiplier_width)
                     .subset(c.adder_names, c.multiplier_names);
  auto adders = build_models(catalog.adders, c);
  auto muls = build_models(catalog.multipliers, c);
  EnvOptions opts{c.paper_literal_mae ? MaeMode::Signed : MaeMode::Absolute, c.cache};
  auto env = Environment::with_baseline(std::move(program), std::move(catalog), std::move(adders),
                                        std::move(muls), opts);
  auto th = make_thresholds(env.base());
  auto reward = reward_config(c, th);
  return Pipeline{c, std::move(env), th, reward};
}

// ---------------------------------------------------------------------------
// Summaries

struct MetricSummary {
  double min = 0.0;
  double solution = 0.0;
  double max = 0.0;
  bool operator==(const MetricSummary&) const = default;
};

struct RunSummary {
  std::string benchmark;  // human label, also the grouping key for comparisons
  nlohmann::json size_params;
  std::uint64_t seed = 0;
  MetricSummary d_power, d_time, d_acc;
  std::string adder, multiplier, selection;
  StopCause stop = StopCause::StepCap;
  std::uint64_t steps = 0;
  double cumulative = 0.0;
  double acc_th = 0.0, p_th = 0.0, t_th = 0.0;

  bool solution_within_accuracy() const { return d_acc.solution <= acc_th; }
};

/// min / last / max over the trace. An empty trace summarizes the reset
/// state, whose observations are all zero.
inline void summarize_metrics(const std::vector<TraceRecord>& trace, RunSummary& s) {
  if (trace.empty()) {
    s.d_power = s.d_time = s.d_acc = {};
    return;
  }
  auto pick = [&](auto member) {
    MetricSummary m{INFINITY, trace.back().*member, -INFINITY};
    for (const auto& r : trace) m.min = std::min(m.min, r.*member), m.max = std::max(m.max, r.*member);
    return m;
  };
  s.d_power = pick(&TraceRecord::d_power);
  s.d_time = pick(&TraceRecord::d_time);
  s.d_acc = pick(&TraceRecord::d_acc);
}

inline RunSummary summarize(const Trajectory& t, const Environment& env, const RewardConfig& r,
                            std::uint64_t seed) {
  RunSummary s;
  s.benchmark = env.program().label();
  s.size_params = env.program().size_params();
  s.seed = seed;
  summarize_metrics(t.steps, s);
  s.adder = env.catalog().adders[t.final_state.adder_idx].name;
  s.multiplier = env.catalog().multipliers[t.final_state.mul_idx].name;
  s.selection = t.final_state.selection.to_string();
  s.stop = t.stop;
  s.steps = t.steps.size();
  s.cumulative = t.cumulative;
  s.acc_th = r.acc_th;
  s.p_th = r.p_th;
  s.t_th = r.t_th;
  return s;
}

inline ojson summary_to_json(const RunSummary& s) {
  auto metric = [](const MetricSummary& m) {
    return ojson{{"min", m.min}, {"solution", m.solution}, {"max", m.max}};
  };
  return ojson{{"benchmark", s.benchmark},
               {"size_params", s.size_params},
               {"seed", s.seed},
               {"d_power", metric(s.d_power)},
               {"d_time", metric(s.d_time)},
               {"d_acc", metric(s.d_acc)},
               {"configuration",
                {{"adder", s.adder}, {"multiplier", s.multiplier}, {"selection", s.selection}}},
               {"stop_cause", to_string(s.stop)},
               {"steps", s.steps},
               {"cumulative_reward", s.cumulative},
               {"thresholds",
                {{"acc_th", detail::number_or_inf(s.acc_th)},
                 {"p_th", detail::number_or_inf(s.p_th)},
                 {"t_th", detail::number_or_inf(s.t_th)}}},
               {"units", {{"d_power", "mW-units"}, {"d_time", "ns-units"}}}};
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
  RunSummary s;
  try {
    auto metric = [&](const char* k) {
      const auto& m = j.at(k);
      return MetricSummary{m.at("min").get<double>(), m.at("solution").get<double>(),
                           m.at("max").get<double>()};
    };
    s.benchmark = j.at("benchmark").get<std::string>();
    s.size_params = j.at("size_params");
    s.seed = j.at("seed").get<std::uint64_t>();
    s.d_power = metric("d_power");
    s.d_time = metric("d_time");
    s.d_acc = metric("d_acc");
    const auto& conf = j.at("configuration");
    s.adder = conf.at("adder").get<std::string>();
    s.multiplier = conf.at("multiplier").get<std::string>();
    s.selection = conf.at("selection").get<std::string>();
    s.stop = parse_stop_cause(j.at("stop_cause").get<std::string>());
    s.steps = j.at("steps").get<std::uint64_t>();
    s.cumulative = j.at("cumulative_reward").get<double>();
    const auto& th = j.at("thresholds");
    s.acc_th = detail::number_from(th.at("acc_th"));
    s.p_th = detail::number_from(th.at("p_th"));
    s.t_th = detail::number_from(th.at("t_th"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidField, std::string("summary: ") + e.what());
  }
  return s;
}

inline RunSummary load_summary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open summary '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidField, path.string() + ": " + e.what());
  }
  return summary_from_json(j);
}

inline std::vector<TraceRecord> read_trace(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open trace '" + path.string() + "'");
  std::vector<TraceRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(trace_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::InvalidField, path.string() + ": " + e.what());
    }
  }
  return out;
}

inline void write_trace(const fs::path& path, const std::vector<TraceRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  for (const auto& r : trace) {
    ojson j = r;
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Exploration

struct RunResult {
  RunSummary summary;
  fs::path dir;
  Trajectory trajectory;
};

inline std::string run_tag(const RunConfig& c) {
  const auto& b = c.benchmark;
  std::string tag = b.name;
  if (b.name == "matmul") tag += "-" + std::to_string(b.n);
  if (b.name == "fir") tag += "-" + std::to_string(b.samples) + "-t" + std::to_string(b.taps);
  if (b.name == "toy") tag += "-" + std::to_string(b.length);
  return tag;
}

inline fs::path run_directory(const RunConfig& c, std::uint64_t seed) {
  return c.output_dir / run_tag(c) / ("seed-" + std::to_string(seed));
}

inline ojson baseline_to_json(const Pipeline& p) {
  const auto& b = p.env.base();
  ojson models = ojson::array();
  for (const auto* list : {&p.env.adder_models(), &p.env.mul_models()}) {
    for (const auto& m : *list) {
      ojson row{{"kind", to_string(m.spec().kind)},
                {"width", m.spec().bit_width},
                {"name", m.spec().name},
                {"target_mred", m.spec().mred},
                {"model", m.describe()}};
      if (m.calibration()) row["achieved_mred"] = m.calibration()->achieved_mred;
      models.push_back(row);
    }
  }
  return ojson{{"benchmark", p.env.program().label()},
               {"power_precise", b.power_precise},
               {"time_precise", b.time_precise},
               {"avg_output", b.avg_output},
               {"add_ops", b.add_ops},
               {"mul_ops", b.mul_ops},
               {"thresholds",
                {{"acc_th", detail::number_or_inf(p.reward.acc_th)},
                 {"p_th", detail::number_or_inf(p.reward.p_th)},
                 {"t_th", detail::number_or_inf(p.reward.t_th)}}},
               {"derived_thresholds",
                {{"acc_th", p.thresholds.acc_th},
                 {"p_th", p.thresholds.p_th},
                 {"t_th", p.thresholds.t_th}}},
               {"max_reward", p.reward.max_reward},
               {"max_cumulative", detail::number_or_inf(p.reward.max_cumulative)},
               {"operators", models}};
}

inline void write_json(const fs::path& path, const ojson& j) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

/// One seed: explores, then writes the run directory (config snapshot,
/// baseline record, run log, trace, Q-table, summary, plots).
inline RunResult explore_seed(const Pipeline& p, std::uint64_t seed) {
  const RunConfig& c = p.config;
  Environment env = p.env;
  env.reset(seed);
  const StateEncoder encoder(env.sizes(), c.state_capacity, c.hashed_states);
  QTable q(env.actions().size(), c.agent);
  Rng rng(seed);
  Trajectory t = run_episode(env, q, p.reward, c.episode, rng, encoder);

  RunResult res;
  res.summary = summarize(t, env, p.reward, seed);
  res.dir = run_directory(c, seed);
  fs::create_directories(res.dir);

  ojson snapshot = config_to_json(c);
  snapshot["seeds"] = {seed};
  write_json(res.dir / "config.json", snapshot);
  write_json(res.dir / "baseline.json", baseline_to_json(p));
  write_outputs_csv(res.dir / "reference_outputs.csv", env.base().outputs);
  write_trace(res.dir / "trace.jsonl", t.steps);
  q.save(res.dir / "qtable.txt");
  write_json(res.dir / "summary.json", summary_to_json(res.summary));

  {
    std::ofstream log(res.dir / "run.log");
    log << std::setprecision(17);
    log << "benchmark " << env.program().label() << " seed " << seed << "\n";
    log << "baseline power_precise " << env.base().power_precise << " time_precise "
        << env.base().time_precise << " avg_output " << env.base().avg_output << "\n";
    log << "thresholds p_th " << p.reward.p_th << " t_th " << p.reward.t_th << " acc_th "
        << p.reward.acc_th << "\n";
    log << "reward R " << p.reward.max_reward << " max_cumulative " << p.reward.max_cumulative << "\n";
    log << "agent alpha " << c.agent.alpha << " gamma " << c.agent.gamma << " epsilon "
        << c.agent.epsilon << " decay " << c.agent.epsilon_decay << " floor "
        << c.agent.epsilon_floor << "\n";
    if (p.thresholds.degenerate) log << "warning " << p.thresholds.warning << "\n";
    log << "stop " << to_string(t.stop) << " steps " << t.steps.size() << " cumulative "
        << t.cumulative << "\n";
  }
  if (!t.steps.empty()) emit_plots(t.steps, res.dir / "plots", c.plot_window);
  res.trajectory = std::move(t);
  return res;
}

/// Runs every seed of the configuration; seeds are independent and run
/// concurrently. Results come back in seed-list order.
inline std::vector<RunResult> explore(const RunConfig& c, std::ostream* log = nullptr) {
  const Pipeline p = build_pipeline(c);
  if (log && p.thresholds.degenerate) *log << "warning: " << p.thresholds.warning << "\n";
  unsigned jobs = c.jobs ? c.jobs : std::max(1u, std::thread::hardware_concurrency());
  std::vector<RunResult> results(c.seeds.size());
  for (std::size_t start = 0; start < c.seeds.size(); start += jobs) {
    std::vector<std::future<RunResult>> batch;
    const std::size_t end = std::min(c.seeds.size(), start + jobs);
    for (std::size_t i = start; i < end; ++i)
      batch.push_back(std::async(std::launch::async, [&p, seed = c.seeds[i]] {
        return explore_seed(p, seed);
      }));
    for (std::size_t i = start; i < end; ++i) results[i] = batch[i - start].get();
  }
  return results;
}

// ---------------------------------------------------------------------------
// Multi-seed comparison

struct MetricStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

struct Comparison {
  std::string benchmark;
  std::size_t runs = 0;
  MetricStats d_power, d_time, d_acc, steps;
  std::string majority_stop;
  std::vector<std::uint64_t> flagged_seeds;  // stop cause differs from majority
};

/// Linear-interpolation quantile of a non-empty sample.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Comparison compare_runs(const std::vector<RunSummary>& summaries) {
  if (summaries.empty()) throw Error(Errc::InvalidField, "compare needs at least one summary");
  Comparison c;
  c.benchmark = summaries.front().benchmark;
  c.runs = summaries.size();
  for (const auto& s : summaries)
    if (s.benchmark != c.benchmark)
      throw Error(Errc::MixedBenchmarks, "'" + s.benchmark + "' vs '" + c.benchmark + "'");
  auto stats = [&](auto get) {
    std::vector<double> v;
    for (const auto& s : summaries) v.push_back(get(s));
    return MetricStats{quantile(v, 0.5), quantile(v, 0.25), quantile(v, 0.75)};
  };
  c.d_power = stats([](const RunSummary& s) { return s.d_power.solution; });
  c.d_time = stats([](const RunSummary& s) { return s.d_time.solution; });
  c.d_acc = stats([](const RunSummary& s) { return s.d_acc.solution; });
  c.steps = stats([](const RunSummary& s) { return static_cast<double>(s.steps); });

  std::map<std::string, std::size_t> counts;
  for (const auto& s : summaries) counts[to_string(s.stop)]++;
  // Majority; ties go to the cause seen first.
  std::size_t best = 0;
  for (const auto& s : summaries) {
    const auto n = counts[to_string(s.stop)];
    if (n > best) best = n, c.majority_stop = to_string(s.stop);
  }
  for (const auto& s : summaries)
    if (to_string(s.stop) != c.majority_stop) c.flagged_seeds.push_back(s.seed);
  return c;
}

inline ojson comparison_to_json(const Comparison& c) {
  auto m = [](const MetricStats& s) {
    return ojson{{"median", s.median}, {"q1", s.q1}, {"q3", s.q3}, {"iqr", s.iqr()}};
  };
  return ojson{{"benchmark", c.benchmark},
               {"runs", c.runs},
               {"d_power", m(c.d_power)},
               {"d_time", m(c.d_time)},
               {"d_acc", m(c.d_acc)},
               {"steps", m(c.steps)},
               {"majority_stop_cause", c.majority_stop},
               {"flagged_seeds", c.flagged_seeds}};
}

inline std::string format_comparison(const Comparison& c) {
  std::ostringstream s;
  s << c.benchmark << " (" << c.runs << " runs, majority stop: " << c.majority_stop << ")\n";
  s << std::left << std::setw(10) << "metric" << std::right << std::setw(14) << "median"
    << std::setw(14) << "q1" << std::setw(14) << "q3" << std::setw(14) << "iqr" << "\n";
  auto row = [&](const char* name, const MetricStats& m) {
    s << std::left << std::setw(10) << name << std::right << std::fixed << std::setprecision(4)
      << std::setw(14) << m.median << std::setw(14) << m.q1 << std::setw(14) << m.q3
      << std::setw(14) << m.iqr() << "\n";
  };
  row("d_power", c.d_power);
  row("d_time", c.d_time);
  row("d_acc", c.d_acc);
  row("steps", c.steps);
  if (!c.flagged_seeds.empty()) {
    s << "seeds with a different stop cause:";
    for (auto seed : c.flagged_seeds) s << ' ' << seed;
    s << "\n";
  }
  return s.str();
}

/// Table III-style text rendering of one summary.
inline std::string format_summary(const RunSummary& s) {
  std::ostringstream o;
  o << s.benchmark << ", seed " << s.seed << ": stop " << to_string(s.stop) << " after " << s.steps
    << " steps\n";
  o << std::left << std::setw(26) << "" << std::right << std::setw(14) << "min" << std::setw(14)
    << "solution" << std::setw(14) << "max" << "\n";
  auto row = [&](const char* name, const MetricSummary& m) {
    o << std::left << std::setw(26) << name << std::right << std::fixed << std::setprecision(4)
      << std::setw(14) << m.min << std::setw(14) << m.solution << std::setw(14) << m.max << "\n";
  };
  row("d_power (mW-units)", s.d_power);
  row("d_time (ns-units)", s.d_time);
  row("accuracy degradation", s.d_acc);
  o << "adder " << s.adder << ", multiplier " << s.multiplier << ", selection " << s.selection
    << "\n";
  return o.str();
}

}  // namespace axdse
