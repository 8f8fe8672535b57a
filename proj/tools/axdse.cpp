// axdse: command-line front end.
//
//   axdse run          explore one configuration over one or more seeds
//   axdse baseline     precise run, derived thresholds, reference outputs
//   axdse characterize calibrate catalog operators and report achieved MRED
//   axdse plot         re-render plots from a trace.jsonl
//   axdse compare      aggregate summary.json files across seeds
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "axdse/axdse.hpp"

namespace {

using namespace axdse;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags that mirror config fields; unset flags leave the config untouched.
struct Overrides {
  std::string config;
  std::optional<std::string> benchmark, width_class, family, catalog, output_dir;
  std::optional<int> n, samples, taps, length, acc_groups;
  std::optional<std::uint64_t> step_cap, input_seed;
  std::vector<std::uint64_t> seeds;
  std::optional<double> alpha, gamma, epsilon, max_reward, acc_th, p_th, t_th;
  std::optional<unsigned> jobs;
  bool paper_literal_mae = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "Config file (JSON)");
    app->add_option("--benchmark", benchmark, "matmul | fir | toy");
    app->add_option("--n", n, "Matrix dimension (matmul)");
    app->add_option("--samples", samples, "Output samples (fir)");
    app->add_option("--taps", taps, "Filter taps (fir)");
    app->add_option("--length", length, "Vector length (toy)");
    app->add_option("--acc-groups", acc_groups, "Accumulator variables (matmul, fir)");
    app->add_option("--input-seed", input_seed, "Seed of the benchmark inputs");
    app->add_option("--catalog", catalog, "Operator catalog file");
    app->add_option("--width-class", width_class, "8 | wide");
    app->add_option("--family", family, "auto | truncate | lower-part-or");
    app->add_option("--seeds", seeds, "Exploration seeds")->delimiter(',');
    app->add_option("--step-cap", step_cap, "Maximum exploration steps");
    app->add_option("--alpha", alpha, "Learning rate");
    app->add_option("--gamma", gamma, "Discount");
    app->add_option("--epsilon", epsilon, "Initial exploration rate");
    app->add_option("--max-reward", max_reward, "Terminal reward R");
    app->add_option("--acc-th", acc_th, "Accuracy threshold override");
    app->add_option("--p-th", p_th, "Power threshold override");
    app->add_option("--t-th", t_th, "Time threshold override");
    app->add_option("--output-dir", output_dir, "Run output directory");
    app->add_option("--jobs", jobs, "Seeds explored in parallel (0: all cores)");
    app->add_flag("--paper-literal-mae", paper_literal_mae,
                  "Use the signed mean difference as accuracy metric");
  }

  RunConfig resolve() const {
    try {
      RunConfig c = config.empty() ? parse_config(nlohmann::json{{"schema_version", kSchemaVersion}})
                                   : load_config(config);
      if (benchmark) c.benchmark.name = *benchmark;
      if (n) c.benchmark.n = *n;
      if (samples) c.benchmark.samples = *samples;
      if (taps) c.benchmark.taps = *taps;
      if (length) c.benchmark.length = *length;
      if (acc_groups) c.benchmark.acc_groups = *acc_groups;
      if (input_seed) c.input_seed = *input_seed;
      if (catalog) c.catalog_path = *catalog;
      if (width_class) {
        if (*width_class == "8") c.adder_width = 8, c.multiplier_width = 8;
        else if (*width_class == "wide") c.adder_width = 16, c.multiplier_width = 32;
        else throw Error(Errc::ConfigError, "--width-class: expected 8 or wide");
      }
      if (family) c.family = parse_family(*family);
      if (!seeds.empty()) c.seeds = seeds;
      if (step_cap) c.episode.step_cap = *step_cap;
      if (alpha) c.agent.alpha = *alpha;
      if (gamma) c.agent.gamma = *gamma;
      if (epsilon) c.agent.epsilon = *epsilon;
      if (max_reward) c.max_reward = *max_reward;
      if (acc_th) c.acc_th = *acc_th;
      if (p_th) c.p_th = *p_th;
      if (t_th) c.t_th = *t_th;
      if (output_dir) c.output_dir = *output_dir;
      if (jobs) c.jobs = *jobs;
      if (paper_literal_mae) c.paper_literal_mae = true;
      c.validate();
      return c;
    } catch (const Error& e) {
      throw ConfigFailure(e.what());
    }
  }
};

int cmd_run(const Overrides& o) {
  const RunConfig c = o.resolve();
  auto results = explore(c, &std::cerr);
  std::vector<RunSummary> summaries;
  for (const auto& r : results) {
    std::cout << format_summary(r.summary) << "  -> " << r.dir.string() << "\n\n";
    summaries.push_back(r.summary);
  }
  if (summaries.size() > 1) {
    const auto cmp = compare_runs(summaries);
    const auto path = c.output_dir / run_tag(c) / "compare.json";
    std::ofstream(path) << comparison_to_json(cmp).dump(2) << "\n";
    std::cout << format_comparison(cmp);
  }
  return 0;
}

int cmd_baseline(const Overrides& o, const std::string& csv) {
  const RunConfig c = o.resolve();
  const Pipeline p = build_pipeline(c);
  const auto& b = p.env.base();
  std::cout << std::setprecision(10);
  std::cout << p.env.program().label() << "\n"
            << "  additions        " << b.add_ops << "\n"
            << "  multiplications  " << b.mul_ops << "\n"
            << "  power_precise    " << b.power_precise << " mW-units\n"
            << "  time_precise     " << b.time_precise << " ns-units\n"
            << "  avg_output       " << b.avg_output << "\n"
            << "  p_th             " << p.reward.p_th << "\n"
            << "  t_th             " << p.reward.t_th << "\n"
            << "  acc_th           " << p.reward.acc_th << "\n";
  if (p.thresholds.degenerate) std::cerr << "warning: " << p.thresholds.warning << "\n";
  if (!csv.empty()) {
    write_outputs_csv(csv, b.outputs);
    std::cout << "reference outputs -> " << csv << "\n";
  }
  return 0;
}

int cmd_characterize(const std::string& catalog_path, const std::string& width_class,
                     const std::string& family, bool exhaustive) {
  OperatorCatalog cat;
  ModelFamily fam;
  try {
    cat = load_catalog_file(catalog_path);
    fam = parse_family(family);
  } catch (const Error& e) {
    throw ConfigFailure(e.what());
  }
  std::vector<OperatorSpec> specs;
  for (const auto* list : {&cat.adders, &cat.multipliers})
    for (const auto& s : *list)
      if (width_class == "all" || (width_class == "8" && s.bit_width == 8) ||
          (width_class == "wide" && s.bit_width > 8))
        specs.push_back(s);

  const SweepMode sweep = exhaustive ? SweepMode::Exhaustive : SweepMode::Auto;
  std::cout << std::left << std::setw(28) << "operator" << std::setw(20) << "model" << std::right
            << std::setw(12) << "target" << std::setw(12) << "achieved" << std::setw(12) << "mae"
            << "  sweep\n";
  int failures = 0;
  for (const auto& s : specs) {
    try {
      const auto m = calibrate(s, fam, sweep);
      const auto ch = characterize(m, sweep);
      std::cout << std::left << std::setw(28) << s.label() << std::setw(20) << m.describe()
                << std::right << std::fixed << std::setprecision(4) << std::setw(12) << s.mred
                << std::setw(12) << ch.mred << std::setw(12) << ch.mae << "  "
                << (ch.exhaustive ? "exhaustive" : "sampled") << "\n";
    } catch (const Error& e) {
      ++failures;
      std::cout << std::left << std::setw(28) << s.label() << e.what() << "\n";
    }
  }
  return failures ? kExitRuntime : 0;
}

int cmd_plot(const std::string& trace_path, const std::string& out, std::size_t window) {
  const auto trace = read_trace(trace_path);
  const auto files = emit_plots(trace, out, window);
  std::cout << files.series_csv.string() << "\n"
            << files.series_svg.string() << "\n"
            << files.reward_csv.string() << "\n"
            << files.reward_svg.string() << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& out) {
  std::vector<RunSummary> summaries;
  for (const auto& p : paths) summaries.push_back(load_summary(p));
  const auto cmp = compare_runs(summaries);
  std::cout << format_comparison(cmp);
  if (!out.empty()) std::ofstream(out) << comparison_to_json(cmp).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reinforcement-learning exploration of approximate adder/multiplier configurations"};
  app.require_subcommand(1);

  Overrides run_opts, base_opts;
  auto* run = app.add_subcommand("run", "Explore a configuration");
  run_opts.attach(run);

  std::string csv;
  auto* base = app.add_subcommand("baseline", "Precise run and derived thresholds");
  base_opts.attach(base);
  base->add_option("--csv", csv, "Write reference outputs as CSV");

  std::string cat_path = default_catalog_path(), width_class = "all", family = "auto";
  bool exhaustive = false;
  auto* chr = app.add_subcommand("characterize", "Calibrate and characterize catalog operators");
  chr->add_option("--catalog", cat_path, "Operator catalog file");
  chr->add_option("--width-class", width_class, "8 | wide | all");
  chr->add_option("--family", family, "auto | truncate | lower-part-or");
  chr->add_flag("--exhaustive", exhaustive, "Sweep all input pairs (widths <= 16)");

  std::string trace_path, plot_out = "plots";
  std::size_t window = 100;
  auto* plot = app.add_subcommand("plot", "Render plots from a trace");
  plot->add_option("--trace", trace_path, "trace.jsonl")->required();
  plot->add_option("--out", plot_out, "Output directory");
  plot->add_option("--window", window, "Reward averaging window (steps)");

  std::vector<std::string> summary_paths;
  std::string compare_out;
  auto* cmp = app.add_subcommand("compare", "Aggregate run summaries");
  cmp->add_option("summaries", summary_paths, "summary.json files")->required();
  cmp->add_option("--out", compare_out, "Write the comparison as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*base) return cmd_baseline(base_opts, csv);
    if (*chr) return cmd_characterize(cat_path, width_class, family, exhaustive);
    if (*plot) return cmd_plot(trace_path, plot_out, window);
    if (*cmp) return cmd_compare(summary_paths, compare_out);
  } catch (const ConfigFailure& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
