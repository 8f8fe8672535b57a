#pragma once
// Instrumented benchmark kernels.
//
// Every addition and multiplication a kernel performs is tagged with the
// program variables it touches. An operation runs on the approximate model
// when any of its variables is selected, and on precise arithmetic otherwise.
//
// Data convention: all values live in the unsigned operand-width domain
// (8-bit by default). A product is rescaled back into that domain by a right
// shift that also leaves headroom for the accumulation that follows, so
// precise execution never overflows the accumulator.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "axdse/error.hpp"
#include "axdse/operators.hpp"

namespace axdse {

/// Bit-vector over a program's variables; bit i refers to variable i.
class Selection {
 public:
  static constexpr std::size_t kMaxVariables = 64;

  Selection() = default;
  explicit Selection(std::size_t n, std::uint64_t bits = 0) : n_(n), bits_(bits & mask(n)) {
    if (n > kMaxVariables)
      throw Error(Errc::InvalidField, "at most 64 variables are supported");
  }

  /// "101": character i is variable i.
  static Selection parse(const std::string& s) {
    Selection out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1') out.set(i, true);
      else if (s[i] != '0') throw Error(Errc::InvalidField, "bad selection string '" + s + "'");
    }
    return out;
  }

  static Selection all_ones(std::size_t n) { return Selection(n, mask(n)); }

  std::size_t size() const { return n_; }
  std::uint64_t bits() const { return bits_; }
  bool test(std::size_t i) const { return (bits_ >> i) & 1u; }
  bool none() const { return bits_ == 0; }
  bool all() const { return bits_ == mask(n_); }
  std::size_t count() const { return static_cast<std::size_t>(std::popcount(bits_)); }

  void set(std::size_t i, bool v) {
    if (i >= n_) throw Error(Errc::InvalidField, "variable index out of range");
    if (v) bits_ |= std::uint64_t{1} << i;
    else bits_ &= ~(std::uint64_t{1} << i);
  }
  void toggle(std::size_t i) { set(i, !test(i)); }

  std::string to_string() const {
    std::string s(n_, '0');
    for (std::size_t i = 0; i < n_; ++i)
      if (test(i)) s[i] = '1';
    return s;
  }

  bool operator==(const Selection&) const = default;

 private:
  static constexpr std::uint64_t mask(std::size_t n) {
    return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  }

  std::size_t n_ = 0;
  std::uint64_t bits_ = 0;
};

struct ExecutionReport {
  std::vector<double> outputs;
  std::vector<std::uint64_t> add_counts;  // per variable
  std::vector<std::uint64_t> mul_counts;  // per variable
  std::uint64_t approx_add_ops = 0;
  std::uint64_t approx_mul_ops = 0;
  std::uint64_t total_add_ops = 0;
  std::uint64_t total_mul_ops = 0;
};

enum class BenchmarkKind { MatMul, Fir, Toy };

inline std::string to_string(BenchmarkKind k) {
  switch (k) {
    case BenchmarkKind::MatMul: return "matmul";
    case BenchmarkKind::Fir: return "fir";
    case BenchmarkKind::Toy: return "toy";
  }
  return "?";
}

/// A kernel instance with fixed inputs and a fixed, ordered variable list.
///
///   matmul(n):      C = A * B over n x n matrices; variables A, B, acc.
///   fir(samples,T): valid-region T-tap low-pass filter over white noise;
///                   variables x, h, acc.
///   toy(length):    out[i] = x[i]*y[i] + z[i]; variables product, sum.
///
/// For matmul and fir, `acc_groups` > 1 splits the accumulator into that many
/// variables by contiguous output blocks.
class BenchmarkProgram {
 public:
  static BenchmarkProgram matmul(int n, int width = 8, std::uint64_t seed = 1,
                                 int acc_groups = 1) {
    if (n < 1) throw Error(Errc::ConfigError, "matmul: n must be >= 1");
    BenchmarkProgram p(BenchmarkKind::MatMul, width, seed);
    p.n_ = n;
    p.outputs_ = static_cast<std::size_t>(n) * n;
    p.set_groups(acc_groups, {"A", "B"});
    p.shift_ = width + std::bit_width(static_cast<unsigned>(n - 1));
    std::mt19937_64 rng(seed);
    p.a_ = p.draw(rng, p.outputs_);
    p.b_ = p.draw(rng, p.outputs_);
    return p;
  }

  static BenchmarkProgram fir(int samples, int taps = 16, int width = 8, std::uint64_t seed = 1,
                              int acc_groups = 1) {
    if (samples < 1) throw Error(Errc::ConfigError, "fir: samples must be >= 1");
    if (taps < 1) throw Error(Errc::ConfigError, "fir: taps must be >= 1");
    BenchmarkProgram p(BenchmarkKind::Fir, width, seed);
    p.n_ = samples;
    p.taps_ = taps;
    p.outputs_ = static_cast<std::size_t>(samples);
    p.set_groups(acc_groups, {"x", "h"});
    p.shift_ = width;
    std::mt19937_64 rng(seed);
    p.a_ = p.draw(rng, static_cast<std::size_t>(samples + taps - 1));
    p.b_ = lowpass_taps(taps, width);
    return p;
  }

  static BenchmarkProgram toy(int length = 8, int width = 8, std::uint64_t seed = 1) {
    if (length < 1) throw Error(Errc::ConfigError, "toy: length must be >= 1");
    BenchmarkProgram p(BenchmarkKind::Toy, width, seed);
    p.n_ = length;
    p.outputs_ = static_cast<std::size_t>(length);
    p.variables_ = {"product", "sum"};
    p.shift_ = width + 1;
    std::mt19937_64 rng(seed);
    p.a_ = p.draw(rng, p.outputs_);
    p.b_ = p.draw(rng, p.outputs_);
    p.c_ = p.draw(rng, p.outputs_);
    for (auto& v : p.c_) v >>= 1;
    return p;
  }

  /// Quantized Hamming-windowed sinc, cutoff 1/taps cycles per sample. With
  /// that cutoff every tap lies inside the main lobe, so all taps are
  /// non-negative; they are scaled so their sum is at most 2^width.
  static std::vector<std::uint64_t> lowpass_taps(int taps, int width) {
    const double fc = 1.0 / taps;
    const double mid = (taps - 1) / 2.0;
    std::vector<double> h(static_cast<std::size_t>(taps));
    for (int t = 0; t < taps; ++t) {
      const double x = t - mid;
      const double sinc =
          x == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * x) / (std::numbers::pi * x);
      const double window =
          taps == 1 ? 1.0 : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * t / (taps - 1));
      h[static_cast<std::size_t>(t)] = std::max(0.0, sinc * window);
    }
    const double sum = std::accumulate(h.begin(), h.end(), 0.0);
    const double scale = std::ldexp(1.0, width) / sum;
    const std::uint64_t top = (std::uint64_t{1} << width) - 1;
    std::vector<std::uint64_t> q;
    for (double v : h) q.push_back(std::min<std::uint64_t>(top, static_cast<std::uint64_t>(v * scale)));
    return q;
  }

  BenchmarkKind kind() const { return kind_; }
  std::string name() const { return to_string(kind_); }
  int operand_width() const { return width_; }
  std::uint64_t input_seed() const { return seed_; }
  const std::vector<std::string>& variables() const { return variables_; }
  std::size_t n_vars() const { return variables_.size(); }
  std::size_t n_outputs() const { return outputs_; }
  int product_shift() const { return shift_; }

  nlohmann::json size_params() const {
    switch (kind_) {
      case BenchmarkKind::MatMul: return {{"n", n_}, {"acc_groups", groups_}};
      case BenchmarkKind::Fir: return {{"samples", n_}, {"taps", taps_}, {"acc_groups", groups_}};
      case BenchmarkKind::Toy: return {{"length", n_}};
    }
    return {};
  }

  std::string label() const {
    switch (kind_) {
      case BenchmarkKind::MatMul: return "matmul " + std::to_string(n_) + "x" + std::to_string(n_);
      case BenchmarkKind::Fir:
        return "fir " + std::to_string(n_) + " samples, " + std::to_string(taps_) + " taps";
      case BenchmarkKind::Toy: return "toy " + std::to_string(n_);
    }
    return "?";
  }

  // Raw inputs, exposed for inspection and tests.
  const std::vector<std::uint64_t>& input_a() const { return a_; }
  const std::vector<std::uint64_t>& input_b() const { return b_; }
  const std::vector<std::uint64_t>& input_c() const { return c_; }
  int taps() const { return taps_; }
  int acc_groups() const { return groups_; }

  /// Replaces the generated inputs (same shapes required).
  void set_inputs(std::vector<std::uint64_t> a, std::vector<std::uint64_t> b,
                  std::vector<std::uint64_t> c = {}) {
    if (a.size() != a_.size() || b.size() != b_.size() || c.size() != c_.size())
      throw Error(Errc::LengthMismatch, "replacement inputs must keep their shapes");
    const std::uint64_t top = (std::uint64_t{1} << width_) - 1;
    for (const auto* v : {&a, &b, &c})
      for (auto x : *v)
        if (x > top) throw Error(Errc::OperandOutOfRange, "input exceeds operand width");
    a_ = std::move(a);
    b_ = std::move(b);
    c_ = std::move(c);
  }

  ExecutionReport execute(const Selection& selection, const FunctionalModel& adder,
                          const FunctionalModel& multiplier) const;

 private:
  BenchmarkProgram(BenchmarkKind kind, int width, std::uint64_t seed)
      : kind_(kind), width_(width), seed_(seed) {
    if (width < 2 || width > 16)
      throw Error(Errc::ConfigError, "operand width must be in [2, 16]");
  }

  std::vector<std::uint64_t> draw(std::mt19937_64& rng, std::size_t count) const {
    std::vector<std::uint64_t> v(count);
    for (auto& x : v) x = rng() >> (64 - width_);
    return v;
  }

  void set_groups(int groups, std::vector<std::string> head) {
    if (groups < 1 || static_cast<std::size_t>(groups) > outputs_)
      throw Error(Errc::ConfigError, "acc_groups must be in [1, number of outputs]");
    groups_ = groups;
    variables_ = std::move(head);
    if (groups == 1) {
      variables_.push_back("acc");
    } else {
      for (int g = 0; g < groups; ++g) variables_.push_back("acc[" + std::to_string(g) + "]");
    }
  }

  // Accumulator variable index for a given output.
  std::size_t acc_var(std::size_t output) const {
    return 2 + output * static_cast<std::size_t>(groups_) / outputs_;
  }

  BenchmarkKind kind_;
  int width_;
  std::uint64_t seed_;
  int n_ = 0;
  int taps_ = 0;
  int groups_ = 1;
  int shift_ = 0;
  std::size_t outputs_ = 0;
  std::vector<std::string> variables_;
  std::vector<std::uint64_t> a_, b_, c_;
};

namespace detail {

// Routes each operation to the approximate or the precise path and keeps the
// per-variable tallies.
class InstrumentedOps {
 public:
  InstrumentedOps(const Selection& sel, const FunctionalModel& adder,
                  const FunctionalModel& multiplier, int width, int shift, std::size_t n_vars,
                  ExecutionReport& report)
      : sel_(sel.bits()),
        adder_(adder),
        multiplier_(multiplier),
        value_mask_((std::uint64_t{1} << width) - 1),
        shift_(shift),
        report_(report) {
    report_.add_counts.assign(n_vars, 0);
    report_.mul_counts.assign(n_vars, 0);
  }

  std::uint64_t add(std::uint64_t vars, std::uint64_t a, std::uint64_t b) {
    tally(vars, report_.add_counts);
    ++report_.total_add_ops;
    if (vars & sel_) {
      ++report_.approx_add_ops;
      return adder_.add_unchecked(a, b) & value_mask_;
    }
    return (a + b) & value_mask_;
  }

  /// Product rescaled into the operand domain.
  std::uint64_t mul(std::uint64_t vars, std::uint64_t a, std::uint64_t b) {
    tally(vars, report_.mul_counts);
    ++report_.total_mul_ops;
    std::uint64_t p;
    if (vars & sel_) {
      ++report_.approx_mul_ops;
      p = multiplier_.mul_unchecked(a, b);
    } else {
      p = a * b;
    }
    return (p >> shift_) & value_mask_;
  }

 private:
  static void tally(std::uint64_t vars, std::vector<std::uint64_t>& counts) {
    while (vars) {
      counts[static_cast<std::size_t>(std::countr_zero(vars))]++;
      vars &= vars - 1;
    }
  }

  std::uint64_t sel_;
  const FunctionalModel& adder_;
  const FunctionalModel& multiplier_;
  std::uint64_t value_mask_;
  int shift_;
  ExecutionReport& report_;
};

constexpr std::uint64_t var_bit(std::size_t i) { return std::uint64_t{1} << i; }

}  // namespace detail

inline ExecutionReport BenchmarkProgram::execute(const Selection& selection,
                                                 const FunctionalModel& adder,
                                                 const FunctionalModel& multiplier) const {
  if (selection.size() != n_vars())
    throw Error(Errc::SelectionLengthMismatch,
                "selection has " + std::to_string(selection.size()) + " bits, " + label() +
                    " has " + std::to_string(n_vars()) + " variables");
  if (adder.spec().kind != OperatorKind::Adder || multiplier.spec().kind != OperatorKind::Multiplier)
    throw Error(Errc::KindMismatch, "run needs an adder model and a multiplier model");
  if (adder.width() != width_)
    throw Error(Errc::WidthMismatch, adder.spec().label() + " does not match " +
                                         std::to_string(width_) + "-bit operands");
  if (multiplier.width() < width_)
    throw Error(Errc::WidthMismatch, multiplier.spec().label() + " is narrower than " +
                                         std::to_string(width_) + "-bit operands");

  ExecutionReport r;
  r.outputs.resize(outputs_);
  detail::InstrumentedOps ops(selection, adder, multiplier, width_, shift_, n_vars(), r);
  using detail::var_bit;

  switch (kind_) {
    case BenchmarkKind::MatMul: {
      const auto n = static_cast<std::size_t>(n_);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t out = i * n + j;
          const std::uint64_t acc_bit = var_bit(acc_var(out));
          const std::uint64_t mul_vars = var_bit(0) | var_bit(1) | acc_bit;
          std::uint64_t acc = ops.mul(mul_vars, a_[i * n], b_[j]);
          for (std::size_t k = 1; k < n; ++k)
            acc = ops.add(acc_bit, acc, ops.mul(mul_vars, a_[i * n + k], b_[k * n + j]));
          r.outputs[out] = static_cast<double>(acc);
        }
      }
      break;
    }
    case BenchmarkKind::Fir: {
      const auto taps = static_cast<std::size_t>(taps_);
      for (std::size_t s = 0; s < outputs_; ++s) {
        const std::uint64_t acc_bit = var_bit(acc_var(s));
        const std::uint64_t mul_vars = var_bit(0) | var_bit(1) | acc_bit;
        const std::size_t newest = s + taps - 1;
        std::uint64_t acc = ops.mul(mul_vars, a_[newest], b_[0]);
        for (std::size_t t = 1; t < taps; ++t)
          acc = ops.add(acc_bit, acc, ops.mul(mul_vars, a_[newest - t], b_[t]));
        r.outputs[s] = static_cast<double>(acc);
      }
      break;
    }
    case BenchmarkKind::Toy: {
      for (std::size_t i = 0; i < outputs_; ++i)
        r.outputs[i] = static_cast<double>(ops.add(var_bit(1), ops.mul(var_bit(0), a_[i], b_[i]), c_[i]));
      break;
    }
  }
  return r;
}

inline ExecutionReport run(const BenchmarkProgram& program, const Selection& selection,
                           const FunctionalModel& adder, const FunctionalModel& multiplier) {
  return program.execute(selection, adder, multiplier);
}

enum class MaeMode {
  Absolute,
  /// Mean of the signed differences exact - approx. Negative values mean the
  /// approximation over-estimates on average.
  Signed,
};

inline double mae(std::span<const double> exact, std::span<const double> approx,
                  MaeMode mode = MaeMode::Absolute) {
  if (exact.size() != approx.size())
    throw Error(Errc::LengthMismatch, "mae: " + std::to_string(exact.size()) + " vs " +
                                          std::to_string(approx.size()) + " outputs");
  if (exact.empty()) throw Error(Errc::EmptyOutput, "mae: no outputs");
  double sum = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double d = exact[i] - approx[i];
    sum += mode == MaeMode::Absolute ? std::abs(d) : d;
  }
  return sum / static_cast<double>(exact.size());
}

/// Precise execution plus its summed per-operation cost.
struct Baseline {
  std::vector<double> outputs;
  double power_precise = 0.0;  // mW-units: per-op power x operation count
  double time_precise = 0.0;   // ns-units
  double avg_output = 0.0;
  std::uint64_t add_ops = 0;
  std::uint64_t mul_ops = 0;

  bool empty() const { return outputs.empty(); }
};

inline Baseline baseline(const BenchmarkProgram& program, const OperatorCatalog& catalog) {
  if (catalog.adders.empty() || catalog.multipliers.empty())
    throw Error(Errc::ConfigError, "baseline needs at least one adder and one multiplier");
  catalog.check_precise_heads();
  const auto& add0 = catalog.adders.front();
  const auto& mul0 = catalog.multipliers.front();
  auto report = program.execute(Selection(program.n_vars()), FunctionalModel::exact(add0),
                                FunctionalModel::exact(mul0));
  Baseline b;
  b.add_ops = report.total_add_ops;
  b.mul_ops = report.total_mul_ops;
  b.power_precise = static_cast<double>(b.add_ops) * add0.power_mw +
                    static_cast<double>(b.mul_ops) * mul0.power_mw;
  b.time_precise = static_cast<double>(b.add_ops) * add0.latency_ns +
                   static_cast<double>(b.mul_ops) * mul0.latency_ns;
  b.avg_output = std::accumulate(report.outputs.begin(), report.outputs.end(), 0.0) /
                 static_cast<double>(report.outputs.size());
  b.outputs = std::move(report.outputs);
  return b;
}

inline void write_outputs_csv(const std::filesystem::path& path, std::span<const double> outputs) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  out << "index,value\n";
  for (std::size_t i = 0; i < outputs.size(); ++i) out << i << ',' << outputs[i] << '\n';
}

}  // namespace axdse
