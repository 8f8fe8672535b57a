#pragma once
// Characterized approximate adders/multipliers and executable stand-in models.
//
// Real approximate-operator libraries ship bit-exact C models. Here each
// catalog row is paired with a parametric model (truncation or lower-part-OR)
// whose error knob is tuned until its measured MRED matches the row, or with a
// user-provided truth table.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "axdse/error.hpp"

namespace axdse {

enum class OperatorKind { Adder, Multiplier };

inline std::string to_string(OperatorKind k) {
  return k == OperatorKind::Adder ? "adder" : "multiplier";
}

struct OperatorSpec {
  OperatorKind kind = OperatorKind::Adder;
  int bit_width = 8;
  std::string name;
  double mred = 0.0;        // percent
  double power_mw = 0.0;    // per operation
  double latency_ns = 0.0;  // per operation

  bool precise() const { return mred == 0.0; }
  std::string label() const {
    return std::to_string(bit_width) + "-bit " + to_string(kind) + " " + name;
  }
  bool operator==(const OperatorSpec&) const = default;
};

/// Ordered operator lists, one per kind. Within a (kind, width) group entries
/// are sorted by non-decreasing MRED; the first entry of a group is precise.
struct OperatorCatalog {
  std::vector<OperatorSpec> adders;
  std::vector<OperatorSpec> multipliers;

  const std::vector<OperatorSpec>& list(OperatorKind k) const {
    return k == OperatorKind::Adder ? adders : multipliers;
  }

  std::size_t n_add() const { return adders.size(); }
  std::size_t n_mul() const { return multipliers.size(); }

  std::set<int> widths(OperatorKind k) const {
    std::set<int> out;
    for (const auto& s : list(k)) out.insert(s.bit_width);
    return out;
  }

  /// Keeps a single width class per kind. The result must be non-empty and
  /// start with a precise operator.
  OperatorCatalog for_widths(int adder_width, int mul_width) const {
    OperatorCatalog out;
    for (const auto& s : adders)
      if (s.bit_width == adder_width) out.adders.push_back(s);
    for (const auto& s : multipliers)
      if (s.bit_width == mul_width) out.multipliers.push_back(s);
    if (out.adders.empty())
      throw Error(Errc::ConfigError,
                  "catalog has no " + std::to_string(adder_width) + "-bit adders");
    if (out.multipliers.empty())
      throw Error(Errc::ConfigError,
                  "catalog has no " + std::to_string(mul_width) + "-bit multipliers");
    out.check_precise_heads();
    return out;
  }

  /// Keeps only the named operators, preserving catalog order. An empty name
  /// list keeps that kind unchanged.
  OperatorCatalog subset(const std::vector<std::string>& adder_names,
                         const std::vector<std::string>& mul_names) const {
    auto pick = [](const std::vector<OperatorSpec>& src, const std::vector<std::string>& names,
                   const char* what) {
      if (names.empty()) return src;
      std::vector<OperatorSpec> out;
      for (const auto& s : src)
        if (std::find(names.begin(), names.end(), s.name) != names.end()) out.push_back(s);
      for (const auto& n : names) {
        bool found = std::any_of(src.begin(), src.end(),
                                 [&](const OperatorSpec& s) { return s.name == n; });
        if (!found)
          throw Error(Errc::ConfigError, std::string("unknown ") + what + " '" + n + "'");
      }
      return out;
    };
    OperatorCatalog out{pick(adders, adder_names, "adder"),
                        pick(multipliers, mul_names, "multiplier")};
    out.check_precise_heads();
    return out;
  }

  void check_precise_heads() const {
    if (!adders.empty() && !adders.front().precise())
      throw Error(Errc::ConfigError, "first adder '" + adders.front().name + "' is not precise");
    if (!multipliers.empty() && !multipliers.front().precise())
      throw Error(Errc::ConfigError,
                  "first multiplier '" + multipliers.front().name + "' is not precise");
  }
};

namespace detail {

inline OperatorKind parse_kind(const std::string& s, const std::string& where) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "adder" || l == "add") return OperatorKind::Adder;
  if (l == "multiplier" || l == "mul") return OperatorKind::Multiplier;
  throw Error(Errc::InvalidField, where + ": unknown kind '" + s + "'");
}

}  // namespace detail

/// Parses a catalog document: {"operators": [{kind, width, name, mred,
/// power_mw, latency_ns}, ...]} (a bare array is accepted as well).
inline OperatorCatalog load_catalog(const nlohmann::json& doc) {
  const nlohmann::json* rows = &doc;
  if (doc.is_object()) {
    if (!doc.contains("operators"))
      throw Error(Errc::MissingField, "catalog document has no 'operators' list");
    rows = &doc.at("operators");
  }
  if (!rows->is_array()) throw Error(Errc::InvalidField, "'operators' must be a list");

  OperatorCatalog cat;
  std::set<std::tuple<OperatorKind, int, std::string>> seen;
  std::size_t index = 0;
  for (const auto& row : *rows) {
    std::string where = "operator #" + std::to_string(index++);
    if (row.is_object() && row.contains("name") && row["name"].is_string())
      where += " '" + row["name"].get<std::string>() + "'";
    for (const char* f : {"kind", "width", "name", "mred", "power_mw", "latency_ns"})
      if (!row.is_object() || !row.contains(f))
        throw Error(Errc::MissingField, where + ": missing '" + f + "'");

    OperatorSpec s;
    try {
      s.kind = detail::parse_kind(row.at("kind").get<std::string>(), where);
      s.bit_width = row.at("width").get<int>();
      s.name = row.at("name").get<std::string>();
      s.mred = row.at("mred").get<double>();
      s.power_mw = row.at("power_mw").get<double>();
      s.latency_ns = row.at("latency_ns").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::InvalidField, where + ": " + e.what());
    }
    if (s.bit_width < 1 || s.bit_width > 32)
      throw Error(Errc::InvalidField, where + ": width must be in [1, 32]");
    if (!(s.mred >= 0.0)) throw Error(Errc::InvalidField, where + ": mred must be >= 0");
    if (!(s.power_mw > 0.0)) throw Error(Errc::InvalidField, where + ": power_mw must be > 0");
    if (!(s.latency_ns > 0.0))
      throw Error(Errc::InvalidField, where + ": latency_ns must be > 0");

    if (!seen.emplace(s.kind, s.bit_width, s.name).second)
      throw Error(Errc::DuplicateOperator, where + " appears twice for " +
                                               std::to_string(s.bit_width) + "-bit " +
                                               to_string(s.kind));

    auto& list = s.kind == OperatorKind::Adder ? cat.adders : cat.multipliers;
    auto prev = std::find_if(list.rbegin(), list.rend(), [&](const OperatorSpec& o) {
      return o.bit_width == s.bit_width;
    });
    if (prev != list.rend() && prev->mred > s.mred)
      throw Error(Errc::UnsortedCatalog, where + " (mred " + std::to_string(s.mred) +
                                             ") follows '" + prev->name + "' (mred " +
                                             std::to_string(prev->mred) + ")");
    list.push_back(std::move(s));
  }
  return cat;
}

inline OperatorCatalog load_catalog_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open catalog '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidField, path.string() + ": " + e.what());
  }
  return load_catalog(doc);
}

inline nlohmann::json catalog_to_json(const OperatorCatalog& cat) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto* list : {&cat.adders, &cat.multipliers})
    for (const auto& s : *list)
      rows.push_back({{"kind", to_string(s.kind)},
                      {"width", s.bit_width},
                      {"name", s.name},
                      {"mred", s.mred},
                      {"power_mw", s.power_mw},
                      {"latency_ns", s.latency_ns}});
  return {{"operators", rows}};
}

// ---------------------------------------------------------------------------
// Functional models

enum class ModelMode { Exact, Truncate, LowerPartOr, TableDriven };

/// Parametric families offered to calibration. Auto searches both.
enum class ModelFamily { Truncate, LowerPartOr, Auto };

inline std::string to_string(ModelMode m) {
  switch (m) {
    case ModelMode::Exact: return "exact";
    case ModelMode::Truncate: return "truncate";
    case ModelMode::LowerPartOr: return "lower-part-or";
    case ModelMode::TableDriven: return "table";
  }
  return "?";
}

inline ModelFamily parse_family(const std::string& s) {
  if (s == "truncate") return ModelFamily::Truncate;
  if (s == "lower-part-or" || s == "loa") return ModelFamily::LowerPartOr;
  if (s == "auto") return ModelFamily::Auto;
  throw Error(Errc::ConfigError, "unknown model family '" + s + "'");
}

struct CalibrationRecord {
  ModelMode family = ModelMode::Exact;
  int k = 0;
  double target_mred = 0.0;
  double achieved_mred = 0.0;
};

namespace detail {

constexpr std::uint64_t low_mask(int bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

}  // namespace detail

/// Executable behavior of one catalog operator.
///
/// Adders take two w-bit unsigned operands and produce a (w+1)-bit result: the
/// carry-out is kept, as in the characterized 8/16-bit adders. Multipliers
/// take two w-bit operands and produce the full 2w-bit product.
///
/// - Exact: precise arithmetic.
/// - Truncate(k): adder drops the k low operand bits (result bits forced to 0,
///   no carry out of them); multiplier drops the partial-product bits in the k
///   low columns.
/// - LowerPartOr(k): adder ORs the k low bits and feeds the AND of the bits at
///   column k-1 as carry into the exact upper part; multiplier ORs, instead of
///   summing, the partial-product bits of the k low columns.
/// - TableDriven: lookup in a user truth table (w <= 8).
class FunctionalModel {
 public:
  static FunctionalModel exact(OperatorSpec spec) {
    return FunctionalModel(std::move(spec), ModelMode::Exact, 0, nullptr);
  }

  static FunctionalModel truncate(OperatorSpec spec, int k) {
    check_knob(spec, k);
    return FunctionalModel(std::move(spec), ModelMode::Truncate, k, nullptr);
  }

  static FunctionalModel lower_part_or(OperatorSpec spec, int k) {
    check_knob(spec, k);
    return FunctionalModel(std::move(spec), ModelMode::LowerPartOr, k, nullptr);
  }

  /// Truth table file: whitespace-separated unsigned integers, 4^w entries,
  /// entry (a << w) | b holds op(a, b). Lines starting with '#' are comments.
  static FunctionalModel table_driven(OperatorSpec spec, const std::filesystem::path& path) {
    const int w = spec.bit_width;
    if (w > 8)
      throw Error(Errc::TableLoadError,
                  path.string() + ": truth tables are limited to widths <= 8 (got " +
                      std::to_string(w) + ")");
    std::ifstream in(path);
    if (!in) throw Error(Errc::TableLoadError, "cannot open truth table '" + path.string() + "'");
    const std::size_t expected = std::size_t{1} << (2 * w);
    auto table = std::make_shared<std::vector<std::uint64_t>>();
    table->reserve(expected);
    std::string line;
    while (std::getline(in, line)) {
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      std::istringstream ls(line);
      std::uint64_t v;
      while (ls >> v) table->push_back(v);
      if (!ls.eof())
        throw Error(Errc::TableLoadError, path.string() + ": non-integer entry near index " +
                                              std::to_string(table->size()));
    }
    if (table->size() != expected)
      throw Error(Errc::TableLoadError, path.string() + ": expected " +
                                            std::to_string(expected) + " entries, found " +
                                            std::to_string(table->size()));
    FunctionalModel m(std::move(spec), ModelMode::TableDriven, 0, std::move(table));
    m.table_path_ = path.string();
    return m;
  }

  const OperatorSpec& spec() const { return spec_; }
  ModelMode mode() const { return mode_; }
  int k() const { return k_; }
  int width() const { return spec_.bit_width; }
  const std::optional<CalibrationRecord>& calibration() const { return calibration_; }
  void set_calibration(CalibrationRecord r) { calibration_ = r; }
  const std::string& table_path() const { return table_path_; }

  std::string describe() const {
    switch (mode_) {
      case ModelMode::Exact: return "exact";
      case ModelMode::TableDriven: return "table(" + table_path_ + ")";
      default: return to_string(mode_) + "(" + std::to_string(k_) + ")";
    }
  }

  /// Largest knob value with an effect: w for adders, 2w for multipliers.
  static int max_knob(const OperatorSpec& spec) {
    return spec.kind == OperatorKind::Adder ? spec.bit_width : 2 * spec.bit_width;
  }

  // Unchecked kernels; callers validate operand ranges.
  std::uint64_t add_unchecked(std::uint64_t a, std::uint64_t b) const {
    switch (mode_) {
      case ModelMode::Exact: return a + b;
      case ModelMode::Truncate: return ((a >> k_) + (b >> k_)) << k_;
      case ModelMode::LowerPartOr: {
        if (k_ == 0) return a + b;
        const std::uint64_t carry = (a >> (k_ - 1)) & (b >> (k_ - 1)) & 1u;
        return (((a >> k_) + (b >> k_) + carry) << k_) | ((a | b) & detail::low_mask(k_));
      }
      case ModelMode::TableDriven: return (*table_)[(a << spec_.bit_width) | b];
    }
    return 0;
  }

  std::uint64_t mul_unchecked(std::uint64_t a, std::uint64_t b) const {
    switch (mode_) {
      case ModelMode::Exact: return a * b;
      case ModelMode::Truncate:
      case ModelMode::LowerPartOr: {
        // Only rows i < k reach into the k low columns.
        const std::uint64_t mask = detail::low_mask(k_);
        const int rows = std::min(k_, spec_.bit_width);
        std::uint64_t dropped = 0, ored = 0;
        for (std::uint64_t bits = a & detail::low_mask(rows); bits; bits &= bits - 1) {
          const int i = std::countr_zero(bits);
          const std::uint64_t low = (b << i) & mask;
          dropped += low;
          ored |= low;
        }
        const std::uint64_t kept = a * b - dropped;
        return mode_ == ModelMode::Truncate ? kept : kept + ored;
      }
      case ModelMode::TableDriven: return (*table_)[(a << spec_.bit_width) | b];
    }
    return 0;
  }

 private:
  FunctionalModel(OperatorSpec spec, ModelMode mode, int k,
                  std::shared_ptr<const std::vector<std::uint64_t>> table)
      : spec_(std::move(spec)), mode_(mode), k_(k), table_(std::move(table)) {}

  static void check_knob(const OperatorSpec& spec, int k) {
    if (k < 0 || k > max_knob(spec))
      throw Error(Errc::InvalidField, spec.label() + ": knob k=" + std::to_string(k) +
                                          " outside [0, " + std::to_string(max_knob(spec)) +
                                          "]");
  }

  OperatorSpec spec_;
  ModelMode mode_;
  int k_;
  std::shared_ptr<const std::vector<std::uint64_t>> table_;
  std::string table_path_;
  std::optional<CalibrationRecord> calibration_;
};

namespace detail {

inline void check_operands(const FunctionalModel& m, OperatorKind want, std::uint64_t a,
                           std::uint64_t b) {
  if (m.spec().kind != want)
    throw Error(Errc::KindMismatch, m.spec().label() + " used as " + to_string(want));
  const std::uint64_t limit = low_mask(m.width());
  if (a > limit || b > limit)
    throw Error(Errc::OperandOutOfRange,
                "operands (" + std::to_string(a) + ", " + std::to_string(b) +
                    ") exceed " + std::to_string(m.width()) + "-bit range of " +
                    m.spec().label());
}

}  // namespace detail

inline std::uint64_t apply_add(const FunctionalModel& m, std::uint64_t a, std::uint64_t b) {
  detail::check_operands(m, OperatorKind::Adder, a, b);
  return m.add_unchecked(a, b);
}

inline std::uint64_t apply_mul(const FunctionalModel& m, std::uint64_t a, std::uint64_t b) {
  detail::check_operands(m, OperatorKind::Multiplier, a, b);
  return m.mul_unchecked(a, b);
}

/// Writes a model's full input/output behavior in the truth-table format read
/// by FunctionalModel::table_driven.
inline void save_truth_table(const FunctionalModel& m, const std::filesystem::path& path) {
  const int w = m.width();
  if (w > 8) throw Error(Errc::TableLoadError, "truth tables are limited to widths <= 8");
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  out << "# " << m.spec().label() << " " << m.describe() << "\n";
  const std::uint64_t n = std::uint64_t{1} << w;
  for (std::uint64_t a = 0; a < n; ++a) {
    for (std::uint64_t b = 0; b < n; ++b) {
      out << (m.spec().kind == OperatorKind::Adder ? m.add_unchecked(a, b)
                                                   : m.mul_unchecked(a, b));
      out << (b + 1 == n ? '\n' : ' ');
    }
  }
}

// ---------------------------------------------------------------------------
// Characterization

enum class SweepMode { Auto, Exhaustive, Sampled };

/// Seed for sampled characterization (widths > 8 in Auto mode).
inline constexpr std::uint64_t kCharacterizationSeed = 20230417;
inline constexpr std::uint64_t kCharacterizationSamples = 1'000'000;

struct Characterization {
  double mred = 0.0;  // percent; pairs whose exact result is 0 are excluded
  double mae = 0.0;
  std::uint64_t pairs = 0;
  bool exhaustive = false;
};

/// Measures MRED (in percent, like the catalog) and MAE against precise
/// arithmetic. Auto sweeps every input pair for widths <= 8 and otherwise draws
/// `samples` uniform pairs from mt19937_64 seeded with kCharacterizationSeed.
/// Exhaustive is allowed up to 16 bits.
inline Characterization characterize(const FunctionalModel& m, SweepMode mode = SweepMode::Auto,
                                     std::uint64_t samples = kCharacterizationSamples) {
  const int w = m.width();
  bool exhaustive = mode == SweepMode::Exhaustive || (mode == SweepMode::Auto && w <= 8);
  if (exhaustive && w > 16)
    throw Error(Errc::WidthTooLargeForExhaustive,
                m.spec().label() + ": exhaustive sweep requested for " + std::to_string(w) +
                    "-bit operator");
  const bool is_add = m.spec().kind == OperatorKind::Adder;

  double rel_sum = 0.0, abs_sum = 0.0;
  std::uint64_t rel_count = 0, count = 0;
  auto accumulate = [&](std::uint64_t a, std::uint64_t b) {
    const std::uint64_t exact = is_add ? a + b : a * b;
    const std::uint64_t approx = is_add ? m.add_unchecked(a, b) : m.mul_unchecked(a, b);
    const double err = exact > approx ? static_cast<double>(exact - approx)
                                      : static_cast<double>(approx - exact);
    abs_sum += err;
    ++count;
    if (exact != 0) {
      rel_sum += err / static_cast<double>(exact);
      ++rel_count;
    }
  };

  if (exhaustive) {
    const std::uint64_t n = std::uint64_t{1} << w;
    for (std::uint64_t a = 0; a < n; ++a)
      for (std::uint64_t b = 0; b < n; ++b) accumulate(a, b);
  } else {
    std::mt19937_64 rng(kCharacterizationSeed);
    const int drop = 64 - w;
    for (std::uint64_t i = 0; i < samples; ++i) {
      const std::uint64_t a = rng() >> drop;
      const std::uint64_t b = rng() >> drop;
      accumulate(a, b);
    }
  }
  Characterization c;
  c.mred = rel_count ? 100.0 * rel_sum / static_cast<double>(rel_count) : 0.0;
  c.mae = count ? abs_sum / static_cast<double>(count) : 0.0;
  c.pairs = count;
  c.exhaustive = exhaustive;
  return c;
}

/// Picks the family member whose measured MRED is closest to spec.mred.
///
/// Measured MRED is non-decreasing in k for both families, so the search
/// bisects for the first k that overshoots the target and compares it with the
/// smallest k reaching the best value below the target. Ties go to the smaller
/// k, then to Truncate. A zero target yields the exact model. Fails with
/// CalibrationOutOfRange when the best match is not within a factor of 4 of
/// the target.
inline FunctionalModel calibrate(const OperatorSpec& spec, ModelFamily family = ModelFamily::Auto,
                                 SweepMode sweep = SweepMode::Auto) {
  if (spec.mred == 0.0) {
    auto m = FunctionalModel::exact(spec);
    m.set_calibration({ModelMode::Exact, 0, 0.0, 0.0});
    return m;
  }
  std::vector<ModelMode> modes;
  if (family != ModelFamily::LowerPartOr) modes.push_back(ModelMode::Truncate);
  if (family != ModelFamily::Truncate) modes.push_back(ModelMode::LowerPartOr);

  const int kmax = FunctionalModel::max_knob(spec);
  std::optional<CalibrationRecord> best;
  auto consider = [&](const CalibrationRecord& c) {
    if (!best) {
      best = c;
      return;
    }
    const double d = std::abs(c.achieved_mred - spec.mred);
    const double bd = std::abs(best->achieved_mred - spec.mred);
    if (d < bd || (d == bd && c.k < best->k)) best = c;
  };

  for (ModelMode mode : modes) {
    std::map<int, double> measured;
    auto mred_at = [&](int k) {
      if (auto it = measured.find(k); it != measured.end()) return it->second;
      auto model = mode == ModelMode::Truncate ? FunctionalModel::truncate(spec, k)
                                               : FunctionalModel::lower_part_or(spec, k);
      return measured[k] = characterize(model, sweep).mred;
    };
    // Smallest k in [lo, hi] satisfying a predicate monotone in k, or hi + 1.
    auto first_k = [&](int lo, int hi, auto pred) {
      int end = hi + 1;
      while (lo < end) {
        const int mid = lo + (end - lo) / 2;
        if (pred(mred_at(mid))) end = mid;
        else lo = mid + 1;
      }
      return lo;
    };
    const int above = first_k(0, kmax, [&](double m) { return m > spec.mred; });
    if (above <= kmax) consider({mode, above, spec.mred, mred_at(above)});
    if (above > 0) {
      const double below = mred_at(above - 1);
      const int k = first_k(0, above - 1, [&](double m) { return m >= below; });
      consider({mode, k, spec.mred, mred_at(k)});
    }
  }
  const double achieved = best->achieved_mred;
  if (!(achieved >= spec.mred / 4.0 && achieved <= spec.mred * 4.0))
    throw Error(Errc::CalibrationOutOfRange,
                spec.label() + ": best " + to_string(best->family) + "(" +
                    std::to_string(best->k) + ") reaches MRED " + std::to_string(achieved) +
                    "%, target " + std::to_string(spec.mred) + "%");
  auto model = best->family == ModelMode::Truncate
                   ? FunctionalModel::truncate(spec, best->k)
                   : FunctionalModel::lower_part_or(spec, best->k);
  model.set_calibration(*best);
  return model;
}

}  // namespace axdse
