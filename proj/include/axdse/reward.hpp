#pragma once
// Threshold-gated step reward and cumulative bookkeeping.

#include <limits>
#include <string>

#include "axdse/env.hpp"
#include "axdse/kernels.hpp"

namespace axdse {

struct RewardConfig {
  double max_reward = 10.0;  // R
  double acc_th = 0.0;
  double p_th = 0.0;  // mW-units
  double t_th = 0.0;  // ns-units
  /// Exploration stops once the cumulative reward reaches this value.
  double max_cumulative = 10.0;

  void validate() const {
    if (!(max_reward > 0.0)) throw Error(Errc::ConfigError, "max_reward must be > 0");
    if (!(acc_th >= 0.0) || !(p_th >= 0.0) || !(t_th >= 0.0))
      throw Error(Errc::ConfigError, "reward thresholds must be >= 0");
  }
};

struct RewardOutcome {
  double reward = 0.0;
  bool terminate = false;
  double cumulative = 0.0;
};

/// Reward for the state just reached:
///
///   d_acc > acc_th                                   -> -R
///   most approximate adder and multiplier, all vars  -> +R, terminate
///   d_power >= p_th and d_time >= t_th               -> +1
///   otherwise                                        -> -1
///
/// With a signed accuracy metric the comparison uses the signed value, so a
/// configuration that over-estimates on average always passes the gate.
inline RewardOutcome evaluate(const EnvState& state, const RewardConfig& cfg, double r_cum,
                              const EnvSizes& sizes) {
  RewardOutcome out;
  if (state.obs.d_acc <= cfg.acc_th) {
    const bool most_approximate = state.adder_idx + 1 == sizes.n_add &&
                                  state.mul_idx + 1 == sizes.n_mul && state.selection.all();
    if (most_approximate) {
      out.reward = cfg.max_reward;
      out.terminate = true;
    } else if (state.obs.d_power >= cfg.p_th && state.obs.d_time >= cfg.t_th) {
      out.reward = 1.0;
    } else {
      out.reward = -1.0;
    }
  } else {
    out.reward = -cfg.max_reward;
  }
  out.cumulative = r_cum + out.reward;
  return out;
}

struct Thresholds {
  double acc_th = 0.0;
  double p_th = 0.0;
  double t_th = 0.0;
  bool degenerate = false;
  std::string warning;
};

inline constexpr double kPowerThresholdFraction = 0.5;
inline constexpr double kTimeThresholdFraction = 0.5;
inline constexpr double kAccuracyThresholdFraction = 0.4;

/// Thresholds from the precise run: half of its power and time, 0.4 times its
/// average output. A zero average output gives acc_th = 0 and a warning.
inline Thresholds make_thresholds(const Baseline& b) {
  Thresholds t;
  t.p_th = kPowerThresholdFraction * b.power_precise;
  t.t_th = kTimeThresholdFraction * b.time_precise;
  t.acc_th = kAccuracyThresholdFraction * b.avg_output;
  if (b.avg_output == 0.0) {
    t.degenerate = true;
    t.warning =
        "DegenerateBaseline: average precise output is 0, accuracy threshold is 0 "
        "(only error-free configurations pass)";
  }
  return t;
}

}  // namespace axdse
