#include <gtest/gtest.h>

#include <array>
#include <limits>

#include "support.hpp"

using namespace axdse;
using axdse::testing::make_toy_env;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Toy benchmark with power/time thresholds at 0, accuracy gate open and no
// cumulative cap: only the terminal reward stops the run.
RewardConfig open_toy_reward() {
  RewardConfig r;
  r.max_reward = 10;
  r.acc_th = kInf;
  r.p_th = 0;
  r.t_th = 0;
  r.max_cumulative = kInf;
  return r;
}

Trajectory toy_run(std::uint64_t seed, EpisodeOptions opts, AgentParams params = {}) {
  auto env = make_toy_env();
  env.reset(seed);
  QTable q(env.actions().size(), params);
  Rng rng(seed);
  return run_episode(env, q, open_toy_reward(), opts, rng, StateEncoder(env.sizes()));
}

double window_mean(const std::vector<TraceRecord>& t, std::size_t from, std::size_t n) {
  double s = 0;
  for (std::size_t i = from; i < from + n; ++i) s += t[i].reward;
  return s / static_cast<double>(n);
}

}  // namespace

TEST(SelectAction, UniformWhenEpsilonIsOne) {
  AgentParams p;
  p.epsilon = 1.0;
  const std::size_t n = 15;
  QTable q(n, p);
  q.set(0, 3, 100.0);  // exploration must ignore values
  Rng rng(123);
  std::vector<double> counts(n, 0.0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) counts[select_action(q, 0, rng)] += 1;
  const double expected = static_cast<double>(draws) / n;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 36.12);  // chi-square, 14 dof, p = 0.001
}

TEST(SelectAction, GreedyTieBreak) {
  AgentParams p;
  p.epsilon = 0.0;
  QTable q(3, p);
  Rng rng(1);
  EXPECT_EQ(select_action(q, 42, rng), 0u);
  q.set(7, 1, 5.0);
  q.set(7, 2, 5.0);
  EXPECT_EQ(select_action(q, 7, rng), 1u);
  QTable empty(0, p);
  try {
    select_action(empty, 0, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoValidAction);
  }
}

TEST(Update, Examples) {
  AgentParams p;
  p.alpha = 1.0;
  p.gamma = 0.0;
  QTable q(2, p);
  q.set(0, 1, -7.0);
  q.set(1, 0, 50.0);
  update(q, 0, 1, 3.5, 1);
  EXPECT_EQ(q.value(0, 1), 3.5);

  p.alpha = 0.0;
  p.gamma = 0.9;
  QTable frozen(2, p);
  frozen.set(0, 0, 2.0);
  frozen.set(1, 1, 9.0);
  update(frozen, 0, 0, 100.0, 1);
  EXPECT_EQ(frozen.value(0, 0), 2.0);

  p.alpha = 0.5;
  QTable q2(2, p);
  q2.set(1, 0, 4.0);
  update(q2, 0, 0, 1.0, 1);
  EXPECT_DOUBLE_EQ(q2.value(0, 0), 0.5 * (1.0 + 0.9 * 4.0));
  update(q2, 0, 1, 1.0, 1, /*terminal=*/true);
  EXPECT_DOUBLE_EQ(q2.value(0, 1), 0.5);
}

TEST(Update, ChainMatchesValueIteration) {
  // States 0 and 1; action 1 moves right, action 0 stays. Moving right from
  // state 1 reaches the goal with reward 1 and ends the episode.
  const double gamma = 0.9;
  auto next = [](int s, int a) { return a == 1 ? s + 1 : s; };
  auto reward = [](int s, int a) { return s == 1 && a == 1 ? 1.0 : 0.0; };

  std::array<std::array<double, 2>, 2> vi{};
  for (int it = 0; it < 1000; ++it) {
    auto nv = vi;
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const int n = next(s, a);
        nv[s][a] = reward(s, a) + (n == 2 ? 0.0 : gamma * std::max(vi[n][0], vi[n][1]));
      }
    vi = nv;
  }
  EXPECT_NEAR(vi[0][1], 0.9, 1e-12);
  EXPECT_NEAR(vi[1][1], 1.0, 1e-12);

  AgentParams p;
  p.alpha = 0.5;
  p.gamma = gamma;
  QTable q(2, p);
  for (int sweep = 0; sweep < 1000; ++sweep)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const int n = next(s, a);
        update(q, s, a, reward(s, a), n, n == 2);
      }
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(q.value(s, a), vi[s][a], 1e-9) << s << ' ' << a;
  EXPECT_EQ(q.greedy(0), 1u);
  EXPECT_EQ(q.greedy(1), 1u);
}

TEST(Epsilon, DecaysToFloor) {
  AgentParams p;
  QTable q(3, p);
  EXPECT_DOUBLE_EQ(q.epsilon(), 0.3);
  q.decay_epsilon();
  EXPECT_DOUBLE_EQ(q.epsilon(), 0.3 * 0.999);
  for (int i = 0; i < 10000; ++i) q.decay_epsilon();
  EXPECT_DOUBLE_EQ(q.epsilon(), 0.05);
  p.gamma = 1.5;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Episode, ZeroStepCapGivesEmptyTrajectory) {
  EpisodeOptions o;
  o.step_cap = 0;
  const auto t = toy_run(1, o);
  EXPECT_TRUE(t.steps.empty());
  EXPECT_EQ(t.stop, StopCause::StepCap);
  EXPECT_TRUE(t.final_state.same_configuration(t.initial_state));
}

TEST(Episode, DeterministicForFixedSeed) {
  EpisodeOptions o;
  o.step_cap = 3000;
  o.continue_after_terminal = true;
  const auto a = toy_run(5, o), b = toy_run(5, o), c = toy_run(6, o);
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_NE(a.steps, c.steps);
}

TEST(Episode, ToyReachesTerminalOnNineOfTenSeeds) {
  int reached = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = toy_run(seed, EpisodeOptions{});
    if (t.stop == StopCause::Terminal) {
      ++reached;
      EXPECT_EQ(t.steps.back().reward, 10.0);
    }
  }
  EXPECT_GE(reached, 9);
}

TEST(Episode, ToyLearningSanity) {
  int improved = 0;
  EpisodeOptions o;
  o.step_cap = 3000;
  o.continue_after_terminal = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = toy_run(seed, o);
    ASSERT_EQ(t.steps.size(), 3000u);
    if (window_mean(t.steps, t.steps.size() - 100, 100) >= window_mean(t.steps, 0, 100)) ++improved;
  }
  EXPECT_GE(improved, 8);
}

TEST(Episode, QValuesStayBounded) {
  AgentParams p;
  EpisodeOptions o;
  o.step_cap = 5000;
  o.continue_after_terminal = true;
  auto env = make_toy_env();
  QTable q(env.actions().size(), p);
  Rng rng(3);
  run_episode(env, q, open_toy_reward(), o, rng, StateEncoder(env.sizes()));
  EXPECT_LE(q.max_abs(), 10.0 / (1.0 - p.gamma) + 10.0);
  EXPECT_GT(q.visited_states(), 1u);
}

TEST(Episode, CumulativeCapStops) {
  auto env = make_toy_env();
  auto r = open_toy_reward();
  r.max_cumulative = 5;
  r.max_reward = 1000;  // keep the terminal reward out of reach of chance
  AgentParams p;
  QTable q(env.actions().size(), p);
  Rng rng(8);
  const auto t = run_episode(env, q, r, EpisodeOptions{}, rng, StateEncoder(env.sizes()));
  ASSERT_FALSE(t.steps.empty());
  if (t.stop == StopCause::CumulativeCap) {
    EXPECT_GE(t.cumulative, 5.0);
  }
  double sum = 0;
  for (const auto& s : t.steps) sum += s.reward;
  EXPECT_DOUBLE_EQ(sum, t.cumulative);
}

TEST(Episode, EpisodeLengthRestartsCumulative) {
  EpisodeOptions o;
  o.step_cap = 50;
  o.episode_length = 10;
  const auto t = toy_run(4, o);
  double cum = 0;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (i % 10 == 0) cum = 0;
    cum += t.steps[i].reward;
    EXPECT_DOUBLE_EQ(t.steps[i].cumulative, cum) << i;
  }
}

TEST(QTableIo, SaveLoadRoundTrip) {
  AgentParams p;
  QTable q(4, p);
  q.set(1, 0, 0.1);
  q.set(1, 3, -2.0 / 3.0);
  q.set(99, 2, 1e-17);
  q.set_epsilon(0.123);
  axdse::testing::TempDir dir("qtable");
  q.save(dir.path() / "q.txt");
  const auto r = QTable::load(dir.path() / "q.txt", p);
  EXPECT_EQ(r.n_actions(), 4u);
  EXPECT_EQ(r.epsilon(), 0.123);
  EXPECT_EQ(r.keys(), q.keys());
  for (StateKey k : q.keys())
    for (std::size_t a = 0; a < 4; ++a) EXPECT_EQ(r.value(k, a), q.value(k, a));
  std::ofstream(dir.path() / "bad.txt") << "not a table\n";
  EXPECT_THROW(QTable::load(dir.path() / "bad.txt", p), Error);
}

TEST(StopCauses, RoundTrip) {
  for (auto c : {StopCause::Terminal, StopCause::CumulativeCap, StopCause::StepCap})
    EXPECT_EQ(parse_stop_cause(to_string(c)), c);
  EXPECT_THROW(parse_stop_cause("x"), Error);
}
