#include <gtest/gtest.h>

#include <algorithm>

#include "nestplay/errors.h"
#include "nestplay/tasks.h"

namespace {

using namespace nestplay;
using namespace nestplay::tasks;

const TaskResources& resources() {
  static const TaskResources r = TaskResources::defaults();
  return r;
}

const OpponentSuite& scripted() {
  static const OpponentSuite s = OpponentSuite::scripted(resources().lexicon);
  return s;
}

// Always plays the last offered action: an occupied-or-not cell "8", the
// description that says the word, the last vote target.
class LastActionPolicy : public grpo::Policy {
 public:
  grpo::ActionDraw act(std::string_view, std::span<const std::string> actions,
                       Rng&) const override {
    return {actions.size() - 1, 0.0};
  }
  std::string name() const override { return "last"; }
};

class ThrowingOpponent : public ttt::Opponent {
 public:
  int choose_move(const ttt::Board&, Rng&) override { throw std::runtime_error("down"); }
  std::string name() const override { return "throwing"; }
};

const grpo::UniformPolicy kUniform;

TEST(Budget, WorkedValues) {
  using enum TaskId;
  EXPECT_EQ(TaskComposition::of(CompositionMode::kNested, {kArith, kMatrix}).total_max_turns(), 2);
  EXPECT_EQ(TaskComposition::of(CompositionMode::kNested, {kArith, kMatrix, kTicTacToe, kSpy})
                .total_max_turns(),
            10);
  EXPECT_EQ(TaskComposition::of(CompositionMode::kMixed, {kArith, kMatrix, kTicTacToe, kSpy})
                .total_max_turns(),
            5);
  EXPECT_THROW(TaskComposition(CompositionMode::kNested, {}), std::invalid_argument);
}

TEST(BudgetProperty, MixedIsMaxNestedIsSum) {
  Rng rng(31);
  for (int i = 0; i < 2000; ++i) {
    std::vector<TaskId> ids(1 + uniform_index(rng, 6));
    for (auto& t : ids) t = kAllTasks[uniform_index(rng, 4)];
    int sum = 0, mx = 0;
    for (auto t : ids) {
      sum += default_max_turns(t);
      mx = std::max(mx, default_max_turns(t));
    }
    ASSERT_EQ(TaskComposition::of(CompositionMode::kNested, ids).total_max_turns(), sum);
    ASSERT_EQ(TaskComposition::of(CompositionMode::kMixed, ids).total_max_turns(), mx);
  }
}

TEST(BudgetProperty, EpisodesStayWithinBudget) {
  Rng rng(32);
  for (int i = 0; i < 300; ++i) {
    std::vector<TaskId> ids(1 + uniform_index(rng, 4));
    for (auto& t : ids) t = kAllTasks[uniform_index(rng, 4)];
    const auto mode = i % 2 ? CompositionMode::kMixed : CompositionMode::kNested;
    const auto c = TaskComposition::of(mode, ids);
    const auto t = run_episode(c, kUniform, scripted(), resources(), rng());
    ASSERT_LE(static_cast<int>(t.turns.size()), c.total_max_turns());
    ASSERT_EQ(t.total_max_turns, c.total_max_turns());
    ASSERT_EQ(t.results.size(), mode == CompositionMode::kMixed ? 1u : ids.size());
  }
}

TEST(Mixed, SingletonAlwaysDrawsItsTask) {
  const auto c = TaskComposition::of(CompositionMode::kMixed, {TaskId::kMatrix});
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_mixed_task(c, rng).task_id, TaskId::kMatrix);
}

TEST(MixedProperty, TwoTasksDrawnEvenly) {
  const auto c = TaskComposition::of(CompositionMode::kMixed, {TaskId::kArith, TaskId::kMatrix});
  Rng rng(2);
  int arith = 0;
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) arith += sample_mixed_task(c, rng).task_id == TaskId::kArith;
  EXPECT_NEAR(arith / static_cast<double>(kDraws), 0.5, 0.015);
  Rng a(9), b(9);
  EXPECT_EQ(&sample_mixed_task(c, a), &sample_mixed_task(c, b));
}

TEST(MixedProperty, BatchMeanIsFrequencyWeightedTaskMean) {
  const auto c = TaskComposition::of(CompositionMode::kMixed,
                                     {TaskId::kArith, TaskId::kMatrix, TaskId::kTicTacToe});
  std::array<double, 4> sum{};
  std::array<int, 4> count{};
  double total = 0;
  constexpr int kEpisodes = 600;
  for (int i = 0; i < kEpisodes; ++i) {
    const auto t = run_episode(c, kUniform, scripted(), resources(), static_cast<std::uint64_t>(i));
    total += t.scalar_reward;
    const auto k = static_cast<std::size_t>(t.results[0].task);
    sum[k] += t.scalar_reward;
    ++count[k];
  }
  double weighted = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    if (count[k]) weighted += (count[k] / static_cast<double>(kEpisodes)) * (sum[k] / count[k]);
  }
  EXPECT_NEAR(total / kEpisodes, weighted, 1e-12);
}

TEST(Reward, NestedMeanAndStrictAnd) {
  EXPECT_EQ(nested_reward({1, 0}), 0.5);
  EXPECT_EQ(nested_reward({1, 1, 1}), 1.0);
  EXPECT_EQ(nested_reward({0, 1}), nested_reward({1, 0}));
  EXPECT_EQ(strict_and_reward({1, 0.5}), 0.5);
  EXPECT_EQ(strict_and_reward({1, 1}), 1.0);
  EXPECT_THROW(nested_reward({}), std::invalid_argument);
}

TEST(RewardProperty, NestedRewardIsPermutationInvariant) {
  Rng rng(41);
  const double values[] = {0.0, 0.5, 1.0, 0.1, 0.3, 0.7};
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> r(1 + uniform_index(rng, 6));
    for (auto& v : r) v = values[uniform_index(rng, std::size(values))];
    const double base = nested_reward(r);
    std::sort(r.begin(), r.end());
    do {
      ASSERT_EQ(nested_reward(r), base);
    } while (std::next_permutation(r.begin(), r.end()));
  }
}

TEST(OrderInvariance, SwappedNestReplaysIdentically) {
  using enum TaskId;
  const auto am = TaskComposition::of(CompositionMode::kNested, {kArith, kMatrix});
  const auto ma = TaskComposition::of(CompositionMode::kNested, {kMatrix, kArith});
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto x = run_episode(am, kUniform, scripted(), resources(), s);
    const auto y = run_episode(ma, kUniform, scripted(), resources(), s);
    ASSERT_EQ(x.reward_of(kArith), y.reward_of(kArith));
    ASSERT_EQ(x.reward_of(kMatrix), y.reward_of(kMatrix));
    ASSERT_EQ(x.scalar_reward, y.scalar_reward);
  }
}

TEST(RewardProperty, ScalarRewardBounds) {
  Rng rng(51);
  const LastActionPolicy last;
  for (int i = 0; i < 400; ++i) {
    std::vector<TaskId> ids(1 + uniform_index(rng, 4));
    for (auto& t : ids) t = kAllTasks[uniform_index(rng, 4)];
    const auto rule = i % 3 == 0 ? RewardRule::kStrictAnd : RewardRule::kMean;
    const auto c = TaskComposition::of(i % 2 ? CompositionMode::kMixed : CompositionMode::kNested,
                                       ids, rule);
    const grpo::Policy& pol = i % 4 == 0 ? static_cast<const grpo::Policy&>(last) : kUniform;
    const auto t = run_episode(c, pol, scripted(), resources(), rng());
    ASSERT_GE(t.scalar_reward, -0.1 - 1e-12);
    ASSERT_LE(t.scalar_reward, 1.0);
  }
}

TEST(Penalty, AppliedOnceAndViolatingSubTaskScoresZero) {
  using enum TaskId;
  const auto c = TaskComposition::of(CompositionMode::kNested, {kSpy, kArith, kSpy});
  const LastActionPolicy last;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = run_episode(c, last, scripted(), resources(), s);
    ASSERT_EQ(t.results.size(), 3u);
    EXPECT_TRUE(t.results[0].violation);
    EXPECT_TRUE(t.results[2].violation);
    EXPECT_EQ(t.results[0].reward, 0.0);
    EXPECT_EQ(t.results[0].outcome, "rule_violation");
    EXPECT_TRUE(t.format_penalty);
    EXPECT_NEAR(t.scalar_reward, nested_reward(t.sub_rewards()) - 0.1, 1e-15);
  }
}

TEST(Penalty, OccupiedCellIsIllegal) {
  const auto c = TaskComposition::of(CompositionMode::kNested, {TaskId::kTicTacToe});
  const LastActionPolicy last;
  int illegal = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto t = run_episode(c, last, scripted(), resources(), s);
    if (t.results[0].outcome == "illegal") {
      ++illegal;
      EXPECT_TRUE(t.turns.back().violation);
      EXPECT_NEAR(t.scalar_reward, -0.1, 1e-15);
    }
  }
  EXPECT_GT(illegal, 0);
}

TEST(Episode, SpyTakesThreeTurnsAndTicTacToeAtMostFive) {
  const auto c = TaskComposition::of(CompositionMode::kNested, {TaskId::kSpy, TaskId::kTicTacToe});
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto t = run_episode(c, kUniform, scripted(), resources(), s);
    int spy = 0, ttt = 0;
    for (const auto& turn : t.turns) {
      spy += turn.task == TaskId::kSpy;
      ttt += turn.task == TaskId::kTicTacToe;
    }
    if (!t.results[0].violation) {
      EXPECT_EQ(spy, 3);
    }
    EXPECT_LE(ttt, 5);
  }
}

TEST(Episode, DeterministicForASeed) {
  using enum TaskId;
  const auto c = TaskComposition::of(CompositionMode::kNested, {kArith, kMatrix, kTicTacToe, kSpy});
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto a = run_episode(c, kUniform, scripted(), resources(), s);
    const auto b = run_episode(c, kUniform, scripted(), resources(), s);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.context(), b.context());
  }
}

TEST(Episode, ObservationsCarryTaskSeparator) {
  using enum TaskId;
  const auto c = TaskComposition::of(CompositionMode::kNested, {kArith, kMatrix});
  const auto t = run_episode(c, kUniform, scripted(), resources(), 3);
  ASSERT_EQ(t.turns.size(), 2u);
  EXPECT_EQ(t.turns[0].observation.rfind("### Task: arith\n", 0), 0u);
  EXPECT_EQ(t.turns[1].observation.rfind("### Task: matrix\n", 0), 0u);
  EXPECT_NE(t.context().find(t.turns[1].action_text), std::string::npos);
}

TEST(Episode, OpponentFailureAbortsWithoutCrashing) {
  OpponentSuite broken = scripted();
  broken.tictactoe = [] { return std::make_unique<ThrowingOpponent>(); };
  const auto c = TaskComposition::of(CompositionMode::kNested, {TaskId::kArith, TaskId::kTicTacToe});
  int aborted = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto t = run_episode(c, kUniform, broken, resources(), s);
    if (t.aborted()) {
      ++aborted;
      EXPECT_EQ(t.scalar_reward, 0.0);
      EXPECT_FALSE(t.format_penalty);
      EXPECT_NE(t.error->find("down"), std::string::npos);
    }
  }
  EXPECT_GT(aborted, 0);
}

TEST(Episode, MinimaxPolicyNeverLosesTicTacToe) {
  const auto c = TaskComposition::of(CompositionMode::kNested, {TaskId::kArith, TaskId::kTicTacToe});
  const MinimaxPolicy perfect;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto t = run_episode(c, perfect, scripted(), resources(), s);
    ASSERT_GE(*t.reward_of(TaskId::kTicTacToe), 0.5) << "seed " << s;
  }
}

TEST(Episode, MatrixSignFlipOption) {
  SubTaskSpec spec = SubTaskSpec::make(TaskId::kMatrix);
  std::get<MatrixOptions>(spec.options).sign_flip = false;
  const TaskComposition c(CompositionMode::kMixed, {spec});
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto t = run_episode(c, kUniform, scripted(), resources(), s);
    ASSERT_EQ(t.results[0].detail["sign"], 1);
  }
}

TEST(Arith, VerifierUsesLastInteger) {
  const auto v = arith_verifier(17 + 25);
  EXPECT_EQ(v("42"), 1);
  EXPECT_EQ(v("the answer is 42"), 1);
  EXPECT_EQ(v("41"), 0);
  EXPECT_EQ(v("42 or maybe 41"), 0);
  EXPECT_EQ(v("no digits"), 0);
  EXPECT_EQ(arith_verifier(-3)("it is -3"), 1);
}

TEST(Arith, ProblemsOfferTheAnswerOnce) {
  Rng rng(61);
  ArithOptions opts;
  opts.pool_size = 0;
  for (int i = 0; i < 500; ++i) {
    const auto p = make_arith_problem(rng, opts);
    ASSERT_EQ(p.options.size(), 4u);
    const auto truth = "The answer is " + std::to_string(p.answer);
    ASSERT_EQ(std::count(p.options.begin(), p.options.end(), truth), 1);
    ASSERT_NE(p.prompt.find(std::to_string(p.a)), std::string::npos);
  }
  EXPECT_EQ(arith_pool_problem(ArithOptions{}, 3).prompt, arith_pool_problem(ArithOptions{}, 3).prompt);
}

TEST(Composition, NamesAndValidation) {
  EXPECT_EQ(parse_task_id("TicTacToe"), TaskId::kTicTacToe);
  EXPECT_THROW(parse_task_id("chess"), std::invalid_argument);
  EXPECT_EQ(parse_mode("nested"), CompositionMode::kNested);
  EXPECT_EQ(parse_reward_rule("strict_and"), RewardRule::kStrictAnd);
  SubTaskSpec bad = SubTaskSpec::make(TaskId::kSpy);
  bad.max_turns = 2;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

}  // namespace
