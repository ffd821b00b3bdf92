#ifndef NESTPLAY_TASKS_H_
#define NESTPLAY_TASKS_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "nestplay/matrix_game.h"
#include "nestplay/policy.h"
#include "nestplay/random.h"
#include "nestplay/spy.h"
#include "nestplay/tictactoe.h"

namespace nestplay::tasks {

enum class TaskId { kArith, kMatrix, kTicTacToe, kSpy };

inline constexpr TaskId kAllTasks[] = {TaskId::kArith, TaskId::kMatrix,
                                       TaskId::kTicTacToe, TaskId::kSpy};

std::string_view task_name(TaskId t);
// Accepts the names above case-insensitively.
TaskId parse_task_id(std::string_view name);

// Turn budget of one sub-task: Arith 1, Matrix 1, TicTacToe 5, Spy 3.
int default_max_turns(TaskId t);

struct ArithOptions {
  int max_operand = 99;
  // Answer options offered to the policy, including the correct one.
  int choices = 4;
  // 0 draws a fresh problem every episode; otherwise problems come from a
  // fixed pool of this size generated from pool_seed.
  int pool_size = 16;
  std::uint64_t pool_seed = 7;
  bool operator==(const ArithOptions&) const = default;
};

struct MatrixOptions {
  // Game names; empty means every game in the resource set.
  std::vector<std::string> games;
  bool random_transform = true;
  // When false the random transform only shifts payoffs, which keeps every
  // equilibrium. A flipped sign can leave a game without a pure equilibrium.
  bool sign_flip = true;
  // Empty means the role is drawn per episode.
  std::optional<matrix::PlayerRole> role;
  // -1 draws a template per episode.
  int template_id = -1;
  bool operator==(const MatrixOptions&) const = default;
};

struct TicTacToeOptions {
  bool include_win_conditions = true;
  int template_id = -1;
  bool operator==(const TicTacToeOptions&) const = default;
};

struct SpyOptions {
  bool diversity_hint = true;
  int template_id = -1;
  bool operator==(const SpyOptions&) const = default;
};

using EnvOptions =
    std::variant<ArithOptions, MatrixOptions, TicTacToeOptions, SpyOptions>;

struct SubTaskSpec {
  TaskId task_id = TaskId::kArith;
  int max_turns = 1;
  EnvOptions options;

  // Spec with the fixed turn budget and default options for `t`.
  static SubTaskSpec make(TaskId t);
  // Throws std::invalid_argument when max_turns or the options do not fit.
  void validate() const;
  bool operator==(const SubTaskSpec&) const = default;
};

enum class CompositionMode { kMixed, kNested };
enum class RewardRule { kMean, kStrictAnd };

std::string_view mode_name(CompositionMode m);
CompositionMode parse_mode(std::string_view name);
std::string_view reward_rule_name(RewardRule r);
RewardRule parse_reward_rule(std::string_view name);

class TaskComposition {
 public:
  TaskComposition(CompositionMode mode, std::vector<SubTaskSpec> tasks,
                  RewardRule rule = RewardRule::kMean);
  static TaskComposition of(CompositionMode mode,
                            const std::vector<TaskId>& tasks,
                            RewardRule rule = RewardRule::kMean);

  CompositionMode mode() const { return mode_; }
  const std::vector<SubTaskSpec>& tasks() const { return tasks_; }
  RewardRule reward_rule() const { return rule_; }
  // Nested: sum of sub-task budgets. Mixed: the largest one.
  int total_max_turns() const;
  std::vector<TaskId> task_ids() const;
  bool contains(TaskId t) const;
  std::string describe() const;

  bool operator==(const TaskComposition&) const = default;

 private:
  CompositionMode mode_;
  std::vector<SubTaskSpec> tasks_;
  RewardRule rule_;
};

// Uniform draw over the composition's tasks.
const SubTaskSpec& sample_mixed_task(const TaskComposition& c, Rng& rng);

// Mean of the sub-task rewards.
double nested_reward(const std::vector<double>& sub_rewards);
// Product of the sub-task rewards.
double strict_and_reward(const std::vector<double>& sub_rewards);

inline constexpr double kFormatPenalty = -0.1;

struct ArithProblem {
  long long a = 0;
  long long b = 0;
  char op = '+';
  long long answer = 0;
  std::string prompt;
  // Answer texts offered as actions, the correct one among them.
  std::vector<std::string> options;
};

ArithProblem make_arith_problem(Rng& rng, const ArithOptions& opts);

struct ArithTask {
  std::string prompt;
  std::vector<std::string> options;
  // 1 iff the last integer in the answer equals the ground truth.
  std::function<int(std::string_view)> verifier;
};

ArithTask arith_task(Rng& rng, const ArithOptions& opts = {});

// 1 iff the last integer in `answer` equals `truth`.
std::function<int(std::string_view)> arith_verifier(long long truth);
// Problem number `index` of the pool defined by opts.
ArithProblem arith_pool_problem(const ArithOptions& opts, std::size_t index);

// Shared read-only data the environments draw from.
struct TaskResources {
  std::vector<matrix::PayoffMatrix> games;
  std::shared_ptr<const spy::Lexicon> lexicon;

  // Canonical games and the bundled word lists from `data_dir`.
  static TaskResources load(const std::string& data_dir);
  static TaskResources defaults();
};

std::string default_data_dir();

// Factories for per-episode opponents. Each call returns a fresh object, so
// a suite can be shared by parallel workers.
struct OpponentSuite {
  std::function<std::unique_ptr<ttt::Opponent>()> tictactoe;
  // Agent for an opponent seat holding `role`.
  std::function<std::unique_ptr<spy::Agent>(spy::Role role, std::uint64_t seed)>
      spy;

  // Epsilon-minimax TicTacToe and scripted Spy agents.
  static OpponentSuite scripted(std::shared_ptr<const spy::Lexicon> lexicon,
                                double ttt_epsilon = 0.2);
};

struct TurnRecord {
  TaskId task = TaskId::kArith;
  int turn_index = 0;
  std::string observation;
  std::vector<std::string> actions;
  std::size_t action_index = 0;
  std::string action_text;
  std::uint64_t observation_key = 0;
  double logprob = 0.0;
  bool violation = false;

  bool operator==(const TurnRecord&) const = default;
};

struct SubTaskResult {
  TaskId task = TaskId::kArith;
  double reward = 0.0;
  bool violation = false;
  // Short outcome label: "correct", "nash", "win", "draw", "civilians", ...
  std::string outcome;
  nlohmann::json detail;

  bool operator==(const SubTaskResult&) const = default;
};

struct Trajectory {
  CompositionMode mode = CompositionMode::kNested;
  std::vector<TaskId> composition;
  int total_max_turns = 0;
  std::uint64_t env_seed = 0;
  std::uint64_t sample_seed = 0;
  std::vector<TurnRecord> turns;
  std::vector<SubTaskResult> results;
  bool format_penalty = false;
  double scalar_reward = 0.0;
  std::optional<std::string> error;

  std::vector<double> sub_rewards() const;
  std::optional<double> reward_of(TaskId t) const;
  bool aborted() const { return error.has_value(); }
  // The whole rollout as one conversation: separators, prompts and actions.
  std::string context() const;

  bool operator==(const Trajectory&) const = default;
};

// Seeds of one episode. env_seed fixes the prompt side (task choice, game,
// transform, roles, templates); sample_seed drives the policy and opponents.
// A GRPO group shares env_seed.
struct EpisodeSeeds {
  std::uint64_t env_seed = 0;
  std::uint64_t sample_seed = 0;

  static EpisodeSeeds from(std::uint64_t seed);
};

Trajectory run_episode(const TaskComposition& c, const grpo::Policy& policy,
                       const OpponentSuite& opponents,
                       const TaskResources& resources, EpisodeSeeds seeds);
Trajectory run_episode(const TaskComposition& c, const grpo::Policy& policy,
                       const OpponentSuite& opponents,
                       const TaskResources& resources, std::uint64_t seed);

// Plays TicTacToe prompts by exhaustive search; other prompts uniformly.
class MinimaxPolicy : public grpo::Policy {
 public:
  grpo::ActionDraw act(std::string_view text,
                       std::span<const std::string> actions,
                       Rng& rng) const override;
  std::string name() const override { return "minimax"; }
};

}  // namespace nestplay::tasks

#endif  // NESTPLAY_TASKS_H_
