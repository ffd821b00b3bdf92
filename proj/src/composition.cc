#include <algorithm>
#include <numeric>

#include "nestplay/tasks.h"
#include "nestplay/text_util.h"

namespace nestplay::tasks {

std::string_view task_name(TaskId t) {
  switch (t) {
    case TaskId::kArith: return "arith";
    case TaskId::kMatrix: return "matrix";
    case TaskId::kTicTacToe: return "tictactoe";
    case TaskId::kSpy: return "spy";
  }
  return "?";
}

TaskId parse_task_id(std::string_view name) {
  const auto lower = to_lower(trim(name));
  for (TaskId t : kAllTasks) {
    if (task_name(t) == lower) return t;
  }
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

int default_max_turns(TaskId t) {
  switch (t) {
    case TaskId::kArith: return 1;
    case TaskId::kMatrix: return 1;
    case TaskId::kTicTacToe: return 5;
    case TaskId::kSpy: return 3;
  }
  return 0;
}

std::string_view mode_name(CompositionMode m) {
  return m == CompositionMode::kMixed ? "mixed" : "nested";
}

CompositionMode parse_mode(std::string_view name) {
  const auto lower = to_lower(trim(name));
  if (lower == "mixed") return CompositionMode::kMixed;
  if (lower == "nested") return CompositionMode::kNested;
  throw std::invalid_argument("unknown composition mode '" + std::string(name) + "'");
}

std::string_view reward_rule_name(RewardRule r) {
  return r == RewardRule::kMean ? "mean" : "strict_and";
}

RewardRule parse_reward_rule(std::string_view name) {
  const auto lower = to_lower(trim(name));
  if (lower == "mean") return RewardRule::kMean;
  if (lower == "strict_and") return RewardRule::kStrictAnd;
  throw std::invalid_argument("unknown reward rule '" + std::string(name) + "'");
}

SubTaskSpec SubTaskSpec::make(TaskId t) {
  SubTaskSpec s;
  s.task_id = t;
  s.max_turns = default_max_turns(t);
  switch (t) {
    case TaskId::kArith: s.options = ArithOptions{}; break;
    case TaskId::kMatrix: s.options = MatrixOptions{}; break;
    case TaskId::kTicTacToe: s.options = TicTacToeOptions{}; break;
    case TaskId::kSpy: s.options = SpyOptions{}; break;
  }
  return s;
}

void SubTaskSpec::validate() const {
  const std::string name(task_name(task_id));
  if (max_turns != default_max_turns(task_id)) {
    throw std::invalid_argument(name + " has a fixed budget of " +
                                std::to_string(default_max_turns(task_id)) +
                                " turns");
  }
  const bool fits = std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ArithOptions>) return task_id == TaskId::kArith;
        if constexpr (std::is_same_v<T, MatrixOptions>) return task_id == TaskId::kMatrix;
        if constexpr (std::is_same_v<T, TicTacToeOptions>) {
          return task_id == TaskId::kTicTacToe;
        }
        if constexpr (std::is_same_v<T, SpyOptions>) return task_id == TaskId::kSpy;
      },
      options);
  if (!fits) throw std::invalid_argument(name + " carries another task's options");

  if (const auto* a = std::get_if<ArithOptions>(&options)) {
    if (a->max_operand < 1 || a->choices < 2 || a->pool_size < 0) {
      throw std::invalid_argument("arith options out of range");
    }
  }
  if (const auto* m = std::get_if<MatrixOptions>(&options)) {
    if (m->template_id < -1 || m->template_id >= matrix::kMatrixTemplateCount) {
      throw std::invalid_argument("matrix template_id out of range");
    }
  }
  if (const auto* t = std::get_if<TicTacToeOptions>(&options)) {
    if (t->template_id < -1 || t->template_id >= ttt::kBoardTemplateCount) {
      throw std::invalid_argument("tictactoe template_id out of range");
    }
  }
  if (const auto* s = std::get_if<SpyOptions>(&options)) {
    if (s->template_id < -1 || s->template_id >= spy::kSpyTemplateCount) {
      throw std::invalid_argument("spy template_id out of range");
    }
  }
}

TaskComposition::TaskComposition(CompositionMode mode,
                                 std::vector<SubTaskSpec> tasks,
                                 RewardRule rule)
    : mode_(mode), tasks_(std::move(tasks)), rule_(rule) {
  if (tasks_.empty()) throw std::invalid_argument("composition has no tasks");
  for (const auto& t : tasks_) t.validate();
}

TaskComposition TaskComposition::of(CompositionMode mode,
                                    const std::vector<TaskId>& tasks,
                                    RewardRule rule) {
  std::vector<SubTaskSpec> specs;
  for (TaskId t : tasks) specs.push_back(SubTaskSpec::make(t));
  return TaskComposition(mode, std::move(specs), rule);
}

int TaskComposition::total_max_turns() const {
  int sum = 0;
  int mx = 0;
  for (const auto& t : tasks_) {
    sum += t.max_turns;
    mx = std::max(mx, t.max_turns);
  }
  return mode_ == CompositionMode::kNested ? sum : mx;
}

std::vector<TaskId> TaskComposition::task_ids() const {
  std::vector<TaskId> out;
  for (const auto& t : tasks_) out.push_back(t.task_id);
  return out;
}

bool TaskComposition::contains(TaskId t) const {
  return std::any_of(tasks_.begin(), tasks_.end(),
                     [t](const SubTaskSpec& s) { return s.task_id == t; });
}

std::string TaskComposition::describe() const {
  std::vector<std::string> names;
  for (const auto& t : tasks_) names.emplace_back(task_name(t.task_id));
  return std::string(mode_name(mode_)) + "[" + join(names, ",") + "]";
}

const SubTaskSpec& sample_mixed_task(const TaskComposition& c, Rng& rng) {
  if (c.mode() != CompositionMode::kMixed) {
    throw std::invalid_argument("sample_mixed_task needs a mixed composition");
  }
  return c.tasks()[uniform_index(rng, c.tasks().size())];
}

double nested_reward(const std::vector<double>& sub_rewards) {
  if (sub_rewards.empty()) throw std::invalid_argument("no sub-task rewards");
  // Sorting first makes the sum bitwise independent of task order.
  std::vector<double> sorted = sub_rewards;
  std::sort(sorted.begin(), sorted.end());
  return std::accumulate(sorted.begin(), sorted.end(), 0.0) /
         static_cast<double>(sorted.size());
}

double strict_and_reward(const std::vector<double>& sub_rewards) {
  if (sub_rewards.empty()) throw std::invalid_argument("no sub-task rewards");
  double p = 1.0;
  for (double r : sub_rewards) p *= r;
  return p;
}

}  // namespace nestplay::tasks
