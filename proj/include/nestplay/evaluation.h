#ifndef NESTPLAY_EVALUATION_H_
#define NESTPLAY_EVALUATION_H_

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "nestplay/config.h"
#include "nestplay/policy.h"
#include "nestplay/tasks.h"
#include "nestplay/trajectory_log.h"

namespace nestplay::harness {

// Opponents described by the config. Remote exchanges go to `log` if given.
tasks::OpponentSuite make_opponents(const RunConfig& cfg,
                                    const tasks::TaskResources& resources,
                                    std::shared_ptr<ExchangeLog> log = nullptr);

tasks::TaskResources load_resources(const RunConfig& cfg);

// Owns whatever the chosen policy needs (e.g. loaded parameters).
struct PolicyHandle {
  std::shared_ptr<grpo::PolicyParams> params;
  std::unique_ptr<grpo::Policy> policy;
};
PolicyHandle make_policy(const PolicySpec& spec);

struct TaskReport {
  tasks::TaskId task = tasks::TaskId::kArith;
  int rounds = 0;
  int completed = 0;  // rounds without an opponent failure
  int errors = 0;
  int successes = 0;
  // successes / completed. Matrix: Nash action; TicTacToe: strict win;
  // Spy: the trained side won; Arith: correct answer.
  double success_rate = 0.0;
  // Mean sub-task reward over completed rounds (TicTacToe counts draws 0.5).
  double mean_reward = 0.0;
  int wins = 0;
  int draws = 0;
  int losses = 0;
  int violations = 0;
  double draw_rate = 0.0;
  double loss_rate = 0.0;
  double violation_rate = 0.0;

  bool operator==(const TaskReport&) const = default;
};

struct EvalReport {
  std::string run_id;
  std::string policy;
  std::uint64_t seed = 0;
  std::vector<TaskReport> tasks;

  const TaskReport& task(tasks::TaskId t) const;
  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
  bool operator==(const EvalReport&) const = default;
};

// Tallies evaluation records (one single-task episode each) into a report.
std::vector<TaskReport> summarize_records(const std::vector<TrajectoryLogRecord>& records);

struct EvalOutput {
  EvalReport report;
  std::vector<TrajectoryLogRecord> records;
};

// cfg.eval_rounds episodes per distinct task of the composition, each a
// single-task episode with its own seed, run on cfg.workers threads.
EvalOutput evaluate(const RunConfig& cfg, const grpo::Policy& policy,
                    const tasks::TaskResources& resources,
                    const tasks::OpponentSuite& opponents);

// Builds policy and opponents from cfg, evaluates, and writes report.json,
// report.csv and eval_trajectories.jsonl under cfg.output_dir.
EvalOutput run_eval(const RunConfig& cfg, bool write_outputs = true);

// Seed of evaluation round `round` for `task`.
std::uint64_t eval_seed(std::uint64_t base, tasks::TaskId task, int round);

}  // namespace nestplay::harness

#endif  // NESTPLAY_EVALUATION_H_
