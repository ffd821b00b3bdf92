#ifndef NESTPLAY_TRAINING_H_
#define NESTPLAY_TRAINING_H_

#include <array>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nestplay/config.h"
#include "nestplay/grpo.h"
#include "nestplay/tasks.h"

namespace nestplay::harness {

struct IterationMetrics {
  int iteration = 0;
  // Mean sub-task reward per task id, absent when the task did not run.
  std::array<std::optional<double>, 4> task_reward{};
  double scalar_mean = 0.0;
  grpo::StepMetrics step;
};

struct TrainOptions {
  bool write_outputs = true;
  bool log_trajectories = true;
  // Called after every iteration.
  std::function<void(const IterationMetrics&)> on_iteration;
};

struct TrainResult {
  grpo::PolicyParams params;
  std::vector<IterationMetrics> metrics;
};

// Seeds of group g, sample s in iteration it.
tasks::EpisodeSeeds rollout_seeds(std::uint64_t base, int iteration, int group,
                                  int sample);

// One GRPO group: group_size episodes sharing an env seed.
grpo::GroupBatch to_group(const std::vector<tasks::Trajectory>& trajectories);

TrainResult train(const RunConfig& cfg, const tasks::TaskResources& resources,
                  const tasks::OpponentSuite& opponents,
                  const TrainOptions& options = {});

// Loads resources, builds opponents from cfg and trains. Writes
// metrics.csv, policy.txt, trajectories.jsonl and config.yaml under
// cfg.output_dir when options.write_outputs is set.
TrainResult run_training(const RunConfig& cfg, const TrainOptions& options = {});

std::string metrics_csv_header();
std::string metrics_csv_row(const IterationMetrics& m);
void write_metrics_csv(std::ostream& out, const std::vector<IterationMetrics>& rows);

}  // namespace nestplay::harness

#endif  // NESTPLAY_TRAINING_H_
