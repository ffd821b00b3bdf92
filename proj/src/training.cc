#include "nestplay/training.h"

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "nestplay/evaluation.h"
#include "nestplay/parallel.h"
#include "nestplay/trajectory_log.h"

namespace nestplay::harness {
namespace {

constexpr std::uint64_t kTrainStream = 0x747261696e;

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(9);
  s << v;
  return s.str();
}

}  // namespace

tasks::EpisodeSeeds rollout_seeds(std::uint64_t base, int iteration, int group,
                                  int sample) {
  const auto env = derive_seed(base, kTrainStream, static_cast<std::uint64_t>(iteration),
                               static_cast<std::uint64_t>(group));
  return {env, derive_seed(env, static_cast<std::uint64_t>(sample) + 1)};
}

grpo::GroupBatch to_group(const std::vector<tasks::Trajectory>& trajectories) {
  std::vector<grpo::TrajectorySample> samples;
  samples.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    grpo::TrajectorySample s;
    s.reward = t.scalar_reward;
    for (const auto& turn : t.turns) {
      s.turns.push_back({turn.observation_key, turn.actions.size(), turn.action_index,
                         turn.logprob});
    }
    samples.push_back(std::move(s));
  }
  return grpo::make_group(std::move(samples));
}

TrainResult train(const RunConfig& cfg, const tasks::TaskResources& resources,
                  const tasks::OpponentSuite& opponents, const TrainOptions& options) {
  cfg.validate();
  const auto composition = cfg.composition();
  const auto& tc = cfg.trainer;

  TrainResult result;
  if (!cfg.policy.snapshot.empty()) {
    result.params = grpo::PolicyParams::load_file(cfg.policy.snapshot);
  }
  grpo::AdamState adam;

  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  std::unique_ptr<TrajectoryLogWriter> log;
  std::ofstream metrics_out;
  if (options.write_outputs) {
    fs::create_directories(dir);
    std::ofstream(dir / "config.yaml") << emit_config(cfg);
    metrics_out.open(dir / "metrics.csv", std::ios::trunc);
    metrics_out << metrics_csv_header() << '\n';
    if (options.log_trajectories) {
      log = std::make_unique<TrajectoryLogWriter>((dir / "trajectories.jsonl").string());
    }
  }

  const auto groups_n = static_cast<std::size_t>(tc.groups_per_iteration);
  const auto g_size = static_cast<std::size_t>(tc.group_size);
  for (int it = 0; it < tc.iterations; ++it) {
    // Rollouts read a frozen snapshot of the parameters.
    const grpo::PolicyParams snapshot = result.params;
    const grpo::SoftmaxPolicy policy(snapshot);
    std::vector<tasks::Trajectory> trajs(groups_n * g_size);
    parallel_for(trajs.size(), cfg.workers, [&](std::size_t i) {
      const auto seeds = rollout_seeds(cfg.seed, it, static_cast<int>(i / g_size),
                                       static_cast<int>(i % g_size));
      trajs[i] = tasks::run_episode(composition, policy, opponents, resources, seeds);
    });

    IterationMetrics m;
    m.iteration = it;
    std::array<double, 4> sum{};
    std::array<int, 4> count{};
    double scalar = 0.0;
    for (const auto& t : trajs) {
      scalar += t.scalar_reward;
      for (const auto& r : t.results) {
        const auto k = static_cast<std::size_t>(r.task);
        sum[k] += r.reward;
        ++count[k];
      }
    }
    m.scalar_mean = scalar / static_cast<double>(trajs.size());
    for (std::size_t k = 0; k < 4; ++k) {
      if (count[k] > 0) m.task_reward[k] = sum[k] / count[k];
    }

    std::vector<grpo::GroupBatch> groups;
    for (std::size_t g = 0; g < groups_n; ++g) {
      std::vector<tasks::Trajectory> members(trajs.begin() + static_cast<long>(g * g_size),
                                             trajs.begin() + static_cast<long>((g + 1) * g_size));
      groups.push_back(to_group(members));
    }
    for (int e = 0; e < tc.update_epochs; ++e) {
      auto step = grpo::train_step(result.params, adam, groups, tc);
      result.params = std::move(step.params);
      // Entropy and reward describe the rollout policy, so keep the first
      // epoch's; the rest reflect the last optimizer step.
      if (e == 0) {
        m.step = step.metrics;
      } else {
        m.step.gradient_norm = step.metrics.gradient_norm;
        m.step.clip_fraction = step.metrics.clip_fraction;
      }
    }
    result.metrics.push_back(m);

    if (log) {
      for (std::size_t i = 0; i < trajs.size(); ++i) {
        log->append(make_log_record(cfg.run_id, it, static_cast<int>(i), trajs[i]));
      }
    }
    if (options.write_outputs) {
      metrics_out << metrics_csv_row(m) << '\n';
      metrics_out.flush();
      if (cfg.snapshot_every > 0 && (it + 1) % cfg.snapshot_every == 0) {
        result.params.save_file(
            (dir / ("policy_iter_" + std::to_string(it + 1) + ".txt")).string());
      }
    }
    if (options.on_iteration) options.on_iteration(m);
  }
  if (options.write_outputs) result.params.save_file((dir / "policy.txt").string());
  return result;
}

TrainResult run_training(const RunConfig& cfg, const TrainOptions& options) {
  const auto resources = load_resources(cfg);
  const auto opponents = make_opponents(cfg, resources);
  return train(cfg, resources, opponents, options);
}

std::string metrics_csv_header() {
  return "iteration,mean_reward_arith,mean_reward_matrix,mean_reward_tictactoe,"
         "mean_reward_spy,scalar_mean,entropy,gradient_norm,clip_fraction,"
         "kept_group_count";
}

std::string metrics_csv_row(const IterationMetrics& m) {
  std::ostringstream out;
  out << m.iteration;
  for (const auto& r : m.task_reward) {
    out << ',';
    if (r) out << fmt(*r);
  }
  out << ',' << fmt(m.scalar_mean) << ',' << fmt(m.step.policy_entropy) << ','
      << fmt(m.step.gradient_norm) << ',' << fmt(m.step.clip_fraction) << ','
      << m.step.kept_group_count;
  return out.str();
}

void write_metrics_csv(std::ostream& out, const std::vector<IterationMetrics>& rows) {
  out << metrics_csv_header() << '\n';
  for (const auto& r : rows) out << metrics_csv_row(r) << '\n';
}

}  // namespace nestplay::harness
