#ifndef NESTPLAY_CONFIG_H_
#define NESTPLAY_CONFIG_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nestplay/grpo.h"
#include "nestplay/remote_agent.h"
#include "nestplay/tasks.h"

namespace nestplay::harness {

inline constexpr int kConfigVersion = 1;

enum class RunMode { kTrain, kEval };

std::string_view run_mode_name(RunMode m);

struct OpponentSpec {
  enum class Kind { kRandom, kMinimax, kMinimaxEps, kScripted, kRemote };
  Kind kind = Kind::kScripted;
  double epsilon = 0.2;  // minimax_eps only
  RemoteEndpoint remote;  // remote only
  bool operator==(const OpponentSpec&) const = default;
};

std::string_view opponent_kind_name(OpponentSpec::Kind k);

struct PolicySpec {
  enum class Kind { kSoftmax, kUniform, kMinimax };
  Kind kind = Kind::kSoftmax;
  // Snapshot to load for softmax; empty means all-zero logits.
  std::string snapshot;
  bool operator==(const PolicySpec&) const = default;
};

std::string_view policy_kind_name(PolicySpec::Kind k);

struct RunConfig {
  int version = kConfigVersion;
  RunMode mode = RunMode::kEval;
  std::string run_id = "run";
  tasks::CompositionMode composition_mode = tasks::CompositionMode::kMixed;
  std::vector<tasks::SubTaskSpec> tasks;
  tasks::RewardRule reward_rule = tasks::RewardRule::kMean;
  grpo::TrainerConfig trainer;
  OpponentSpec tictactoe_opponent{OpponentSpec::Kind::kMinimaxEps, 0.2, {}};
  OpponentSpec spy_opponent{OpponentSpec::Kind::kScripted, 0.2, {}};
  PolicySpec policy;
  std::uint64_t seed = 1;
  int eval_rounds = 100;
  int workers = 1;
  std::string output_dir = "runs";
  // Empty means the bundled data directory.
  std::string data_dir;
  // Write a policy snapshot every this many iterations (0: final only).
  int snapshot_every = 0;

  tasks::TaskComposition composition() const;
  // Throws ConfigError on any invariant violation.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig parse_config_text(const std::string& text,
                            const std::string& source_name = "<config>");
RunConfig parse_config(const std::string& path);
// The effective configuration with every field spelled out.
std::string emit_config(const RunConfig& cfg);

}  // namespace nestplay::harness

#endif  // NESTPLAY_CONFIG_H_
