#ifndef NESTPLAY_GRPO_H_
#define NESTPLAY_GRPO_H_

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "nestplay/policy.h"

namespace nestplay::grpo {

struct TrainerConfig {
  int group_size = 16;
  double clip_low = 0.2;
  double clip_high = 0.28;
  double entropy_coef = 0.001;
  double learning_rate = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double gae_gamma = 1.0;
  double gae_lambda = 1.0;
  double filter_keep_fraction = 0.25;
  int iterations = 250;
  // Distinct prompts (groups) rolled out per iteration.
  int groups_per_iteration = 16;
  // Optimizer steps taken on each batch of rollouts. Beyond the first, the
  // ratios move away from 1 and clipping starts to bind.
  int update_epochs = 1;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool operator==(const TrainerConfig&) const = default;
};

inline constexpr int kMaxIterations = 250;

// One policy decision as seen by the optimizer. Each turn emits a single
// discrete action, so a turn is one "token" of the trajectory.
struct TurnSample {
  std::uint64_t key = 0;
  std::size_t num_actions = 0;
  std::size_t action = 0;
  double old_logprob = 0.0;
};

struct TrajectorySample {
  std::vector<TurnSample> turns;
  double reward = 0.0;
};

struct GroupBatch {
  std::vector<TrajectorySample> trajectories;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

// Fills rewards and normalized advantages from the trajectories.
GroupBatch make_group(std::vector<TrajectorySample> trajectories);

// (r - mean) / std with the population standard deviation; all zeros when
// the rewards are constant up to rounding.
std::vector<double> normalize_advantages(std::span<const double> rewards);

// Per-turn advantages from a trajectory-level advantage placed on the final
// turn, via the GAE recursion with zero baseline values. With
// gamma = lambda = 1 every turn receives the trajectory advantage.
std::vector<double> turn_advantages(double trajectory_advantage,
                                    std::size_t turns, double gamma,
                                    double lambda);

// General GAE over per-step rewards and values (values.size() ==
// rewards.size() + 1, last entry the bootstrap value).
std::vector<double> gae(std::span<const double> rewards,
                        std::span<const double> values, double gamma,
                        double lambda);

// min(r A, clip(r, 1 - clip_low, 1 + clip_high) A).
double clipped_surrogate(double ratio, double advantage, double clip_low,
                         double clip_high);

double reward_variance(const GroupBatch& g);

// Keeps the ceil(keep_fraction * N) groups with the highest reward variance,
// ties resolved by original position. Survivors keep their original order.
std::vector<GroupBatch> filter_groups(const std::vector<GroupBatch>& groups,
                                      double keep_fraction);

using Gradient = std::map<std::uint64_t, std::vector<double>>;

struct ObjectiveValue {
  double total = 0.0;      // surrogate + entropy_coef * entropy
  double surrogate = 0.0;
  double entropy = 0.0;    // turn-averaged entropy over the batch
  double clip_fraction = 0.0;
  Gradient gradient;       // d total / d logits; empty unless requested
};

// Trajectory-level clipped objective: mean over trajectories of the mean over
// turns, plus the entropy bonus. No KL term.
ObjectiveValue grpo_objective(const PolicyParams& p,
                              std::span<const GroupBatch> groups,
                              const TrainerConfig& cfg, bool with_gradient);

struct AdamState {
  std::map<std::uint64_t, std::vector<double>> m;
  std::map<std::uint64_t, std::vector<double>> v;
  long step = 0;

  bool operator==(const AdamState&) const = default;
};

struct StepMetrics {
  double mean_reward = 0.0;
  double policy_entropy = 0.0;
  double gradient_norm = 0.0;
  double clip_fraction = 0.0;
  int kept_group_count = 0;
  bool skipped = false;  // nothing survived filtering
};

struct StepResult {
  PolicyParams params;
  StepMetrics metrics;
};

// Filters groups, then takes one Adam ascent step on the objective.
StepResult train_step(const PolicyParams& p, AdamState& adam,
                      const std::vector<GroupBatch>& groups,
                      const TrainerConfig& cfg);

// Mean entropy over the distinct observations appearing in `groups`.
double visited_entropy(const PolicyParams& p,
                       std::span<const GroupBatch> groups);

class NonDifferentiablePoint : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;

// Central-difference gradient of the full objective over every observation
// visited by `groups`.
Gradient finite_difference_gradient(const PolicyParams& p,
                                    std::span<const GroupBatch> groups,
                                    const TrainerConfig& cfg);

// Max over parameters of |g_analytic - g_fd| / (|g_fd| + 1e-8), using central
// differences of the full objective. Throws NonDifferentiablePoint when a
// ratio sits on a clip boundary.
double finite_difference_check(const PolicyParams& p,
                               std::span<const GroupBatch> groups,
                               const TrainerConfig& cfg);

}  // namespace nestplay::grpo

#endif  // NESTPLAY_GRPO_H_
