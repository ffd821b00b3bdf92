#include "nestplay/grpo.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace nestplay::grpo {
namespace {

// Below this spread the rewards count as constant and advantages are zero.
constexpr double kStdFloor = 1e-12;
// A perturbation of h in one logit moves a ratio by about r*h, so anything
// this close to a clip bound may cross it during central differencing.
constexpr double kKinkTolerance = 1e-4;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("trainer config: " + what);
}

std::vector<double> softmax(std::span<const double> z) {
  auto lp = log_softmax(z);
  for (auto& v : lp) v = std::exp(v);
  return lp;
}

bool surrogate_active(double r, double a, const TrainerConfig& cfg) {
  if (a > 0) return r <= 1.0 + cfg.clip_high;
  if (a < 0) return r >= 1.0 - cfg.clip_low;
  return false;
}

bool clipped(double r, double a, const TrainerConfig& cfg) {
  return a != 0.0 && !surrogate_active(r, a, cfg);
}

std::size_t total_trajectories(std::span<const GroupBatch> groups) {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.trajectories.size();
  return n;
}

}  // namespace

void TrainerConfig::validate() const {
  require(group_size >= 2, "group_size must be at least 2");
  require(clip_low > 0 && clip_low <= clip_high && clip_high < 1,
          "clip bounds must satisfy 0 < clip_low <= clip_high < 1");
  require(entropy_coef >= 0, "entropy_coef must be non-negative");
  require(learning_rate > 0, "learning_rate must be positive");
  require(adam_beta1 >= 0 && adam_beta1 < 1, "adam_beta1 must be in [0, 1)");
  require(adam_beta2 >= 0 && adam_beta2 < 1, "adam_beta2 must be in [0, 1)");
  require(adam_epsilon > 0, "adam_epsilon must be positive");
  require(gae_gamma > 0 && gae_gamma <= 1, "gae_gamma must be in (0, 1]");
  require(gae_lambda >= 0 && gae_lambda <= 1, "gae_lambda must be in [0, 1]");
  require(filter_keep_fraction > 0 && filter_keep_fraction <= 1,
          "filter_keep_fraction must be in (0, 1]");
  require(iterations >= 1 && iterations <= kMaxIterations,
          "iterations must be in [1, " + std::to_string(kMaxIterations) + "]");
  require(groups_per_iteration >= 1, "groups_per_iteration must be positive");
  require(update_epochs >= 1, "update_epochs must be positive");
}

std::vector<double> normalize_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("advantage normalization needs at least 2 rewards");
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd <= kStdFloor * std::max(1.0, std::abs(mean))) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

GroupBatch make_group(std::vector<TrajectorySample> trajectories) {
  GroupBatch g;
  g.trajectories = std::move(trajectories);
  for (const auto& t : g.trajectories) g.rewards.push_back(t.reward);
  g.advantages = normalize_advantages(g.rewards);
  return g;
}

std::vector<double> gae(std::span<const double> rewards,
                        std::span<const double> values, double gamma,
                        double lambda) {
  if (values.size() != rewards.size() + 1) {
    throw std::invalid_argument("gae needs one more value than rewards");
  }
  std::vector<double> adv(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    const double delta = rewards[t] + gamma * values[t + 1] - values[t];
    running = delta + gamma * lambda * running;
    adv[t] = running;
  }
  return adv;
}

std::vector<double> turn_advantages(double trajectory_advantage,
                                    std::size_t turns, double gamma,
                                    double lambda) {
  if (gamma == 1.0 && lambda == 1.0) {
    return std::vector<double>(turns, trajectory_advantage);
  }
  if (turns == 0) return {};
  std::vector<double> rewards(turns, 0.0);
  rewards.back() = trajectory_advantage;
  const std::vector<double> values(turns + 1, 0.0);
  return gae(rewards, values, gamma, lambda);
}

double clipped_surrogate(double ratio, double advantage, double clip_low,
                         double clip_high) {
  if (!(ratio > 0)) throw std::invalid_argument("ratio must be positive");
  const double c = std::clamp(ratio, 1.0 - clip_low, 1.0 + clip_high);
  return std::min(ratio * advantage, c * advantage);
}

double reward_variance(const GroupBatch& g) {
  if (g.rewards.empty()) return 0.0;
  const double n = static_cast<double>(g.rewards.size());
  const double mean = std::accumulate(g.rewards.begin(), g.rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : g.rewards) var += (r - mean) * (r - mean);
  return var / n;
}

std::vector<GroupBatch> filter_groups(const std::vector<GroupBatch>& groups,
                                      double keep_fraction) {
  if (groups.empty()) return {};
  if (!(keep_fraction > 0 && keep_fraction <= 1)) {
    throw std::invalid_argument("keep_fraction must be in (0, 1]");
  }
  const auto keep = static_cast<std::size_t>(
      std::ceil(keep_fraction * static_cast<double>(groups.size()) - 1e-12));
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> var;
  for (const auto& g : groups) var.push_back(reward_variance(g));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return var[a] > var[b]; });
  order.resize(std::min(keep, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<GroupBatch> out;
  for (auto i : order) out.push_back(groups[i]);
  return out;
}

ObjectiveValue grpo_objective(const PolicyParams& p,
                              std::span<const GroupBatch> groups,
                              const TrainerConfig& cfg, bool with_gradient) {
  ObjectiveValue out;
  const std::size_t n = total_trajectories(groups);
  if (n == 0) return out;
  std::size_t turn_count = 0;
  std::size_t clipped_count = 0;

  for (const auto& g : groups) {
    if (g.advantages.size() != g.trajectories.size()) {
      throw std::invalid_argument("group advantages do not match trajectories");
    }
    for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
      const auto& traj = g.trajectories[i];
      if (traj.turns.empty()) continue;
      const double w = 1.0 / (static_cast<double>(n) *
                              static_cast<double>(traj.turns.size()));
      const auto adv = turn_advantages(g.advantages[i], traj.turns.size(),
                                       cfg.gae_gamma, cfg.gae_lambda);
      for (std::size_t t = 0; t < traj.turns.size(); ++t) {
        const auto& turn = traj.turns[t];
        const auto z = p.logits(turn.key, turn.num_actions);
        const auto lp = log_softmax(z);
        if (turn.action >= lp.size()) throw UnknownAction("turn action out of range");
        const double r = std::exp(lp[turn.action] - turn.old_logprob);
        const double a = adv[t];
        double h = 0.0;
        for (double l : lp) h -= std::exp(l) * l;

        out.surrogate += w * clipped_surrogate(r, a, cfg.clip_low, cfg.clip_high);
        out.entropy += w * h;
        ++turn_count;
        if (clipped(r, a, cfg)) ++clipped_count;

        if (!with_gradient) continue;
        auto& grad = out.gradient[turn.key];
        if (grad.empty()) grad.assign(turn.num_actions, 0.0);
        const auto pi = softmax(z);
        const bool active = surrogate_active(r, a, cfg);
        for (std::size_t j = 0; j < pi.size(); ++j) {
          double gj = 0.0;
          if (active) {
            gj += a * r * ((j == turn.action ? 1.0 : 0.0) - pi[j]);
          }
          gj += cfg.entropy_coef * (-pi[j] * (lp[j] + h));
          grad[j] += w * gj;
        }
      }
    }
  }
  out.total = out.surrogate + cfg.entropy_coef * out.entropy;
  out.clip_fraction = turn_count == 0 ? 0.0
                                      : static_cast<double>(clipped_count) /
                                            static_cast<double>(turn_count);
  return out;
}

double visited_entropy(const PolicyParams& p,
                       std::span<const GroupBatch> groups) {
  std::map<std::uint64_t, std::size_t> seen;
  for (const auto& g : groups) {
    for (const auto& t : g.trajectories) {
      for (const auto& turn : t.turns) seen.emplace(turn.key, turn.num_actions);
    }
  }
  if (seen.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [key, n] : seen) sum += policy_entropy(p, key, n);
  return sum / static_cast<double>(seen.size());
}

StepResult train_step(const PolicyParams& p, AdamState& adam,
                      const std::vector<GroupBatch>& groups,
                      const TrainerConfig& cfg) {
  StepResult res{p, {}};
  auto& m = res.metrics;

  double reward_sum = 0.0;
  std::size_t reward_n = 0;
  for (const auto& g : groups) {
    for (double r : g.rewards) {
      reward_sum += r;
      ++reward_n;
    }
  }
  m.mean_reward = reward_n ? reward_sum / static_cast<double>(reward_n) : 0.0;
  m.policy_entropy = visited_entropy(p, groups);

  for (const auto& g : groups) {
    for (const auto& t : g.trajectories) {
      for (const auto& turn : t.turns) res.params.ensure(turn.key, turn.num_actions);
    }
  }

  const auto kept = filter_groups(groups, cfg.filter_keep_fraction);
  m.kept_group_count = static_cast<int>(kept.size());
  if (kept.empty()) {
    m.skipped = true;
    return res;
  }

  const auto obj = grpo_objective(res.params, kept, cfg, true);
  m.clip_fraction = obj.clip_fraction;
  double sq = 0.0;
  for (const auto& [_, g] : obj.gradient) {
    for (double v : g) sq += v * v;
  }
  m.gradient_norm = std::sqrt(sq);

  ++adam.step;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.step));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.step));
  for (auto& [key, theta] : res.params.table()) {
    auto& mk = adam.m[key];
    auto& vk = adam.v[key];
    if (mk.size() != theta.size()) mk.assign(theta.size(), 0.0);
    if (vk.size() != theta.size()) vk.assign(theta.size(), 0.0);
    const auto git = obj.gradient.find(key);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double g = git == obj.gradient.end() ? 0.0 : git->second[j];
      mk[j] = cfg.adam_beta1 * mk[j] + (1.0 - cfg.adam_beta1) * g;
      vk[j] = cfg.adam_beta2 * vk[j] + (1.0 - cfg.adam_beta2) * g * g;
      const double mhat = mk[j] / bc1;
      const double vhat = vk[j] / bc2;
      theta[j] += cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
  }
  return res;
}

namespace {

PolicyParams with_visited(const PolicyParams& p,
                          std::span<const GroupBatch> groups) {
  PolicyParams q = p;
  for (const auto& g : groups) {
    for (const auto& t : g.trajectories) {
      for (const auto& turn : t.turns) q.ensure(turn.key, turn.num_actions);
    }
  }
  if (q.parameter_count() > 10000) {
    throw std::invalid_argument("too many parameters for finite differences");
  }
  return q;
}

}  // namespace

Gradient finite_difference_gradient(const PolicyParams& p,
                                    std::span<const GroupBatch> groups,
                                    const TrainerConfig& cfg) {
  PolicyParams q = with_visited(p, groups);
  const double h = kFiniteDifferenceStep;
  Gradient out;
  for (auto& [key, theta] : q.table()) {
    auto& g = out[key];
    g.assign(theta.size(), 0.0);
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double saved = theta[j];
      theta[j] = saved + h;
      const double up = grpo_objective(q, groups, cfg, false).total;
      theta[j] = saved - h;
      const double down = grpo_objective(q, groups, cfg, false).total;
      theta[j] = saved;
      g[j] = (up - down) / (2.0 * h);
    }
  }
  return out;
}

double finite_difference_check(const PolicyParams& p,
                               std::span<const GroupBatch> groups,
                               const TrainerConfig& cfg) {
  const PolicyParams q = with_visited(p, groups);
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
      if (g.advantages.at(i) == 0.0) continue;
      for (const auto& turn : g.trajectories[i].turns) {
        const double r =
            std::exp(policy_logprob(q, turn.key, turn.num_actions, turn.action) -
                     turn.old_logprob);
        if (std::abs(r - (1.0 + cfg.clip_high)) < kKinkTolerance ||
            std::abs(r - (1.0 - cfg.clip_low)) < kKinkTolerance) {
          throw NonDifferentiablePoint("ratio " + std::to_string(r) +
                                       " sits on a clip boundary");
        }
      }
    }
  }

  const auto analytic = grpo_objective(q, groups, cfg, true).gradient;
  const auto numeric = finite_difference_gradient(q, groups, cfg);
  double worst = 0.0;
  for (const auto& [key, fd] : numeric) {
    const auto it = analytic.find(key);
    for (std::size_t j = 0; j < fd.size(); ++j) {
      const double ga = it == analytic.end() ? 0.0 : it->second[j];
      worst = std::max(worst, std::abs(ga - fd[j]) / (std::abs(fd[j]) + 1e-8));
    }
  }
  return worst;
}

}  // namespace nestplay::grpo
