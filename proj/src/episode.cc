#include <algorithm>
#include <map>

#include "nestplay/errors.h"
#include "nestplay/tasks.h"
#include "nestplay/text_util.h"

namespace nestplay::tasks {
namespace {

constexpr std::uint64_t kMixedStream = 0x6d69786564;

std::string separator(TaskId t) {
  return "### Task: " + std::string(task_name(t)) + "\n";
}

class Recorder {
 public:
  Recorder(const grpo::Policy& policy, Trajectory& traj)
      : policy_(policy), traj_(traj) {}

  TurnRecord& take_turn(TaskId task, const std::string& prompt,
                        std::vector<std::string> actions, Rng& rng) {
    TurnRecord r;
    r.task = task;
    r.turn_index = static_cast<int>(traj_.turns.size());
    r.observation = separator(task) + prompt;
    r.actions = std::move(actions);
    r.observation_key = grpo::observation_key(r.observation, r.actions);
    const auto draw = policy_.act(r.observation, r.actions, rng);
    r.action_index = draw.index;
    r.logprob = draw.logprob;
    r.action_text = r.actions.at(draw.index);
    traj_.turns.push_back(std::move(r));
    return traj_.turns.back();
  }

 private:
  const grpo::Policy& policy_;
  Trajectory& traj_;
};

int pick_template(int configured, int count, Rng& rng) {
  return configured >= 0 ? configured
                         : static_cast<int>(uniform_index(rng, static_cast<std::size_t>(count)));
}

SubTaskResult run_arith(const ArithOptions& opts, Recorder& rec, Rng& env,
                        Rng& sample) {
  const auto task = arith_task(env, opts);
  auto& turn = rec.take_turn(TaskId::kArith, task.prompt, task.options, sample);
  SubTaskResult res{TaskId::kArith, 0.0, false, "", nlohmann::json::object()};
  if (!last_integer(turn.action_text)) {
    turn.violation = true;
    res.violation = true;
    res.outcome = "unparseable";
    return res;
  }
  res.reward = task.verifier(turn.action_text);
  res.outcome = res.reward > 0 ? "correct" : "wrong";
  res.detail = {{"prompt", task.prompt}};
  return res;
}

SubTaskResult run_matrix(const MatrixOptions& opts, const TaskResources& resources,
                         Recorder& rec, Rng& env, Rng& sample) {
  std::vector<const matrix::PayoffMatrix*> pool;
  if (opts.games.empty()) {
    for (const auto& g : resources.games) pool.push_back(&g);
  } else {
    for (const auto& name : opts.games) {
      const auto it = std::find_if(resources.games.begin(), resources.games.end(),
                                   [&](const auto& g) { return g.name() == name; });
      if (it == resources.games.end()) {
        throw std::invalid_argument("unknown matrix game '" + name + "'");
      }
      pool.push_back(&*it);
    }
  }
  if (pool.empty()) throw std::invalid_argument("no matrix games available");

  const auto& base = *pool[uniform_index(env, pool.size())];
  matrix::TransformSpec t;
  if (opts.random_transform) {
    constexpr int kOffsets[] = {-100, 0, 100};
    const int sign = uniform_index(env, 2) == 0 || !opts.sign_flip ? 1 : -1;
    t = matrix::TransformSpec(sign, kOffsets[uniform_index(env, 3)]);
  }
  const auto role = opts.role ? *opts.role
                              : (uniform_index(env, 2) == 0 ? matrix::PlayerRole::kP1
                                                            : matrix::PlayerRole::kP2);
  const int tpl = pick_template(opts.template_id, matrix::kMatrixTemplateCount, env);
  const auto game = matrix::transform_payoffs(base, t);
  const auto prompt = matrix::render_matrix_prompt(game, tpl, role, env());

  auto& turn = rec.take_turn(TaskId::kMatrix, prompt, game.actions(role), sample);
  SubTaskResult res{TaskId::kMatrix, 0.0, false, "", nlohmann::json::object()};
  res.detail = {{"game", game.name()},
                {"role", std::string(matrix::role_name(role))},
                {"sign", t.sign},
                {"offset", t.offset}};
  const auto idx = matrix::parse_matrix_action(game, role, turn.action_text);
  if (!idx) {
    turn.violation = true;
    res.violation = true;
    res.outcome = "unparseable";
    return res;
  }
  res.reward = matrix::score_matrix_action(game, role, *idx);
  res.outcome = res.reward > 0 ? "nash" : "not_nash";
  res.detail["action"] = turn.action_text;
  return res;
}

std::vector<std::string> cell_actions() {
  std::vector<std::string> out;
  for (int c = 0; c < ttt::kCells; ++c) out.push_back(std::to_string(c));
  return out;
}

SubTaskResult run_tictactoe(const TicTacToeOptions& opts,
                            const OpponentSuite& opponents, Recorder& rec,
                            Rng& env, Rng& sample) {
  const ttt::Mark trained = uniform_index(env, 2) == 0 ? ttt::Mark::kO : ttt::Mark::kX;
  const ttt::Mark first = uniform_index(env, 2) == 0 ? ttt::Mark::kO : ttt::Mark::kX;
  const int tpl = pick_template(opts.template_id, ttt::kBoardTemplateCount, env);
  if (!opponents.tictactoe) throw std::invalid_argument("no tictactoe opponent");
  auto opponent = opponents.tictactoe();

  SubTaskResult res{TaskId::kTicTacToe, 0.0, false, "", nlohmann::json::object()};
  res.detail = {{"trained_mark", std::string(1, ttt::glyph(trained))},
                {"first_mover", std::string(1, ttt::glyph(first))},
                {"opponent", opponent->name()}};
  ttt::Board b(first);
  std::vector<int> moves;
  while (ttt::check_winner(b) == ttt::Outcome::kOngoing) {
    if (b.to_move() == trained) {
      const auto prompt =
          ttt::render_board_prompt(b, tpl, opts.include_win_conditions, trained);
      auto& turn = rec.take_turn(TaskId::kTicTacToe, prompt, cell_actions(), sample);
      const auto cell = last_integer(turn.action_text);
      if (!cell || *cell < 0 || *cell >= ttt::kCells ||
          b.at(static_cast<int>(*cell)) != ttt::Cell::kEmpty) {
        turn.violation = true;
        res.violation = true;
        res.outcome = "illegal";
        res.detail["moves"] = moves;
        return res;
      }
      b = ttt::apply_move(b, static_cast<int>(*cell));
      moves.push_back(static_cast<int>(*cell));
    } else {
      int cell = -1;
      try {
        cell = opponent->choose_move(b, sample);
        b = ttt::apply_move(b, cell);
      } catch (const OpponentFailure&) {
        throw;
      } catch (const std::exception& e) {
        throw OpponentFailure("tictactoe opponent " + opponent->name() +
                              " failed: " + e.what());
      }
      moves.push_back(cell);
    }
  }
  const auto outcome = ttt::check_winner(b);
  res.reward = ttt::score_tictactoe(outcome, trained);
  res.outcome = res.reward == 1.0 ? "win" : (res.reward == 0.5 ? "draw" : "loss");
  res.detail["moves"] = moves;
  res.detail["final"] = ttt::board_text(b);
  return res;
}

std::vector<std::string> vote_actions(int player) {
  std::vector<std::string> out;
  for (int p = 0; p < spy::kPlayers; ++p) {
    if (p != player) out.push_back(spy::player_label(p));
  }
  return out;
}

SubTaskResult run_spy(const SpyOptions& opts, const OpponentSuite& opponents,
                      const TaskResources& resources, Recorder& rec, Rng& env,
                      Rng& sample) {
  if (!resources.lexicon) throw std::invalid_argument("spy needs a lexicon");
  if (!opponents.spy) throw std::invalid_argument("no spy opponents");
  const auto& lexicon = *resources.lexicon;
  auto pair = lexicon.pairs()[uniform_index(env, lexicon.pairs().size())];
  if (uniform_index(env, 2) == 1) std::swap(pair.civilian_word, pair.undercover_word);
  const int tpl = pick_template(opts.template_id, spy::kSpyTemplateCount, env);
  auto m = spy::new_match(pair, spy::kPlayers - 1, env());
  const int me = m.trained_player();

  std::map<int, std::unique_ptr<spy::Agent>> agents;
  for (int p = 0; p < spy::kPlayers; ++p) {
    if (p != me) agents[p] = opponents.spy(m.role(p), sample());
  }

  SubTaskResult res{TaskId::kSpy, 0.0, false, "", nlohmann::json::object()};
  auto finish_violation = [&](TurnRecord& turn, const char* why) {
    turn.violation = true;
    res.violation = true;
    res.outcome = why;
    res.detail = spy::match_record(m);
    return res;
  };

  try {
    while (m.phase() == spy::Phase::kDescribe) {
      const int speaker = m.current_speaker();
      if (speaker == me) {
        const auto prompt = spy::render_spy_prompt(m, me, tpl, opts.diversity_hint);
        auto& turn = rec.take_turn(TaskId::kSpy, prompt,
                                   spy::description_candidates(lexicon, m.word_of(me)),
                                   sample);
        if (trim(turn.action_text).empty() ||
            contains_ci(turn.action_text, m.word_of(me))) {
          return finish_violation(turn, "rule_violation");
        }
        m = spy::submit_description(m, me, turn.action_text);
      } else {
        const auto text = agents.at(speaker)->describe(spy::view_for(m, speaker));
        m = spy::submit_description(m, speaker, text);
      }
    }

    spy::VoteSheet votes{};
    for (int p = 0; p < spy::kPlayers; ++p) {
      if (p == me) {
        const auto prompt = spy::render_spy_prompt(m, me, tpl, opts.diversity_hint);
        auto& turn = rec.take_turn(TaskId::kSpy, prompt, vote_actions(me), sample);
        const auto target = spy::parse_vote(turn.action_text);
        if (!target || *target == me || *target < 0 || *target >= spy::kPlayers) {
          return finish_violation(turn, "invalid_vote");
        }
        votes[static_cast<std::size_t>(p)] = *target;
      } else {
        votes[static_cast<std::size_t>(p)] = agents.at(p)->vote(spy::view_for(m, p));
      }
    }
    m = spy::tally_votes(m, votes);
  } catch (const OpponentFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw OpponentFailure(std::string("spy opponent failed: ") + e.what());
  }

  res.reward = spy::score_spy(m, me);
  res.outcome = std::string(spy::side_name(*m.winner()));
  res.detail = spy::match_record(m);
  return res;
}

SubTaskResult run_subtask(const SubTaskSpec& spec, const OpponentSuite& opponents,
                          const TaskResources& resources, Recorder& rec, Rng& env,
                          Rng& sample) {
  return std::visit(
      [&](const auto& o) -> SubTaskResult {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ArithOptions>) {
          return run_arith(o, rec, env, sample);
        } else if constexpr (std::is_same_v<T, MatrixOptions>) {
          return run_matrix(o, resources, rec, env, sample);
        } else if constexpr (std::is_same_v<T, TicTacToeOptions>) {
          return run_tictactoe(o, opponents, rec, env, sample);
        } else {
          return run_spy(o, opponents, resources, rec, env, sample);
        }
      },
      spec.options);
}

}  // namespace

EpisodeSeeds EpisodeSeeds::from(std::uint64_t seed) {
  return {derive_seed(seed, 1), derive_seed(seed, 2)};
}

std::vector<double> Trajectory::sub_rewards() const {
  std::vector<double> out;
  for (const auto& r : results) out.push_back(r.reward);
  return out;
}

std::optional<double> Trajectory::reward_of(TaskId t) const {
  for (const auto& r : results) {
    if (r.task == t) return r.reward;
  }
  return std::nullopt;
}

std::string Trajectory::context() const {
  std::string out;
  for (const auto& t : turns) {
    out += t.observation;
    out += "\n\n>>> ";
    out += t.action_text;
    out += "\n\n";
  }
  return out;
}

Trajectory run_episode(const TaskComposition& c, const grpo::Policy& policy,
                       const OpponentSuite& opponents,
                       const TaskResources& resources, EpisodeSeeds seeds) {
  Trajectory traj;
  traj.mode = c.mode();
  traj.composition = c.task_ids();
  traj.total_max_turns = c.total_max_turns();
  traj.env_seed = seeds.env_seed;
  traj.sample_seed = seeds.sample_seed;

  std::vector<const SubTaskSpec*> plan;
  if (c.mode() == CompositionMode::kMixed) {
    Rng pick(derive_seed(seeds.env_seed, kMixedStream));
    plan.push_back(&sample_mixed_task(c, pick));
  } else {
    for (const auto& s : c.tasks()) plan.push_back(&s);
  }

  Recorder rec(policy, traj);
  // Seeds depend on which task runs and how often it already ran, never on
  // its position, so reordering a nest replays every sub-task identically.
  std::map<TaskId, std::uint64_t> occurrence;
  try {
    for (const auto* spec : plan) {
      const auto stream = static_cast<std::uint64_t>(spec->task_id) + 1;
      const auto n = occurrence[spec->task_id]++;
      Rng env(derive_seed(seeds.env_seed, stream, n));
      Rng sample(derive_seed(seeds.sample_seed, stream, n));
      const std::size_t before = traj.turns.size();
      auto res = run_subtask(*spec, opponents, resources, rec, env, sample);
      if (traj.turns.size() - before > static_cast<std::size_t>(spec->max_turns)) {
        throw std::logic_error(std::string(task_name(spec->task_id)) +
                               " exceeded its turn budget");
      }
      if (res.violation) res.reward = 0.0;
      traj.format_penalty = traj.format_penalty || res.violation;
      traj.results.push_back(std::move(res));
    }
  } catch (const OpponentFailure& e) {
    traj.error = e.what();
    traj.format_penalty = false;
    traj.scalar_reward = 0.0;
    return traj;
  }

  const auto rewards = traj.sub_rewards();
  double r = 0.0;
  if (c.mode() == CompositionMode::kMixed) {
    r = rewards.front();
  } else if (c.reward_rule() == RewardRule::kStrictAnd) {
    r = strict_and_reward(rewards);
  } else {
    r = nested_reward(rewards);
  }
  if (traj.format_penalty) r += kFormatPenalty;
  traj.scalar_reward = r;
  return traj;
}

Trajectory run_episode(const TaskComposition& c, const grpo::Policy& policy,
                       const OpponentSuite& opponents,
                       const TaskResources& resources, std::uint64_t seed) {
  return run_episode(c, policy, opponents, resources, EpisodeSeeds::from(seed));
}

}  // namespace nestplay::tasks
