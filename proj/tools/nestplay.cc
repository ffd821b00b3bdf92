// nestplay command line: training, evaluation and small game utilities.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "nestplay/config.h"
#include "nestplay/evaluation.h"
#include "nestplay/matrix_game.h"
#include "nestplay/spy.h"
#include "nestplay/tictactoe.h"
#include "nestplay/training.h"
#include "nestplay/trajectory_log.h"

namespace {

using namespace nestplay;

struct RunFlags {
  std::string config;
  std::string task;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<int> eval_rounds;
  std::optional<int> workers;
  std::optional<int> group_size;
  std::optional<double> learning_rate;
  std::optional<std::string> output_dir;
  std::optional<std::string> run_id;
  std::optional<std::string> policy;
  std::optional<std::string> snapshot;
  bool no_log = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("-c,--config", f.config, "YAML run configuration");
  cmd->add_option("--task", f.task, "single task when no config is given");
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--iterations", f.iterations, "trainer.iterations");
  cmd->add_option("--eval-rounds", f.eval_rounds, "rounds per task");
  cmd->add_option("--workers", f.workers, "parallel workers");
  cmd->add_option("--group-size", f.group_size, "trainer.group_size");
  cmd->add_option("--learning-rate", f.learning_rate, "trainer.learning_rate");
  cmd->add_option("--output-dir", f.output_dir, "output directory");
  cmd->add_option("--run-id", f.run_id, "run identifier");
  cmd->add_option("--policy", f.policy, "softmax, uniform or minimax");
  cmd->add_option("--snapshot", f.snapshot, "policy snapshot to load");
}

harness::RunConfig resolve(const RunFlags& f, harness::RunMode mode) {
  harness::RunConfig cfg;
  if (!f.config.empty()) {
    cfg = harness::parse_config(f.config);
  } else {
    if (f.task.empty()) throw harness::ConfigError("give --config or --task");
    cfg.tasks.push_back(tasks::SubTaskSpec::make(tasks::parse_task_id(f.task)));
  }
  cfg.mode = mode;
  if (f.seed) cfg.seed = *f.seed;
  if (f.iterations) cfg.trainer.iterations = *f.iterations;
  if (f.eval_rounds) cfg.eval_rounds = *f.eval_rounds;
  if (f.workers) cfg.workers = *f.workers;
  if (f.group_size) cfg.trainer.group_size = *f.group_size;
  if (f.learning_rate) cfg.trainer.learning_rate = *f.learning_rate;
  if (f.output_dir) cfg.output_dir = *f.output_dir;
  if (f.run_id) cfg.run_id = *f.run_id;
  if (f.policy) {
    if (*f.policy == "softmax") {
      cfg.policy.kind = harness::PolicySpec::Kind::kSoftmax;
    } else if (*f.policy == "uniform") {
      cfg.policy.kind = harness::PolicySpec::Kind::kUniform;
    } else if (*f.policy == "minimax") {
      cfg.policy.kind = harness::PolicySpec::Kind::kMinimax;
    } else {
      throw harness::ConfigError("unknown policy '" + *f.policy + "'");
    }
  }
  if (f.snapshot) cfg.policy.snapshot = *f.snapshot;
  cfg.validate();
  return cfg;
}

std::string rate(double v) {
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << v;
  return s.str();
}

int cmd_train(const RunFlags& f) {
  const auto cfg = resolve(f, harness::RunMode::kTrain);
  harness::TrainOptions opts;
  opts.log_trajectories = !f.no_log;
  opts.on_iteration = [&](const harness::IterationMetrics& m) {
    if (m.iteration % 10 == 0 || m.iteration + 1 == cfg.trainer.iterations) {
      std::cout << "iter " << m.iteration << " reward " << rate(m.scalar_mean)
                << " entropy " << rate(m.step.policy_entropy) << " grad "
                << rate(m.step.gradient_norm) << '\n';
    }
  };
  harness::run_training(cfg, opts);
  std::cout << "wrote " << cfg.output_dir << "/metrics.csv and policy.txt\n";
  return 0;
}

int cmd_eval(const RunFlags& f) {
  const auto cfg = resolve(f, harness::RunMode::kEval);
  const auto out = harness::run_eval(cfg);
  for (const auto& t : out.report.tasks) {
    std::cout << tasks::task_name(t.task) << ": success " << rate(t.success_rate)
              << " mean_reward " << rate(t.mean_reward) << " completed " << t.completed
              << '/' << t.rounds;
    if (t.task == tasks::TaskId::kTicTacToe) {
      std::cout << " draws " << rate(t.draw_rate) << " losses " << rate(t.loss_rate);
    }
    std::cout << '\n';
  }
  std::cout << "wrote " << cfg.output_dir << "/report.json\n";
  return 0;
}

int cmd_nash(const std::string& path, bool iesds) {
  const auto games = matrix::load_games(path);
  for (const auto& g : games) {
    std::cout << g.name() << ":";
    const auto ne = matrix::enumerate_pure_nash(g);
    if (ne.empty()) std::cout << " no pure equilibrium";
    for (const auto& p : ne) {
      std::cout << " (" << g.row_actions()[p.row_action] << ", "
                << g.col_actions()[p.col_action] << ")";
    }
    std::cout << '\n';
    if (iesds) {
      const auto r = matrix::iesds_reduce(g);
      std::cout << "  after IESDS: rows {" ;
      for (std::size_t i = 0; i < r.rows(); ++i) {
        std::cout << (i ? ", " : "") << r.row_actions()[i];
      }
      std::cout << "} cols {";
      for (std::size_t j = 0; j < r.cols(); ++j) {
        std::cout << (j ? ", " : "") << r.col_actions()[j];
      }
      std::cout << "}\n";
    }
  }
  return 0;
}

std::unique_ptr<ttt::Opponent> make_ttt(const std::string& kind, double eps) {
  if (kind == "random") return std::make_unique<ttt::RandomOpponent>();
  if (kind == "minimax") return std::make_unique<ttt::MinimaxOpponent>();
  if (kind == "minimax_eps") return std::make_unique<ttt::EpsilonMinimaxOpponent>(eps);
  throw std::invalid_argument("unknown player kind '" + kind + "'");
}

int cmd_selfplay(int games, std::uint64_t seed, const std::string& o_kind,
                 const std::string& x_kind, double eps, bool show) {
  auto o = make_ttt(o_kind, eps);
  auto x = make_ttt(x_kind, eps);
  std::map<std::string, int> tally;
  for (int g = 0; g < games; ++g) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(g)));
    ttt::Board b(uniform_index(rng, 2) == 0 ? ttt::Mark::kO : ttt::Mark::kX);
    while (ttt::check_winner(b) == ttt::Outcome::kOngoing) {
      auto& p = b.to_move() == ttt::Mark::kO ? *o : *x;
      b = ttt::apply_move(b, p.choose_move(b, rng));
    }
    ++tally[std::string(ttt::outcome_name(ttt::check_winner(b)))];
    if (show) std::cout << ttt::board_text(b) << "\n\n";
  }
  for (const auto& [k, v] : tally) std::cout << k << ' ' << v << '\n';
  return 0;
}

int cmd_spy_sim(int matches, std::uint64_t seed, const std::string& data_dir,
                bool json) {
  auto lexicon = std::make_shared<const spy::Lexicon>(
      spy::Lexicon::load(data_dir + "/spy_words.tsv", data_dir + "/spy_attributes.tsv"));
  int civilians = 0;
  for (int i = 0; i < matches; ++i) {
    const auto s = derive_seed(seed, static_cast<std::uint64_t>(i));
    Rng rng(s);
    const auto& pair = lexicon->pairs()[uniform_index(rng, lexicon->pairs().size())];
    auto m = spy::new_match(pair, 3, s);
    std::vector<std::unique_ptr<spy::Agent>> owned;
    std::array<spy::Agent*, spy::kPlayers> seats{};
    for (int p = 0; p < spy::kPlayers; ++p) {
      const auto kind = m.role(p) == spy::Role::kUndercover
                            ? spy::AgentKind::kEvasiveUndercover
                            : spy::AgentKind::kKeywordCivilian;
      owned.push_back(spy::scripted_spy_agent(kind, derive_seed(s, p + 1), lexicon));
      seats[static_cast<std::size_t>(p)] = owned.back().get();
    }
    m = spy::play_match(m, seats);
    if (*m.winner() == spy::Side::kCivilians) ++civilians;
    if (json) std::cout << spy::match_record(m).dump() << '\n';
  }
  std::cout << "civilian wins " << civilians << '/' << matches << " ("
            << rate(static_cast<double>(civilians) / matches) << ")\n";
  return 0;
}

int cmd_export_metrics(const std::string& log_path, const std::string& out_path) {
  const auto records = harness::read_trajectory_log(log_path);
  struct Acc {
    std::array<double, 4> sum{};
    std::array<int, 4> count{};
    double scalar = 0.0;
    int episodes = 0;
    int aborted = 0;
  };
  std::map<int, Acc> by_iter;
  for (const auto& r : records) {
    auto& a = by_iter[r.iteration];
    ++a.episodes;
    a.scalar += r.scalar_reward;
    if (r.error) ++a.aborted;
    for (const auto& s : r.results) {
      const auto k = static_cast<std::size_t>(s.task);
      a.sum[k] += s.reward;
      ++a.count[k];
    }
  }
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  out << "iteration,mean_reward_arith,mean_reward_matrix,mean_reward_tictactoe,"
         "mean_reward_spy,scalar_mean,episodes,aborted\n";
  for (const auto& [it, a] : by_iter) {
    out << it;
    for (std::size_t k = 0; k < 4; ++k) {
      out << ',';
      if (a.count[k]) out << a.sum[k] / a.count[k];
    }
    out << ',' << a.scalar / a.episodes << ',' << a.episodes << ',' << a.aborted << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nestplay: multi-game RL environments and a GRPO trainer"};
  app.require_subcommand(1);

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "train a softmax policy with GRPO");
  add_run_flags(train, train_flags);
  train->add_flag("--no-log", train_flags.no_log, "skip the trajectory log");

  RunFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "run the evaluation protocol");
  add_run_flags(eval, eval_flags);

  std::string nash_file;
  bool nash_iesds = false;
  auto* nash = app.add_subcommand("nash", "list pure Nash equilibria of a game file");
  nash->add_option("matrix-file", nash_file, "JSONL game file")->required();
  nash->add_flag("--iesds", nash_iesds, "also print the IESDS reduction");

  int ttt_games = 100;
  std::uint64_t ttt_seed = 1;
  std::string ttt_o = "minimax";
  std::string ttt_x = "minimax";
  double ttt_eps = 0.2;
  bool ttt_show = false;
  auto* selfplay = app.add_subcommand("selfplay-ttt", "play TicTacToe between scripted players");
  selfplay->add_option("--games", ttt_games, "number of games");
  selfplay->add_option("--seed", ttt_seed, "base seed");
  selfplay->add_option("--o", ttt_o, "random, minimax or minimax_eps");
  selfplay->add_option("--x", ttt_x, "random, minimax or minimax_eps");
  selfplay->add_option("--epsilon", ttt_eps, "random-move rate for minimax_eps");
  selfplay->add_flag("--show", ttt_show, "print final boards");

  int spy_matches = 100;
  std::uint64_t spy_seed = 1;
  std::string spy_data = tasks::default_data_dir();
  bool spy_json = false;
  auto* spy_sim = app.add_subcommand("spy-sim", "simulate scripted Who's-the-Spy matches");
  spy_sim->add_option("--matches", spy_matches, "number of matches");
  spy_sim->add_option("--seed", spy_seed, "base seed");
  spy_sim->add_option("--data-dir", spy_data, "directory with the word lists");
  spy_sim->add_flag("--json", spy_json, "print each match record");

  std::string export_log;
  std::string export_out;
  auto* export_metrics =
      app.add_subcommand("export-metrics", "per-iteration reward CSV from a trajectory log");
  export_metrics->add_option("trajectory-log", export_log, "trajectories.jsonl")->required();
  export_metrics->add_option("-o,--out", export_out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_flags);
    if (eval->parsed()) return cmd_eval(eval_flags);
    if (nash->parsed()) return cmd_nash(nash_file, nash_iesds);
    if (selfplay->parsed()) {
      return cmd_selfplay(ttt_games, ttt_seed, ttt_o, ttt_x, ttt_eps, ttt_show);
    }
    if (spy_sim->parsed()) return cmd_spy_sim(spy_matches, spy_seed, spy_data, spy_json);
    if (export_metrics->parsed()) return cmd_export_metrics(export_log, export_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
