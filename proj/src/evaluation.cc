#include "nestplay/evaluation.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nestplay/parallel.h"

namespace nestplay::harness {
namespace {

constexpr std::uint64_t kEvalStream = 0x6576616c;

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << std::fixed << v;
  return s.str();
}

}  // namespace

tasks::TaskResources load_resources(const RunConfig& cfg) {
  return tasks::TaskResources::load(cfg.data_dir.empty() ? tasks::default_data_dir()
                                                          : cfg.data_dir);
}

tasks::OpponentSuite make_opponents(const RunConfig& cfg,
                                    const tasks::TaskResources& resources,
                                    std::shared_ptr<ExchangeLog> log) {
  using K = OpponentSpec::Kind;
  tasks::OpponentSuite s = tasks::OpponentSuite::scripted(resources.lexicon);

  const auto& t = cfg.tictactoe_opponent;
  switch (t.kind) {
    case K::kRandom:
      s.tictactoe = [] { return std::unique_ptr<ttt::Opponent>(new ttt::RandomOpponent); };
      break;
    case K::kMinimax:
      s.tictactoe = [] { return std::unique_ptr<ttt::Opponent>(new ttt::MinimaxOpponent); };
      break;
    case K::kMinimaxEps: {
      const double eps = t.epsilon;
      s.tictactoe = [eps] {
        return std::unique_ptr<ttt::Opponent>(new ttt::EpsilonMinimaxOpponent(eps));
      };
      break;
    }
    case K::kRemote: {
      const auto ep = t.remote;
      s.tictactoe = [ep, log] {
        return std::unique_ptr<ttt::Opponent>(new RemoteTicTacToeOpponent(ep, log));
      };
      break;
    }
    case K::kScripted:
      throw ConfigError("scripted is not a tictactoe opponent");
  }

  const auto& sp = cfg.spy_opponent;
  if (sp.kind == K::kRandom) {
    auto lexicon = resources.lexicon;
    s.spy = [lexicon](spy::Role, std::uint64_t seed) {
      return spy::scripted_spy_agent(spy::AgentKind::kRandomVoter, seed, lexicon);
    };
  } else if (sp.kind == K::kRemote) {
    const auto ep = sp.remote;
    s.spy = [ep, log](spy::Role, std::uint64_t) {
      return std::unique_ptr<spy::Agent>(new RemoteSpyAgent(ep, log));
    };
  }
  return s;
}

PolicyHandle make_policy(const PolicySpec& spec) {
  PolicyHandle h;
  switch (spec.kind) {
    case PolicySpec::Kind::kSoftmax:
      h.params = std::make_shared<grpo::PolicyParams>(
          spec.snapshot.empty() ? grpo::PolicyParams{}
                                : grpo::PolicyParams::load_file(spec.snapshot));
      h.policy = std::make_unique<grpo::SoftmaxPolicy>(*h.params);
      break;
    case PolicySpec::Kind::kUniform:
      h.policy = std::make_unique<grpo::UniformPolicy>();
      break;
    case PolicySpec::Kind::kMinimax:
      h.policy = std::make_unique<tasks::MinimaxPolicy>();
      break;
  }
  return h;
}

std::uint64_t eval_seed(std::uint64_t base, tasks::TaskId task, int round) {
  return derive_seed(base, kEvalStream, static_cast<std::uint64_t>(task) + 1,
                     static_cast<std::uint64_t>(round));
}

const TaskReport& EvalReport::task(tasks::TaskId t) const {
  for (const auto& r : tasks) {
    if (r.task == t) return r;
  }
  throw std::out_of_range("report has no task " + std::string(tasks::task_name(t)));
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["policy"] = policy;
  j["seed"] = seed;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : tasks) {
    nlohmann::ordered_json t;
    t["task"] = std::string(tasks::task_name(r.task));
    t["rounds"] = r.rounds;
    t["completed"] = r.completed;
    t["errors"] = r.errors;
    t["successes"] = r.successes;
    t["success_rate"] = r.success_rate;
    t["mean_reward"] = r.mean_reward;
    if (r.task == tasks::TaskId::kTicTacToe) {
      t["strict_win_rate"] = r.success_rate;
      t["wins"] = r.wins;
      t["draws"] = r.draws;
      t["losses"] = r.losses;
      t["draw_rate"] = r.draw_rate;
      t["loss_rate"] = r.loss_rate;
    }
    t["violations"] = r.violations;
    t["violation_rate"] = r.violation_rate;
    arr.push_back(t);
  }
  j["tasks"] = arr;
  return j;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "task,rounds,completed,errors,successes,success_rate,mean_reward,"
         "wins,draws,losses,draw_rate,loss_rate,violations,violation_rate\n";
  for (const auto& r : tasks) {
    out << tasks::task_name(r.task) << ',' << r.rounds << ',' << r.completed << ','
        << r.errors << ',' << r.successes << ',' << fmt(r.success_rate) << ','
        << fmt(r.mean_reward) << ',' << r.wins << ',' << r.draws << ',' << r.losses
        << ',' << fmt(r.draw_rate) << ',' << fmt(r.loss_rate) << ',' << r.violations
        << ',' << fmt(r.violation_rate) << '\n';
  }
  return out.str();
}

std::vector<TaskReport> summarize_records(const std::vector<TrajectoryLogRecord>& records) {
  std::vector<TaskReport> out;
  auto slot = [&](tasks::TaskId t) -> TaskReport& {
    for (auto& r : out) {
      if (r.task == t) return r;
    }
    out.push_back({});
    out.back().task = t;
    return out.back();
  };
  for (const auto& rec : records) {
    if (rec.composition.size() != 1) {
      throw std::invalid_argument("evaluation records must hold a single task");
    }
    auto& r = slot(rec.composition.front());
    ++r.rounds;
    if (rec.error || rec.results.empty()) {
      ++r.errors;
      continue;
    }
    const auto& res = rec.results.front();
    ++r.completed;
    r.mean_reward += res.reward;
    if (res.violation) ++r.violations;
    if (res.task == tasks::TaskId::kTicTacToe) {
      if (res.outcome == "win") ++r.wins;
      if (res.outcome == "draw") ++r.draws;
      if (res.outcome == "loss") ++r.losses;
      if (res.outcome == "win") ++r.successes;
    } else if (res.reward == 1.0) {
      ++r.successes;
    }
  }
  for (auto& r : out) {
    if (r.completed == 0) continue;
    const double n = r.completed;
    r.mean_reward /= n;
    r.success_rate = r.successes / n;
    r.draw_rate = r.draws / n;
    r.loss_rate = r.losses / n;
    r.violation_rate = r.violations / n;
  }
  return out;
}

EvalOutput evaluate(const RunConfig& cfg, const grpo::Policy& policy,
                    const tasks::TaskResources& resources,
                    const tasks::OpponentSuite& opponents) {
  std::vector<tasks::TaskComposition> single;
  std::set<tasks::TaskId> seen;
  for (const auto& spec : cfg.tasks) {
    if (!seen.insert(spec.task_id).second) continue;
    single.emplace_back(tasks::CompositionMode::kMixed,
                        std::vector<tasks::SubTaskSpec>{spec});
  }
  const auto rounds = static_cast<std::size_t>(cfg.eval_rounds);
  std::vector<tasks::Trajectory> trajs(single.size() * rounds);
  parallel_for(trajs.size(), cfg.workers, [&](std::size_t i) {
    const auto& comp = single[i / rounds];
    const int round = static_cast<int>(i % rounds);
    trajs[i] = tasks::run_episode(comp, policy, opponents, resources,
                                  eval_seed(cfg.seed, comp.tasks()[0].task_id, round));
  });

  EvalOutput out;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    out.records.push_back(make_log_record(cfg.run_id, 0, static_cast<int>(i), trajs[i]));
  }
  out.report.run_id = cfg.run_id;
  out.report.policy = policy.name();
  out.report.seed = cfg.seed;
  out.report.tasks = summarize_records(out.records);
  return out;
}

EvalOutput run_eval(const RunConfig& cfg, bool write_outputs) {
  cfg.validate();
  const auto resources = load_resources(cfg);
  auto exchanges = std::make_shared<ExchangeLog>();
  const auto opponents = make_opponents(cfg, resources, exchanges);
  const auto handle = make_policy(cfg.policy);
  auto out = evaluate(cfg, *handle.policy, resources, opponents);

  if (write_outputs) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    write_text(dir / "report.json", out.report.to_json().dump(2) + "\n");
    write_text(dir / "report.csv", out.report.to_csv());
    write_trajectory_log(out.records, (dir / "eval_trajectories.jsonl").string());
    if (exchanges->size() > 0) {
      std::ofstream ex(dir / "remote_exchanges.jsonl", std::ios::binary | std::ios::trunc);
      for (const auto& e : exchanges->entries()) {
        ex << nlohmann::ordered_json{{"attempt", e.attempt},
                                     {"request", e.request_body},
                                     {"status", e.status},
                                     {"response", e.response_body},
                                     {"error", e.error}}
                  .dump()
           << '\n';
      }
    }
  }
  return out;
}

}  // namespace nestplay::harness
