#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "nestplay/config.h"
#include "nestplay/evaluation.h"
#include "nestplay/remote_agent.h"
#include "nestplay/trajectory_log.h"
#include "nestplay/training.h"

namespace {

using namespace nestplay;
using namespace nestplay::harness;
namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nestplay_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// An HTTP stub on a free local port, serving one POST route.
class StubServer {
 public:
  explicit StubServer(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  RemoteEndpoint endpoint() const {
    RemoteEndpoint e;
    e.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    e.model = "stub-model";
    e.timeout_ms = 2000;
    e.retries = 2;
    e.backoff_ms = 1;
    return e;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string reply_with(const std::string& content) {
  return nlohmann::json{{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}}
      .dump();
}

const std::vector<ChatMessage> kFixtureMessages{
    {"system", "You are playing TicTacToe."}, {"user", "Board:\n. . .\nYour move?"}};

// ---- configuration ----

TEST(Config, MinimalEvalGetsDefaults) {
  const auto cfg = parse_config_text("mode: eval\ntask: matrix\n");
  EXPECT_EQ(cfg.mode, RunMode::kEval);
  EXPECT_EQ(cfg.eval_rounds, 100);
  ASSERT_EQ(cfg.tasks.size(), 1u);
  EXPECT_EQ(cfg.tasks[0].task_id, tasks::TaskId::kMatrix);
  EXPECT_EQ(cfg.trainer.group_size, 16);
  EXPECT_EQ(cfg.trainer.iterations, 250);
  EXPECT_EQ(cfg.trainer.clip_low, 0.2);
  EXPECT_EQ(cfg.trainer.clip_high, 0.28);
  EXPECT_EQ(cfg.trainer.entropy_coef, 0.001);
  EXPECT_EQ(cfg.trainer.gae_gamma, 1.0);
  EXPECT_EQ(cfg.trainer.gae_lambda, 1.0);
  EXPECT_EQ(cfg.trainer.filter_keep_fraction, 0.25);
}

TEST(Config, SchemaErrorsNameTheLine) {
  try {
    parse_config_text("mode: train\ntask: arith\ntrainer:\n  group_size: 0\n", "bad.yaml");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bad.yaml:4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("group_size"), std::string::npos) << msg;
  }
  EXPECT_THROW(parse_config_text("mode: eval\ntask: arith\ncolour: blue\n"), ConfigError);
  EXPECT_THROW(parse_config_text("mode: eval\ntask: chess\n"), ConfigError);
  EXPECT_THROW(parse_config_text("mode: eval\ntask: arith\neval_rounds: 0\n"), ConfigError);
  EXPECT_THROW(parse_config_text("mode: eval\n"), ConfigError);
  EXPECT_THROW(parse_config_text("mode: [unclosed\n"), ConfigError);
  EXPECT_THROW(parse_config("/nonexistent/config.yaml"), ConfigError);
}

TEST(Config, EmitThenParseIsIdentity) {
  const std::string text = R"(mode: train
run_id: rt
seed: 99
workers: 3
composition:
  mode: nested
  tasks: [arith, matrix, tictactoe, spy]
  reward_rule: strict_and
task_options:
  arith: {max_operand: 20, choices: 3, pool_size: 0}
  matrix: {games: ["Prisoner's Dilemma", "Stag Hunt"], sign_flip: false, role: P2, template: 1}
  tictactoe: {win_conditions: false}
  spy: {diversity_hint: false, template: 2}
trainer:
  learning_rate: 0.1
  clip_high: 0.3
  update_epochs: 2
opponents:
  tictactoe: {kind: remote, endpoint: "http://127.0.0.1:9/v1/chat/completions", model: m, retries: 1}
  spy: {kind: scripted}
policy: {kind: uniform}
)";
  const auto cfg = parse_config_text(text);
  const auto again = parse_config_text(emit_config(cfg));
  EXPECT_EQ(again, cfg);
  EXPECT_EQ(emit_config(again), emit_config(cfg));
}

TEST(Config, FileOnDisk) {
  const auto dir = temp_dir("config");
  std::ofstream(dir / "c.yaml") << "mode: eval\ntask: spy\neval_rounds: 7\n";
  EXPECT_EQ(parse_config((dir / "c.yaml").string()).eval_rounds, 7);
}

// ---- trajectory log ----

std::vector<TrajectoryLogRecord> sample_records(int n) {
  const auto res = tasks::TaskResources::defaults();
  const auto opp = tasks::OpponentSuite::scripted(res.lexicon);
  const auto comp = tasks::TaskComposition::of(
      tasks::CompositionMode::kNested,
      {tasks::TaskId::kArith, tasks::TaskId::kMatrix, tasks::TaskId::kTicTacToe, tasks::TaskId::kSpy});
  const grpo::UniformPolicy uniform;
  std::vector<TrajectoryLogRecord> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(make_log_record("log", i / 4, i, tasks::run_episode(comp, uniform, opp, res, static_cast<std::uint64_t>(i))));
  }
  out.back().error = "opponent failed";
  return out;
}

TEST(TrajectoryLog, RoundTrip) {
  const auto dir = temp_dir("log_rt");
  const auto records = sample_records(12);
  write_trajectory_log(records, (dir / "t.jsonl").string());
  std::string warning;
  EXPECT_EQ(read_trajectory_log((dir / "t.jsonl").string(), &warning), records);
  EXPECT_TRUE(warning.empty());
  const auto j = to_json(records[0]);
  for (const char* key : {"run_id", "iteration", "env_seed", "composition", "turns", "sub_rewards",
                          "scalar_reward"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(TrajectoryLog, EmptyList) {
  const auto dir = temp_dir("log_empty");
  write_trajectory_log({}, (dir / "e.jsonl").string());
  EXPECT_EQ(read_file(dir / "e.jsonl"), "");
  EXPECT_TRUE(read_trajectory_log((dir / "e.jsonl").string()).empty());
}

TEST(TrajectoryLog, CorruptMiddleLineIsAnError) {
  const auto dir = temp_dir("log_corrupt");
  const auto path = (dir / "c.jsonl").string();
  write_trajectory_log(sample_records(3), path);
  auto text = read_file(path);
  const auto first_end = text.find('\n');
  text.insert(first_end + 1, "{\"run_id\": broken\n");
  std::ofstream(path, std::ios::binary) << text;
  try {
    read_trajectory_log(path);
    FAIL() << "expected TrajectoryLogError";
  } catch (const TrajectoryLogError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(TrajectoryLog, TruncatedTailIsDroppedWithWarning) {
  const auto dir = temp_dir("log_tail");
  const auto path = (dir / "t.jsonl").string();
  const auto records = sample_records(3);
  write_trajectory_log(records, path);
  std::ofstream(path, std::ios::app | std::ios::binary) << "{\"run_id\":\"log\",\"itera";
  std::string warning;
  const auto back = read_trajectory_log(path, &warning);
  EXPECT_EQ(back, records);
  EXPECT_FALSE(warning.empty());
}

TEST(TrajectoryLog, WriterAppends) {
  const auto dir = temp_dir("log_writer");
  const auto path = (dir / "w.jsonl").string();
  const auto records = sample_records(4);
  {
    TrajectoryLogWriter w(path);
    w.append(records[0]);
    w.append(records[1]);
  }
  {
    TrajectoryLogWriter w(path, true);
    w.append(records[2]);
    w.append(records[3]);
  }
  EXPECT_EQ(read_trajectory_log(path), records);
}

// ---- remote agent ----

TEST(Remote, RequestAndResponseFixturesAreBitExact) {
  const std::string dir = NESTPLAY_FIXTURES_DIR;
  EXPECT_EQ(chat_request_body("stub-model", kFixtureMessages), read_file(dir + "/chat_request.json"));
  EXPECT_EQ(parse_chat_response(read_file(dir + "/chat_response.json")), "MOVE 4");
  EXPECT_THROW(parse_chat_response("{\"choices\": []}"), RemoteMalformedBody);
  EXPECT_THROW(parse_chat_response("<html>"), RemoteMalformedBody);
}

TEST(Remote, EchoStub) {
  const std::string response = read_file(std::string(NESTPLAY_FIXTURES_DIR) + "/chat_response.json");
  std::string seen;
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    seen = req.body;
    res.set_content(response, "application/json");
  });
  ExchangeLog log;
  EXPECT_EQ(remote_agent_act(stub.endpoint(), kFixtureMessages, &log), "MOVE 4");
  EXPECT_EQ(seen, read_file(std::string(NESTPLAY_FIXTURES_DIR) + "/chat_request.json"));
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log.entries()[0].status, 200);
  EXPECT_EQ(log.entries()[0].response_body, response);
}

TEST(Remote, RetriesServerErrors) {
  std::atomic<int> calls{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = 500;
      res.set_content("busy", "text/plain");
      return;
    }
    res.set_content(reply_with("MOVE 4"), "application/json");
  });
  ExchangeLog log;
  EXPECT_EQ(remote_agent_act(stub.endpoint(), kFixtureMessages, &log), "MOVE 4");
  const auto entries = log.entries();
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[0].status, 500);
  EXPECT_EQ(entries[1].status, 500);
  EXPECT_EQ(entries[2].status, 200);
  EXPECT_EQ(entries[2].attempt, 3);
}

TEST(Remote, TimeoutAfterConfiguredAttempts) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(reply_with("late"), "application/json");
  });
  auto ep = stub.endpoint();
  ep.timeout_ms = 100;
  ep.retries = 1;
  ExchangeLog log;
  EXPECT_THROW(remote_agent_act(ep, kFixtureMessages, &log), RemoteTimeout);
  EXPECT_EQ(log.size(), 2u);
}

TEST(Remote, ClientErrorsAndBadBodiesAreNotRetried) {
  std::atomic<int> calls{0};
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    if (req.body.find("bad-request") != std::string::npos) {
      res.status = 400;
      return;
    }
    res.set_content("{\"nothing\": true}", "application/json");
  });
  ExchangeLog log;
  try {
    remote_agent_act(stub.endpoint(), {{"user", "bad-request"}}, &log);
    FAIL() << "expected RemoteHttpStatus";
  } catch (const RemoteHttpStatus& e) {
    EXPECT_EQ(e.status(), 400);
  }
  EXPECT_THROW(remote_agent_act(stub.endpoint(), {{"user", "x"}}, &log), RemoteMalformedBody);
  EXPECT_EQ(calls.load(), 2);
}

TEST(Remote, UnreachableEndpointIsAConnectionError) {
  // Nothing listens on port 1, so the connect is refused.
  const int port = 1;
  RemoteEndpoint ep;
  ep.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  ep.model = "none";
  ep.retries = 1;
  ep.backoff_ms = 1;
  ep.timeout_ms = 500;
  ExchangeLog log;
  EXPECT_THROW(remote_agent_act(ep, kFixtureMessages, &log), RemoteConnectionError);
  EXPECT_EQ(log.size(), 2u);
}

TEST(Remote, TicTacToeOpponentPlaysTheRepliedCell) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.set_content(reply_with("MOVE 4"), "application/json");
  });
  RemoteTicTacToeOpponent opp(stub.endpoint());
  Rng rng(1);
  EXPECT_EQ(opp.choose_move(ttt::Board(ttt::Mark::kX), rng), 4);
  const auto taken = ttt::apply_move(ttt::Board(ttt::Mark::kX), 4);
  EXPECT_THROW(opp.choose_move(taken, rng), OpponentFailure);
}

TEST(Remote, FailingEndpointAbortsEvalRoundsInsteadOfCrashing) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  RunConfig cfg;
  cfg.tasks = {tasks::SubTaskSpec::make(tasks::TaskId::kTicTacToe)};
  cfg.eval_rounds = 6;
  cfg.tictactoe_opponent.kind = OpponentSpec::Kind::kRemote;
  cfg.tictactoe_opponent.remote = stub.endpoint();
  cfg.tictactoe_opponent.remote.retries = 0;
  cfg.policy.kind = PolicySpec::Kind::kUniform;
  const auto res = load_resources(cfg);
  const auto out = evaluate(cfg, *make_policy(cfg.policy).policy, res, make_opponents(cfg, res));
  const auto& r = out.report.task(tasks::TaskId::kTicTacToe);
  EXPECT_EQ(r.rounds, 6);
  EXPECT_EQ(r.errors + r.completed, 6);
  EXPECT_GT(r.errors, 0);
  ASSERT_EQ(out.records.size(), 6u);
  for (const auto& rec : out.records) {
    if (rec.error) {
      EXPECT_EQ(rec.scalar_reward, 0.0);
    }
  }
}

// ---- evaluation ----

RunConfig eval_config(tasks::TaskId t, PolicySpec::Kind policy, int rounds) {
  RunConfig cfg;
  cfg.mode = RunMode::kEval;
  cfg.tasks = {tasks::SubTaskSpec::make(t)};
  cfg.policy.kind = policy;
  cfg.eval_rounds = rounds;
  cfg.seed = 2025;
  return cfg;
}

TEST(Eval, DeterministicAcrossRunsAndWorkerCounts) {
  auto cfg = eval_config(tasks::TaskId::kArith, PolicySpec::Kind::kUniform, 40);
  cfg.tasks = {tasks::SubTaskSpec::make(tasks::TaskId::kArith), tasks::SubTaskSpec::make(tasks::TaskId::kMatrix),
               tasks::SubTaskSpec::make(tasks::TaskId::kTicTacToe), tasks::SubTaskSpec::make(tasks::TaskId::kSpy)};
  const auto dir1 = temp_dir("eval1"), dir2 = temp_dir("eval2");
  cfg.output_dir = dir1.string();
  const auto a = run_eval(cfg);
  cfg.output_dir = dir2.string();
  cfg.workers = 4;
  const auto b = run_eval(cfg);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.records, b.records);
  for (const char* f : {"report.json", "report.csv", "eval_trajectories.jsonl"}) {
    EXPECT_EQ(read_file(dir1 / f), read_file(dir2 / f)) << f;
  }
}

TEST(Eval, MinimaxBeatsRandomOpponent) {
  auto cfg = eval_config(tasks::TaskId::kTicTacToe, PolicySpec::Kind::kMinimax, 100);
  cfg.tictactoe_opponent.kind = OpponentSpec::Kind::kRandom;
  const auto out = run_eval(cfg, false);
  const auto& r = out.report.task(tasks::TaskId::kTicTacToe);
  EXPECT_EQ(r.completed, 100);
  EXPECT_GE(r.success_rate, 0.80);
  EXPECT_EQ(r.loss_rate, 0.0);
  EXPECT_EQ(r.losses, 0);
  EXPECT_NEAR(r.mean_reward, (r.wins + 0.5 * r.draws) / 100.0, 1e-12);
}

TEST(Eval, UniformPolicyOnPrisonersDilemma) {
  auto cfg = eval_config(tasks::TaskId::kMatrix, PolicySpec::Kind::kUniform, 100);
  std::get<tasks::MatrixOptions>(cfg.tasks[0].options).games = {"Prisoner's Dilemma"};
  const auto out = run_eval(cfg, false);
  EXPECT_NEAR(out.report.task(tasks::TaskId::kMatrix).success_rate, 0.5, 0.15);
}

// Rates recomputed from the log with an independent success rule.
TEST(Eval, ReportArithmeticMatchesLog) {
  auto cfg = eval_config(tasks::TaskId::kArith, PolicySpec::Kind::kUniform, 60);
  cfg.tasks = {tasks::SubTaskSpec::make(tasks::TaskId::kArith), tasks::SubTaskSpec::make(tasks::TaskId::kMatrix),
               tasks::SubTaskSpec::make(tasks::TaskId::kTicTacToe), tasks::SubTaskSpec::make(tasks::TaskId::kSpy)};
  const auto dir = temp_dir("eval_arith");
  cfg.output_dir = dir.string();
  const auto out = run_eval(cfg);
  const auto logged = read_trajectory_log((dir / "eval_trajectories.jsonl").string());
  ASSERT_EQ(logged.size(), 240u);
  for (const auto t : tasks::kAllTasks) {
    int completed = 0, successes = 0;
    double reward = 0;
    for (const auto& rec : logged) {
      if (rec.composition[0] != t || rec.error) continue;
      ++completed;
      const auto& res = rec.results.at(0);
      reward += res.reward;
      successes += t == tasks::TaskId::kTicTacToe ? res.outcome == "win" : res.reward == 1.0;
    }
    const auto& r = out.report.task(t);
    EXPECT_EQ(r.completed, completed);
    EXPECT_EQ(r.successes, successes);
    EXPECT_DOUBLE_EQ(r.success_rate, successes / static_cast<double>(completed));
    EXPECT_NEAR(r.mean_reward, reward / completed, 1e-12);
  }
  const auto csv = read_file(dir / "report.csv");
  EXPECT_EQ(csv.rfind("task,rounds,completed", 0), 0u);
  const auto j = nlohmann::json::parse(read_file(dir / "report.json"));
  EXPECT_EQ(j["tasks"].size(), 4u);
}

// ---- training plumbing ----

TEST(Train, DeterministicOutputsAndCsvColumns) {
  RunConfig cfg;
  cfg.mode = RunMode::kTrain;
  cfg.composition_mode = tasks::CompositionMode::kNested;
  cfg.tasks = {tasks::SubTaskSpec::make(tasks::TaskId::kArith), tasks::SubTaskSpec::make(tasks::TaskId::kMatrix)};
  cfg.trainer.iterations = 5;
  cfg.trainer.groups_per_iteration = 4;
  cfg.snapshot_every = 5;
  const auto d1 = temp_dir("train1"), d2 = temp_dir("train2");
  cfg.output_dir = d1.string();
  const auto a = run_training(cfg);
  cfg.output_dir = d2.string();
  cfg.workers = 3;
  const auto b = run_training(cfg);
  EXPECT_EQ(a.params, b.params);
  for (const char* f : {"metrics.csv", "policy.txt", "trajectories.jsonl", "policy_iter_5.txt"}) {
    EXPECT_EQ(read_file(d1 / f), read_file(d2 / f)) << f;
  }
  EXPECT_EQ(grpo::PolicyParams::load_file((d1 / "policy.txt").string()), a.params);
  const auto csv = read_file(d1 / "metrics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), metrics_csv_header());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(read_trajectory_log((d1 / "trajectories.jsonl").string()).size(), 5u * 4u * 16u);
  auto first = cfg;
  first.output_dir = d1.string();
  first.workers = 1;
  EXPECT_EQ(parse_config((d1 / "config.yaml").string()), first);
}

TEST(Train, RolloutSeedsShareEnvWithinAGroup) {
  const auto a = rollout_seeds(1, 3, 2, 0), b = rollout_seeds(1, 3, 2, 5), c = rollout_seeds(1, 3, 1, 0);
  EXPECT_EQ(a.env_seed, b.env_seed);
  EXPECT_NE(a.sample_seed, b.sample_seed);
  EXPECT_NE(a.env_seed, c.env_seed);
}

}  // namespace
