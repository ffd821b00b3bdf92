#include "nestplay/config.h"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace nestplay::harness {
namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    std::ostringstream out;
    out << source_;
    if (at.IsDefined() && at.Mark().line >= 0) {
      out << ':' << at.Mark().line + 1 << ':' << at.Mark().column + 1;
    }
    out << ": " << msg;
    throw ConfigError(out.str());
  }

  void require_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a mapping");
  }

  void allow_keys(const YAML::Node& n, const std::set<std::string>& keys,
                  const std::string& what) const {
    require_map(n, what);
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!keys.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  template <typename T>
  T get(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "bad value '" + n.Scalar() + "' for " + what);
    }
  }

  template <typename T>
  void maybe(const YAML::Node& parent, const char* key, T& out,
             const std::string& what) const {
    const auto n = parent[key];
    if (n) out = get<T>(n, what + "." + key);
  }

 private:
  std::string source_;
};

std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, r.ptr);
  // Keep a decimal point so the value reads back as a float.
  if (s.find_first_of(".e") == std::string::npos && s != "inf" && s != "-inf" &&
      s != "nan") {
    s += ".0";
  }
  return s;
}

OpponentSpec::Kind parse_opponent_kind(const Reader& r, const YAML::Node& n) {
  const auto s = r.get<std::string>(n, "opponent kind");
  if (s == "random") return OpponentSpec::Kind::kRandom;
  if (s == "minimax") return OpponentSpec::Kind::kMinimax;
  if (s == "minimax_eps") return OpponentSpec::Kind::kMinimaxEps;
  if (s == "scripted") return OpponentSpec::Kind::kScripted;
  if (s == "remote") return OpponentSpec::Kind::kRemote;
  r.fail(n, "unknown opponent kind '" + s + "'");
}

OpponentSpec parse_opponent(const Reader& r, const YAML::Node& n,
                            OpponentSpec base, const std::string& what) {
  r.allow_keys(n, {"kind", "epsilon", "endpoint", "model", "timeout_ms",
                   "retries", "backoff_ms"},
               what);
  if (n["kind"]) base.kind = parse_opponent_kind(r, n["kind"]);
  r.maybe(n, "epsilon", base.epsilon, what);
  r.maybe(n, "endpoint", base.remote.url, what);
  r.maybe(n, "model", base.remote.model, what);
  r.maybe(n, "timeout_ms", base.remote.timeout_ms, what);
  r.maybe(n, "retries", base.remote.retries, what);
  r.maybe(n, "backoff_ms", base.remote.backoff_ms, what);
  return base;
}

void apply_task_options(const Reader& r, const YAML::Node& opts,
                        std::vector<tasks::SubTaskSpec>& specs) {
  r.allow_keys(opts, {"arith", "matrix", "tictactoe", "spy"}, "task_options");
  for (auto& spec : specs) {
    const std::string name(tasks::task_name(spec.task_id));
    const auto n = opts[name];
    if (!n) continue;
    const std::string what = "task_options." + name;
    if (auto* a = std::get_if<tasks::ArithOptions>(&spec.options)) {
      r.allow_keys(n, {"max_operand", "choices", "pool_size", "pool_seed"}, what);
      r.maybe(n, "max_operand", a->max_operand, what);
      r.maybe(n, "choices", a->choices, what);
      r.maybe(n, "pool_size", a->pool_size, what);
      r.maybe(n, "pool_seed", a->pool_seed, what);
    } else if (auto* m = std::get_if<tasks::MatrixOptions>(&spec.options)) {
      r.allow_keys(n, {"games", "random_transform", "sign_flip", "role", "template"}, what);
      if (const auto g = n["games"]) {
        if (!g.IsSequence()) r.fail(g, what + ".games must be a list");
        m->games.clear();
        for (const auto& e : g) m->games.push_back(r.get<std::string>(e, what + ".games"));
      }
      r.maybe(n, "random_transform", m->random_transform, what);
      r.maybe(n, "sign_flip", m->sign_flip, what);
      if (const auto role = n["role"]) {
        const auto s = r.get<std::string>(role, what + ".role");
        if (s == "P1") {
          m->role = matrix::PlayerRole::kP1;
        } else if (s == "P2") {
          m->role = matrix::PlayerRole::kP2;
        } else if (s == "random") {
          m->role.reset();
        } else {
          r.fail(role, "role must be P1, P2 or random");
        }
      }
      r.maybe(n, "template", m->template_id, what);
    } else if (auto* t = std::get_if<tasks::TicTacToeOptions>(&spec.options)) {
      r.allow_keys(n, {"win_conditions", "template"}, what);
      r.maybe(n, "win_conditions", t->include_win_conditions, what);
      r.maybe(n, "template", t->template_id, what);
    } else if (auto* s = std::get_if<tasks::SpyOptions>(&spec.options)) {
      r.allow_keys(n, {"diversity_hint", "template"}, what);
      r.maybe(n, "diversity_hint", s->diversity_hint, what);
      r.maybe(n, "template", s->template_id, what);
    }
  }
}

tasks::TaskId parse_task(const Reader& r, const YAML::Node& n) {
  const auto s = r.get<std::string>(n, "task");
  try {
    return tasks::parse_task_id(s);
  } catch (const std::invalid_argument&) {
    r.fail(n, "unknown task '" + s + "'");
  }
}

}  // namespace

std::string_view run_mode_name(RunMode m) {
  return m == RunMode::kTrain ? "train" : "eval";
}

std::string_view opponent_kind_name(OpponentSpec::Kind k) {
  switch (k) {
    case OpponentSpec::Kind::kRandom: return "random";
    case OpponentSpec::Kind::kMinimax: return "minimax";
    case OpponentSpec::Kind::kMinimaxEps: return "minimax_eps";
    case OpponentSpec::Kind::kScripted: return "scripted";
    case OpponentSpec::Kind::kRemote: return "remote";
  }
  return "?";
}

std::string_view policy_kind_name(PolicySpec::Kind k) {
  switch (k) {
    case PolicySpec::Kind::kSoftmax: return "softmax";
    case PolicySpec::Kind::kUniform: return "uniform";
    case PolicySpec::Kind::kMinimax: return "minimax";
  }
  return "?";
}

tasks::TaskComposition RunConfig::composition() const {
  return tasks::TaskComposition(composition_mode, tasks, reward_rule);
}

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  check(version == kConfigVersion, "unsupported version " + std::to_string(version));
  check(!run_id.empty(), "run_id must not be empty");
  check(!tasks.empty(), "at least one task is required");
  check(eval_rounds >= 1, "eval_rounds must be at least 1");
  check(workers >= 1, "workers must be at least 1");
  check(snapshot_every >= 0, "snapshot_every must be non-negative");
  try {
    trainer.validate();
    for (const auto& t : tasks) t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto* o : {&tictactoe_opponent, &spy_opponent}) {
    check(o->epsilon >= 0 && o->epsilon <= 1, "opponent epsilon must be in [0, 1]");
    if (o->kind == OpponentSpec::Kind::kRemote) {
      check(!o->remote.url.empty() && !o->remote.model.empty(),
            "remote opponents need endpoint and model");
      check(o->remote.timeout_ms > 0 && o->remote.retries >= 0 &&
                o->remote.backoff_ms >= 0,
            "remote timeout/retries/backoff out of range");
    }
  }
  using K = OpponentSpec::Kind;
  const auto tk = tictactoe_opponent.kind;
  check(tk == K::kRandom || tk == K::kMinimax || tk == K::kMinimaxEps || tk == K::kRemote,
        "tictactoe opponent must be random, minimax, minimax_eps or remote");
  const auto sk = spy_opponent.kind;
  check(sk == K::kScripted || sk == K::kRandom || sk == K::kRemote,
        "spy opponent must be scripted, random or remote");
}

RunConfig parse_config_text(const std::string& text, const std::string& source_name) {
  const Reader r(source_name);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source_name + ":" + std::to_string(e.mark.line + 1) + ":" +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source_name + ": config must be a mapping");
  r.allow_keys(root,
               {"version", "mode", "run_id", "seed", "eval_rounds", "workers",
                "output_dir", "data_dir", "snapshot_every", "task", "composition",
                "task_options", "trainer", "opponents", "policy"},
               "config");

  RunConfig cfg;
  r.maybe(root, "version", cfg.version, "config");
  if (cfg.version != kConfigVersion) {
    r.fail(root["version"], "unsupported config version " + std::to_string(cfg.version));
  }
  if (!root["mode"]) r.fail(root, "missing required key 'mode'");
  const auto mode = r.get<std::string>(root["mode"], "mode");
  if (mode == "train") {
    cfg.mode = RunMode::kTrain;
  } else if (mode == "eval") {
    cfg.mode = RunMode::kEval;
  } else {
    r.fail(root["mode"], "mode must be train or eval");
  }
  r.maybe(root, "run_id", cfg.run_id, "config");
  r.maybe(root, "seed", cfg.seed, "config");
  r.maybe(root, "eval_rounds", cfg.eval_rounds, "config");
  r.maybe(root, "workers", cfg.workers, "config");
  r.maybe(root, "output_dir", cfg.output_dir, "config");
  r.maybe(root, "data_dir", cfg.data_dir, "config");
  r.maybe(root, "snapshot_every", cfg.snapshot_every, "config");

  if (root["task"] && root["composition"]) {
    r.fail(root["task"], "give either 'task' or 'composition', not both");
  }
  if (const auto t = root["task"]) {
    cfg.tasks.push_back(tasks::SubTaskSpec::make(parse_task(r, t)));
  } else if (const auto c = root["composition"]) {
    r.allow_keys(c, {"mode", "tasks", "reward_rule"}, "composition");
    if (const auto m = c["mode"]) {
      try {
        cfg.composition_mode = tasks::parse_mode(r.get<std::string>(m, "composition.mode"));
      } catch (const std::invalid_argument& e) {
        r.fail(m, e.what());
      }
    }
    if (const auto rr = c["reward_rule"]) {
      try {
        cfg.reward_rule =
            tasks::parse_reward_rule(r.get<std::string>(rr, "composition.reward_rule"));
      } catch (const std::invalid_argument& e) {
        r.fail(rr, e.what());
      }
    }
    const auto list = c["tasks"];
    if (!list || !list.IsSequence() || list.size() == 0) {
      r.fail(list ? list : c, "composition.tasks must be a non-empty list");
    }
    for (const auto& e : list) cfg.tasks.push_back(tasks::SubTaskSpec::make(parse_task(r, e)));
  } else {
    r.fail(root, "missing 'task' or 'composition'");
  }
  if (const auto o = root["task_options"]) apply_task_options(r, o, cfg.tasks);

  if (const auto t = root["trainer"]) {
    auto& tc = cfg.trainer;
    r.allow_keys(t,
                 {"group_size", "clip_low", "clip_high", "entropy_coef",
                  "learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon",
                  "gae_gamma", "gae_lambda", "filter_keep_fraction", "iterations",
                  "groups_per_iteration", "update_epochs"},
                 "trainer");
    r.maybe(t, "group_size", tc.group_size, "trainer");
    r.maybe(t, "clip_low", tc.clip_low, "trainer");
    r.maybe(t, "clip_high", tc.clip_high, "trainer");
    r.maybe(t, "entropy_coef", tc.entropy_coef, "trainer");
    r.maybe(t, "learning_rate", tc.learning_rate, "trainer");
    r.maybe(t, "adam_beta1", tc.adam_beta1, "trainer");
    r.maybe(t, "adam_beta2", tc.adam_beta2, "trainer");
    r.maybe(t, "adam_epsilon", tc.adam_epsilon, "trainer");
    r.maybe(t, "gae_gamma", tc.gae_gamma, "trainer");
    r.maybe(t, "gae_lambda", tc.gae_lambda, "trainer");
    r.maybe(t, "filter_keep_fraction", tc.filter_keep_fraction, "trainer");
    r.maybe(t, "iterations", tc.iterations, "trainer");
    r.maybe(t, "groups_per_iteration", tc.groups_per_iteration, "trainer");
    r.maybe(t, "update_epochs", tc.update_epochs, "trainer");
    try {
      tc.validate();
    } catch (const std::invalid_argument& e) {
      r.fail(t, e.what());
    }
  }

  if (const auto o = root["opponents"]) {
    r.allow_keys(o, {"tictactoe", "spy"}, "opponents");
    if (o["tictactoe"]) {
      cfg.tictactoe_opponent =
          parse_opponent(r, o["tictactoe"], cfg.tictactoe_opponent, "opponents.tictactoe");
    }
    if (o["spy"]) {
      cfg.spy_opponent = parse_opponent(r, o["spy"], cfg.spy_opponent, "opponents.spy");
    }
  }

  if (const auto p = root["policy"]) {
    r.allow_keys(p, {"kind", "snapshot"}, "policy");
    if (const auto k = p["kind"]) {
      const auto s = r.get<std::string>(k, "policy.kind");
      if (s == "softmax") {
        cfg.policy.kind = PolicySpec::Kind::kSoftmax;
      } else if (s == "uniform") {
        cfg.policy.kind = PolicySpec::Kind::kUniform;
      } else if (s == "minimax") {
        cfg.policy.kind = PolicySpec::Kind::kMinimax;
      } else {
        r.fail(k, "policy kind must be softmax, uniform or minimax");
      }
    }
    r.maybe(p, "snapshot", cfg.policy.snapshot, "policy");
  }

  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string emit_config(const RunConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "version" << YAML::Value << cfg.version;
  out << YAML::Key << "mode" << YAML::Value << std::string(run_mode_name(cfg.mode));
  out << YAML::Key << "run_id" << YAML::Value << YAML::DoubleQuoted << cfg.run_id;
  out << YAML::Key << "seed" << YAML::Value << std::to_string(cfg.seed);
  out << YAML::Key << "eval_rounds" << YAML::Value << cfg.eval_rounds;
  out << YAML::Key << "workers" << YAML::Value << cfg.workers;
  out << YAML::Key << "output_dir" << YAML::Value << YAML::DoubleQuoted << cfg.output_dir;
  out << YAML::Key << "data_dir" << YAML::Value << YAML::DoubleQuoted << cfg.data_dir;
  out << YAML::Key << "snapshot_every" << YAML::Value << cfg.snapshot_every;

  out << YAML::Key << "composition" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value
      << std::string(tasks::mode_name(cfg.composition_mode));
  out << YAML::Key << "reward_rule" << YAML::Value
      << std::string(tasks::reward_rule_name(cfg.reward_rule));
  out << YAML::Key << "tasks" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& t : cfg.tasks) out << std::string(tasks::task_name(t.task_id));
  out << YAML::EndSeq << YAML::EndMap;

  // Options are per task type; the first occurrence carries them.
  std::set<tasks::TaskId> done;
  out << YAML::Key << "task_options" << YAML::Value << YAML::BeginMap;
  for (const auto& spec : cfg.tasks) {
    if (!done.insert(spec.task_id).second) continue;
    out << YAML::Key << std::string(tasks::task_name(spec.task_id)) << YAML::Value
        << YAML::BeginMap;
    if (const auto* a = std::get_if<tasks::ArithOptions>(&spec.options)) {
      out << YAML::Key << "max_operand" << YAML::Value << a->max_operand;
      out << YAML::Key << "choices" << YAML::Value << a->choices;
      out << YAML::Key << "pool_size" << YAML::Value << a->pool_size;
      out << YAML::Key << "pool_seed" << YAML::Value << std::to_string(a->pool_seed);
    } else if (const auto* m = std::get_if<tasks::MatrixOptions>(&spec.options)) {
      out << YAML::Key << "games" << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (const auto& g : m->games) out << YAML::DoubleQuoted << g;
      out << YAML::EndSeq;
      out << YAML::Key << "random_transform" << YAML::Value << m->random_transform;
      out << YAML::Key << "sign_flip" << YAML::Value << m->sign_flip;
      out << YAML::Key << "role" << YAML::Value
          << (m->role ? std::string(matrix::role_name(*m->role)) : std::string("random"));
      out << YAML::Key << "template" << YAML::Value << m->template_id;
    } else if (const auto* t = std::get_if<tasks::TicTacToeOptions>(&spec.options)) {
      out << YAML::Key << "win_conditions" << YAML::Value << t->include_win_conditions;
      out << YAML::Key << "template" << YAML::Value << t->template_id;
    } else if (const auto* s = std::get_if<tasks::SpyOptions>(&spec.options)) {
      out << YAML::Key << "diversity_hint" << YAML::Value << s->diversity_hint;
      out << YAML::Key << "template" << YAML::Value << s->template_id;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  const auto& tc = cfg.trainer;
  out << YAML::Key << "trainer" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "group_size" << YAML::Value << tc.group_size;
  out << YAML::Key << "clip_low" << YAML::Value << fmt_double(tc.clip_low);
  out << YAML::Key << "clip_high" << YAML::Value << fmt_double(tc.clip_high);
  out << YAML::Key << "entropy_coef" << YAML::Value << fmt_double(tc.entropy_coef);
  out << YAML::Key << "learning_rate" << YAML::Value << fmt_double(tc.learning_rate);
  out << YAML::Key << "adam_beta1" << YAML::Value << fmt_double(tc.adam_beta1);
  out << YAML::Key << "adam_beta2" << YAML::Value << fmt_double(tc.adam_beta2);
  out << YAML::Key << "adam_epsilon" << YAML::Value << fmt_double(tc.adam_epsilon);
  out << YAML::Key << "gae_gamma" << YAML::Value << fmt_double(tc.gae_gamma);
  out << YAML::Key << "gae_lambda" << YAML::Value << fmt_double(tc.gae_lambda);
  out << YAML::Key << "filter_keep_fraction" << YAML::Value
      << fmt_double(tc.filter_keep_fraction);
  out << YAML::Key << "iterations" << YAML::Value << tc.iterations;
  out << YAML::Key << "groups_per_iteration" << YAML::Value << tc.groups_per_iteration;
  out << YAML::Key << "update_epochs" << YAML::Value << tc.update_epochs;
  out << YAML::EndMap;

  auto emit_opponent = [&](const char* key, const OpponentSpec& o) {
    out << YAML::Key << key << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << std::string(opponent_kind_name(o.kind));
    out << YAML::Key << "epsilon" << YAML::Value << fmt_double(o.epsilon);
    out << YAML::Key << "endpoint" << YAML::Value << YAML::DoubleQuoted << o.remote.url;
    out << YAML::Key << "model" << YAML::Value << YAML::DoubleQuoted << o.remote.model;
    out << YAML::Key << "timeout_ms" << YAML::Value << o.remote.timeout_ms;
    out << YAML::Key << "retries" << YAML::Value << o.remote.retries;
    out << YAML::Key << "backoff_ms" << YAML::Value << o.remote.backoff_ms;
    out << YAML::EndMap;
  };
  out << YAML::Key << "opponents" << YAML::Value << YAML::BeginMap;
  emit_opponent("tictactoe", cfg.tictactoe_opponent);
  emit_opponent("spy", cfg.spy_opponent);
  out << YAML::EndMap;

  out << YAML::Key << "policy" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << std::string(policy_kind_name(cfg.policy.kind));
  out << YAML::Key << "snapshot" << YAML::Value << YAML::DoubleQuoted << cfg.policy.snapshot;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace nestplay::harness
