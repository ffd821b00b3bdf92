#include "nestplay/trajectory_log.h"

#include <iostream>
#include <sstream>

#include "nestplay/text_util.h"

namespace nestplay::harness {

TrajectoryLogRecord make_log_record(const std::string& run_id, int iteration,
                                    int episode, const tasks::Trajectory& t) {
  TrajectoryLogRecord r;
  r.run_id = run_id;
  r.iteration = iteration;
  r.episode = episode;
  r.env_seed = t.env_seed;
  r.sample_seed = t.sample_seed;
  r.mode = t.mode;
  r.composition = t.composition;
  r.total_max_turns = t.total_max_turns;
  for (const auto& turn : t.turns) {
    r.turns.push_back({turn.task, turn.turn_index, hex64(fnv1a64(turn.observation)),
                       turn.action_text, turn.action_index, turn.logprob,
                       turn.violation});
  }
  r.results = t.results;
  r.scalar_reward = t.scalar_reward;
  r.format_penalty = t.format_penalty;
  r.error = t.error;
  return r;
}

nlohmann::ordered_json to_json(const TrajectoryLogRecord& r) {
  nlohmann::ordered_json j;
  j["run_id"] = r.run_id;
  j["iteration"] = r.iteration;
  j["episode"] = r.episode;
  j["env_seed"] = r.env_seed;
  j["sample_seed"] = r.sample_seed;
  j["mode"] = std::string(tasks::mode_name(r.mode));
  auto comp = nlohmann::ordered_json::array();
  for (auto t : r.composition) comp.push_back(std::string(tasks::task_name(t)));
  j["composition"] = comp;
  j["total_max_turns"] = r.total_max_turns;
  auto turns = nlohmann::ordered_json::array();
  for (const auto& t : r.turns) {
    turns.push_back({{"task", std::string(tasks::task_name(t.task))},
                     {"turn", t.turn_index},
                     {"observation_digest", t.observation_digest},
                     {"action", t.action},
                     {"action_index", t.action_index},
                     {"logprob", t.logprob},
                     {"violation", t.violation}});
  }
  j["turns"] = turns;
  auto results = nlohmann::ordered_json::array();
  auto sub = nlohmann::ordered_json::object();
  for (const auto& s : r.results) {
    results.push_back({{"task", std::string(tasks::task_name(s.task))},
                       {"reward", s.reward},
                       {"violation", s.violation},
                       {"outcome", s.outcome},
                       {"detail", s.detail}});
    sub[std::string(tasks::task_name(s.task))] = s.reward;
  }
  j["results"] = results;
  j["sub_rewards"] = sub;
  j["scalar_reward"] = r.scalar_reward;
  j["format_penalty"] = r.format_penalty;
  j["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json();
  return j;
}

TrajectoryLogRecord record_from_json(const nlohmann::json& j) {
  TrajectoryLogRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.iteration = j.at("iteration").get<int>();
  r.episode = j.at("episode").get<int>();
  r.env_seed = j.at("env_seed").get<std::uint64_t>();
  r.sample_seed = j.at("sample_seed").get<std::uint64_t>();
  r.mode = tasks::parse_mode(j.at("mode").get<std::string>());
  for (const auto& t : j.at("composition")) {
    r.composition.push_back(tasks::parse_task_id(t.get<std::string>()));
  }
  r.total_max_turns = j.at("total_max_turns").get<int>();
  for (const auto& t : j.at("turns")) {
    LoggedTurn lt;
    lt.task = tasks::parse_task_id(t.at("task").get<std::string>());
    lt.turn_index = t.at("turn").get<int>();
    lt.observation_digest = t.at("observation_digest").get<std::string>();
    lt.action = t.at("action").get<std::string>();
    lt.action_index = t.at("action_index").get<std::size_t>();
    lt.logprob = t.at("logprob").get<double>();
    lt.violation = t.at("violation").get<bool>();
    r.turns.push_back(std::move(lt));
  }
  for (const auto& s : j.at("results")) {
    tasks::SubTaskResult res;
    res.task = tasks::parse_task_id(s.at("task").get<std::string>());
    res.reward = s.at("reward").get<double>();
    res.violation = s.at("violation").get<bool>();
    res.outcome = s.at("outcome").get<std::string>();
    res.detail = s.at("detail");
    r.results.push_back(std::move(res));
  }
  r.scalar_reward = j.at("scalar_reward").get<double>();
  r.format_penalty = j.at("format_penalty").get<bool>();
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  return r;
}

void write_trajectory_log(const std::vector<TrajectoryLogRecord>& records,
                          const std::string& path) {
  TrajectoryLogWriter w(path);
  for (const auto& r : records) w.append(r);
}

std::vector<TrajectoryLogRecord> read_trajectory_log(const std::string& path,
                                                     std::string* warning) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TrajectoryLogError("cannot open trajectory log: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();

  std::vector<TrajectoryLogRecord> out;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos < data.size()) {
    ++lineno;
    const auto nl = data.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string line = data.substr(pos, terminated ? nl - pos : std::string::npos);
    pos = terminated ? nl + 1 : data.size();
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      if (!terminated) {
        const std::string msg = path + ":" + std::to_string(lineno) +
                                ": dropping truncated final record";
        if (warning) {
          *warning = msg;
        } else {
          std::cerr << "warning: " << msg << '\n';
        }
        break;
      }
      throw TrajectoryLogError(path + ":" + std::to_string(lineno) +
                               ": corrupt record: " + e.what());
    }
  }
  return out;
}

TrajectoryLogWriter::TrajectoryLogWriter(const std::string& path, bool append)
    : path_(path),
      out_(path, append ? std::ios::binary | std::ios::app
                        : std::ios::binary | std::ios::trunc) {
  if (!out_) throw TrajectoryLogError("cannot write trajectory log: " + path);
}

void TrajectoryLogWriter::append(const TrajectoryLogRecord& r) {
  out_ << to_json(r).dump() << '\n';
  out_.flush();
  if (!out_) throw TrajectoryLogError("write failed: " + path_);
}

}  // namespace nestplay::harness
