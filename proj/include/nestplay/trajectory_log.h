#ifndef NESTPLAY_TRAJECTORY_LOG_H_
#define NESTPLAY_TRAJECTORY_LOG_H_

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nestplay/tasks.h"

namespace nestplay::harness {

struct LoggedTurn {
  tasks::TaskId task = tasks::TaskId::kArith;
  int turn_index = 0;
  // FNV-1a digest of the observation text, as 16 hex digits.
  std::string observation_digest;
  std::string action;
  std::size_t action_index = 0;
  double logprob = 0.0;
  bool violation = false;
  bool operator==(const LoggedTurn&) const = default;
};

struct TrajectoryLogRecord {
  std::string run_id;
  int iteration = 0;
  int episode = 0;
  std::uint64_t env_seed = 0;
  std::uint64_t sample_seed = 0;
  tasks::CompositionMode mode = tasks::CompositionMode::kNested;
  std::vector<tasks::TaskId> composition;
  int total_max_turns = 0;
  std::vector<LoggedTurn> turns;
  std::vector<tasks::SubTaskResult> results;
  double scalar_reward = 0.0;
  bool format_penalty = false;
  std::optional<std::string> error;
  bool operator==(const TrajectoryLogRecord&) const = default;
};

TrajectoryLogRecord make_log_record(const std::string& run_id, int iteration,
                                    int episode, const tasks::Trajectory& t);

nlohmann::ordered_json to_json(const TrajectoryLogRecord& r);
TrajectoryLogRecord record_from_json(const nlohmann::json& j);

class TrajectoryLogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Truncates `path` and writes one record per line.
void write_trajectory_log(const std::vector<TrajectoryLogRecord>& records,
                          const std::string& path);

// A truncated final line (no newline, unparseable) is dropped with a warning
// stored in *warning (and printed to stderr when warning is null). Any other
// bad line is a TrajectoryLogError naming its line number.
std::vector<TrajectoryLogRecord> read_trajectory_log(const std::string& path,
                                                     std::string* warning = nullptr);

// Append-only writer; each append is flushed as a complete line.
class TrajectoryLogWriter {
 public:
  explicit TrajectoryLogWriter(const std::string& path, bool append = false);
  void append(const TrajectoryLogRecord& r);

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace nestplay::harness

#endif  // NESTPLAY_TRAJECTORY_LOG_H_
