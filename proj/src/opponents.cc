#include <cstdlib>
#include <filesystem>

#include "nestplay/tasks.h"

namespace nestplay::tasks {

std::string default_data_dir() {
  if (const char* env = std::getenv("NESTPLAY_DATA_DIR"); env && *env) return env;
  return NESTPLAY_DEFAULT_DATA_DIR;
}

TaskResources TaskResources::load(const std::string& data_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(data_dir);
  TaskResources r;
  const auto games_path = dir / "canonical_games.jsonl";
  r.games = fs::exists(games_path) ? matrix::load_games(games_path.string())
                                   : matrix::build_canonical_games();
  r.lexicon = std::make_shared<const spy::Lexicon>(spy::Lexicon::load(
      (dir / "spy_words.tsv").string(), (dir / "spy_attributes.tsv").string()));
  return r;
}

TaskResources TaskResources::defaults() { return load(default_data_dir()); }

OpponentSuite OpponentSuite::scripted(std::shared_ptr<const spy::Lexicon> lexicon,
                                      double ttt_epsilon) {
  OpponentSuite s;
  s.tictactoe = [ttt_epsilon]() -> std::unique_ptr<ttt::Opponent> {
    return std::make_unique<ttt::EpsilonMinimaxOpponent>(ttt_epsilon);
  };
  s.spy = [lexicon](spy::Role role, std::uint64_t seed) {
    const auto kind = role == spy::Role::kUndercover
                          ? spy::AgentKind::kEvasiveUndercover
                          : spy::AgentKind::kKeywordCivilian;
    return spy::scripted_spy_agent(kind, seed, lexicon);
  };
  return s;
}

grpo::ActionDraw MinimaxPolicy::act(std::string_view text,
                                    std::span<const std::string> actions,
                                    Rng& rng) const {
  if (actions.empty()) throw std::invalid_argument("no actions to choose from");
  // The board is the last part of the observation; nested contexts put
  // earlier sub-tasks in front of it.
  const auto pos = text.rfind("## Current Game State");
  if (pos != std::string_view::npos) {
    try {
      const auto state = ttt::parse_board_prompt(text.substr(pos));
      if (ttt::check_winner(state.board) == ttt::Outcome::kOngoing) {
        const auto best = ttt::minimax_move(state.board, state.mark);
        const std::string label = std::to_string(best.cell);
        for (std::size_t i = 0; i < actions.size(); ++i) {
          if (actions[i] == label) return {i, 0.0};
        }
      }
    } catch (const std::exception&) {
      // Not a board we can read; fall through to a uniform pick.
    }
  }
  return grpo::UniformPolicy().act(text, actions, rng);
}

}  // namespace nestplay::tasks
