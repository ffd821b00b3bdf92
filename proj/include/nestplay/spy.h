#ifndef NESTPLAY_SPY_H_
#define NESTPLAY_SPY_H_

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nestplay/random.h"

namespace nestplay::spy {

inline constexpr int kPlayers = 4;
inline constexpr int kRounds = 2;
inline constexpr int kDescriptions = kPlayers * kRounds;

enum class Role { kCivilian, kUndercover };
enum class Side { kCivilians, kUndercover };
enum class Phase { kDescribe, kVote, kFinished };

std::string_view role_name(Role r);
std::string_view side_name(Side s);
std::string_view phase_name(Phase p);
std::string player_label(int player);

class SpyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};
class WrongPhase : public SpyError {
 public:
  using SpyError::SpyError;
};
class OutOfTurn : public SpyError {
 public:
  using SpyError::SpyError;
};
// A description that says the speaker's own word.
class RuleViolation : public SpyError {
 public:
  using SpyError::SpyError;
};
class InvalidVote : public SpyError {
 public:
  using SpyError::SpyError;
};

struct WordPair {
  std::string civilian_word;
  std::string undercover_word;

  WordPair() = default;
  WordPair(std::string civilian, std::string undercover);
  bool operator==(const WordPair&) const = default;
};

struct Description {
  int player = 0;
  int round = 0;
  std::string text;
  bool operator==(const Description&) const = default;
};

// Votes indexed by voter; each entry is the target player or -1.
using VoteSheet = std::array<int, kPlayers>;

class SpyMatch {
 public:
  const WordPair& words() const { return words_; }
  Role role(int player) const { return roles_.at(static_cast<std::size_t>(player)); }
  Side side(int player) const;
  const std::string& word_of(int player) const;
  const std::array<int, kPlayers>& speaking_order() const { return order_; }
  int trained_player() const { return trained_; }
  int undercover_player() const;
  Phase phase() const { return phase_; }
  // Valid in the describe phase.
  int round() const { return round_; }
  int current_speaker() const;
  const std::vector<Description>& transcript() const { return transcript_; }
  const VoteSheet& votes() const { return votes_; }
  std::optional<int> eliminated() const { return eliminated_; }
  std::optional<Side> winner() const { return winner_; }
  std::uint64_t seed() const { return seed_; }

  bool operator==(const SpyMatch&) const = default;

 private:
  friend SpyMatch new_match(const WordPair&, std::size_t, std::uint64_t);
  friend SpyMatch submit_description(const SpyMatch&, int, std::string_view);
  friend SpyMatch tally_votes(const SpyMatch&, const VoteSheet&);

  WordPair words_;
  std::array<Role, kPlayers> roles_{};
  std::array<int, kPlayers> order_{};
  int trained_ = 0;
  Phase phase_ = Phase::kDescribe;
  int round_ = 1;
  int turn_ = 0;  // position in speaking order
  std::vector<Description> transcript_;
  VoteSheet votes_{-1, -1, -1, -1};
  std::optional<int> eliminated_;
  std::optional<Side> winner_;
  std::uint64_t seed_ = 0;
};

// Draws the undercover seat, the trained agent's seat and the speaking order
// from `seed`. Requires three opponents to fill the other seats.
SpyMatch new_match(const WordPair& words, std::size_t opponent_count,
                   std::uint64_t seed);

SpyMatch submit_description(const SpyMatch& m, int player,
                            std::string_view text);

// Eliminates the most-voted player (ties broken by a draw seeded from the
// match seed) and adjudicates: civilians win iff the undercover is out.
SpyMatch tally_votes(const SpyMatch& m, const VoteSheet& votes);

int score_spy(const SpyMatch& m, int trained_player);

// Everything a single player may see.
struct PlayerView {
  int player = 0;
  std::string word;
  Phase phase = Phase::kDescribe;
  int round = 1;
  std::array<int, kPlayers> speaking_order{};
  std::vector<Description> transcript;
};

PlayerView view_for(const SpyMatch& m, int player);

inline constexpr int kSpyTemplateCount = 4;

class UnknownTemplate : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

std::string render_spy_prompt(const PlayerView& view, int rule_template_id,
                              bool include_diversity_hint);
std::string render_spy_prompt(const SpyMatch& m, int player,
                              int rule_template_id, bool include_diversity_hint);

// Parses "Player N" (1-based) from free text.
std::optional<int> parse_vote(std::string_view text);

// Exports the match as one structured record.
nlohmann::json match_record(const SpyMatch& m);

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string describe(const PlayerView& view) = 0;
  virtual int vote(const PlayerView& view) = 0;
};

// Runs the remaining phases of `m` with one agent per seat.
SpyMatch play_match(SpyMatch m, const std::array<Agent*, kPlayers>& seats);

// Word pairs plus a per-word attribute table used by the scripted agents.
class Lexicon {
 public:
  Lexicon(std::vector<WordPair> pairs,
          std::map<std::string, std::vector<std::string>> attributes);

  // Pairs: "civilian<TAB>undercover" per line. Attributes:
  // "word<TAB>attr1,attr2,..." per line.
  static Lexicon load(const std::string& pairs_path,
                      const std::string& attributes_path);
  static std::vector<WordPair> read_pairs(std::istream& in);

  const std::vector<WordPair>& pairs() const { return pairs_; }
  const std::vector<std::string>& attributes(const std::string& word) const;
  bool has_word(const std::string& word) const;
  // Attributes of `word` also listed for a word it is paired with.
  std::vector<std::string> shared_attributes(const std::string& word) const;

 private:
  std::vector<WordPair> pairs_;
  std::map<std::string, std::vector<std::string>> attributes_;
};

class MissingWord : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

enum class AgentKind { kKeywordCivilian, kEvasiveUndercover, kRandomVoter };

std::string_view agent_kind_name(AgentKind k);

std::unique_ptr<Agent> scripted_spy_agent(
    AgentKind kind, std::uint64_t seed,
    std::shared_ptr<const Lexicon> lexicon);

// Candidate descriptions for a word; the last entry says the word itself and
// is therefore a rule violation.
std::vector<std::string> description_candidates(const Lexicon& lexicon,
                                                const std::string& word);

// Lowercase alphanumeric tokens.
std::vector<std::string> tokens(std::string_view text);

}  // namespace nestplay::spy

#endif  // NESTPLAY_SPY_H_
