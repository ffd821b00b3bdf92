#include "nestplay/spy.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nestplay/text_util.h"

namespace nestplay::spy {
namespace {

void check_player(int player) {
  if (player < 0 || player >= kPlayers) {
    throw std::out_of_range("player index " + std::to_string(player));
  }
}

std::string rule_prompt(int template_id) {
  switch (template_id) {
    case 0:
      return "Game: Who's the Spy\n"
             "Setup:\n"
             "- Four players. Three of them share the same secret word.\n"
             "- The remaining player, the undercover, holds a different but "
             "related word.\n"
             "- Nobody is told which group they belong to.\n\n"
             "Flow:\n"
             "Players describe their word in one sentence, in speaking order, "
             "for two rounds. The word itself must never be said. Then every "
             "player votes for one other player and the most-voted player is "
             "eliminated.\n\n"
             "Result:\n"
             "- The majority wins if the undercover is eliminated.\n"
             "- The undercover wins if anyone else is eliminated.\n";
    case 1:
      return "Welcome to a round of Who's the Spy with four players.\n"
             "Three players received one word and one player received a "
             "similar word. You only know your own word.\n"
             "Each player gives two short descriptions, one per round, "
             "without using the word. After the second round there is a "
             "single simultaneous vote; whoever gets the most votes leaves "
             "the game. If that player held the odd word, the group sharing "
             "the common word wins; otherwise the odd one out wins.\n";
    case 2:
      return "## Social deduction game\n"
             "- 4 players, 2 speaking rounds, 1 vote.\n"
             "- 3 players hold word A, 1 player holds a related word B.\n"
             "- Describe your word in one sentence per round; never say it.\n"
             "- Vote for the player you believe holds the different word.\n"
             "- The most-voted player is removed. Removing the holder of word "
             "B means the word-A group wins; removing anyone else means the "
             "word-B holder wins.\n";
    default:
      return "Rules of Who's the Spy:\n"
             "1. Everyone gets a secret word. Three words are identical, one "
             "is different but close in meaning.\n"
             "2. Speak in turn and describe your word with one sentence. Be "
             "clear enough to find allies and vague enough not to help the "
             "odd one out.\n"
             "3. After two rounds, all players vote at once to remove one "
             "player.\n"
             "4. The shared-word group wins by removing the different-word "
             "holder; the different-word holder wins if a shared-word player "
             "is removed.\n";
  }
}

constexpr std::string_view kDiversityHint =
    "### Additional Rules for Description (Very Important)\n"
    "- Give a description that differs clearly from what you said in the "
    "earlier round.\n"
    "- Change the vocabulary, the sentence shape and the idea.\n"
    "- Try a fresh angle such as what it does, how it looks, what it means "
    "or how people use it.\n"
    "- Stick to the everyday meaning of your word.\n";

}  // namespace

std::string_view role_name(Role r) {
  return r == Role::kCivilian ? "civilian" : "undercover";
}

std::string_view side_name(Side s) {
  return s == Side::kCivilians ? "civilians" : "undercover";
}

std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::kDescribe: return "describe";
    case Phase::kVote: return "vote";
    case Phase::kFinished: return "finished";
  }
  return "?";
}

std::string player_label(int player) {
  return "Player " + std::to_string(player + 1);
}

WordPair::WordPair(std::string civilian, std::string undercover)
    : civilian_word(std::move(civilian)),
      undercover_word(std::move(undercover)) {
  if (civilian_word.empty() || undercover_word.empty()) {
    throw std::invalid_argument("word pair has an empty word");
  }
  if (to_lower(civilian_word) == to_lower(undercover_word)) {
    throw std::invalid_argument("word pair words must differ");
  }
}

Side SpyMatch::side(int player) const {
  return role(player) == Role::kCivilian ? Side::kCivilians : Side::kUndercover;
}

const std::string& SpyMatch::word_of(int player) const {
  return role(player) == Role::kCivilian ? words_.civilian_word
                                         : words_.undercover_word;
}

int SpyMatch::undercover_player() const {
  for (int p = 0; p < kPlayers; ++p) {
    if (roles_[static_cast<std::size_t>(p)] == Role::kUndercover) return p;
  }
  return -1;
}

int SpyMatch::current_speaker() const {
  if (phase_ != Phase::kDescribe) throw WrongPhase("no speaker outside describe phase");
  return order_[static_cast<std::size_t>(turn_)];
}

SpyMatch new_match(const WordPair& words, std::size_t opponent_count,
                   std::uint64_t seed) {
  if (opponent_count < kPlayers - 1) {
    throw std::invalid_argument("a match needs 3 opponents, got " +
                                std::to_string(opponent_count));
  }
  const WordPair checked(words.civilian_word, words.undercover_word);
  Rng rng(seed);
  SpyMatch m;
  m.words_ = checked;
  m.seed_ = seed;
  m.roles_.fill(Role::kCivilian);
  m.roles_[uniform_index(rng, kPlayers)] = Role::kUndercover;
  m.trained_ = static_cast<int>(uniform_index(rng, kPlayers));
  std::iota(m.order_.begin(), m.order_.end(), 0);
  shuffle_in_place(m.order_, rng);
  return m;
}

SpyMatch submit_description(const SpyMatch& m, int player,
                            std::string_view text) {
  check_player(player);
  if (m.phase_ != Phase::kDescribe) {
    throw WrongPhase("descriptions are closed (phase " +
                     std::string(phase_name(m.phase_)) + ")");
  }
  if (player != m.current_speaker()) {
    throw OutOfTurn(player_label(player) + " spoke out of turn; expected " +
                    player_label(m.current_speaker()));
  }
  if (trim(text).empty()) throw std::invalid_argument("empty description");
  if (contains_ci(text, m.word_of(player))) {
    throw RuleViolation(player_label(player) + " said their own word");
  }
  SpyMatch next = m;
  next.transcript_.push_back({player, m.round_, std::string(text)});
  if (++next.turn_ == kPlayers) {
    next.turn_ = 0;
    if (++next.round_ > kRounds) {
      next.round_ = kRounds;
      next.phase_ = Phase::kVote;
    }
  }
  return next;
}

SpyMatch tally_votes(const SpyMatch& m, const VoteSheet& votes) {
  if (m.phase_ != Phase::kVote) {
    throw WrongPhase("voting is not open (phase " +
                     std::string(phase_name(m.phase_)) + ")");
  }
  std::array<int, kPlayers> counts{};
  for (int voter = 0; voter < kPlayers; ++voter) {
    const int target = votes[static_cast<std::size_t>(voter)];
    if (target < 0) throw InvalidVote(player_label(voter) + " did not vote");
    if (target >= kPlayers) throw InvalidVote("vote for unknown player");
    if (target == voter) throw InvalidVote(player_label(voter) + " voted for themselves");
    ++counts[static_cast<std::size_t>(target)];
  }
  const int top = *std::max_element(counts.begin(), counts.end());
  std::vector<int> tied;
  for (int p = 0; p < kPlayers; ++p) {
    if (counts[static_cast<std::size_t>(p)] == top) tied.push_back(p);
  }
  Rng rng(derive_seed(m.seed_, 0x746965ULL));
  const int out = tied[uniform_index(rng, tied.size())];

  SpyMatch next = m;
  next.votes_ = votes;
  next.eliminated_ = out;
  next.winner_ = m.role(out) == Role::kUndercover ? Side::kCivilians
                                                  : Side::kUndercover;
  next.phase_ = Phase::kFinished;
  return next;
}

int score_spy(const SpyMatch& m, int trained_player) {
  check_player(trained_player);
  if (m.phase() != Phase::kFinished || !m.winner()) {
    throw WrongPhase("score_spy: match is not finished");
  }
  return *m.winner() == m.side(trained_player) ? 1 : 0;
}

PlayerView view_for(const SpyMatch& m, int player) {
  check_player(player);
  PlayerView v;
  v.player = player;
  v.word = m.word_of(player);
  v.phase = m.phase();
  v.round = m.round();
  v.speaking_order = m.speaking_order();
  v.transcript = m.transcript();
  return v;
}

std::string render_spy_prompt(const PlayerView& view, int rule_template_id,
                              bool include_diversity_hint) {
  if (rule_template_id < 0 || rule_template_id >= kSpyTemplateCount) {
    throw UnknownTemplate("spy rule template " + std::to_string(rule_template_id));
  }
  std::ostringstream out;
  out << rule_prompt(rule_template_id) << '\n';
  out << "You are " << player_label(view.player) << ". Your secret word is \""
      << view.word << "\".\n";
  out << "Speaking order:";
  for (std::size_t i = 0; i < view.speaking_order.size(); ++i) {
    out << (i ? ", " : " ") << player_label(view.speaking_order[i]);
  }
  out << ".\n\n## Descriptions so far\n";
  if (view.transcript.empty()) out << "(none yet)\n";
  for (const auto& d : view.transcript) {
    out << "Round " << d.round << " - " << player_label(d.player) << ": "
        << d.text << '\n';
  }
  out << "\n## Your Turn\n";
  switch (view.phase) {
    case Phase::kDescribe:
      out << "Round " << view.round
          << ": describe your word in one sentence without saying it.\n";
      if (include_diversity_hint && view.round == 2) out << '\n' << kDiversityHint;
      break;
    case Phase::kVote: {
      std::vector<std::string> others;
      for (int p = 0; p < kPlayers; ++p) {
        if (p != view.player) others.push_back(player_label(p));
      }
      out << "Both description rounds are over. Vote to eliminate one of: "
          << join(others, ", ") << ".\nAnswer with 'Player N'.\n";
      break;
    }
    case Phase::kFinished:
      out << "The game is over.\n";
      break;
  }
  return out.str();
}

std::string render_spy_prompt(const SpyMatch& m, int player,
                              int rule_template_id,
                              bool include_diversity_hint) {
  return render_spy_prompt(view_for(m, player), rule_template_id,
                           include_diversity_hint);
}

std::optional<int> parse_vote(std::string_view text) {
  constexpr std::string_view kPrefix = "Player ";
  std::size_t pos = text.find(kPrefix);
  while (pos != std::string_view::npos) {
    const std::size_t d = pos + kPrefix.size();
    if (d < text.size() && text[d] >= '1' && text[d] <= '0' + kPlayers &&
        (d + 1 >= text.size() ||
         !std::isdigit(static_cast<unsigned char>(text[d + 1])))) {
      return text[d] - '1';
    }
    pos = text.find(kPrefix, pos + 1);
  }
  return std::nullopt;
}

nlohmann::json match_record(const SpyMatch& m) {
  nlohmann::json j;
  j["civilian_word"] = m.words().civilian_word;
  j["undercover_word"] = m.words().undercover_word;
  j["trained_player"] = m.trained_player();
  j["speaking_order"] = m.speaking_order();
  nlohmann::json players = nlohmann::json::array();
  for (int p = 0; p < kPlayers; ++p) {
    players.push_back({{"player", p}, {"role", role_name(m.role(p))}});
  }
  j["players"] = players;
  nlohmann::json transcript = nlohmann::json::array();
  for (const auto& d : m.transcript()) {
    transcript.push_back({{"player", d.player},
                          {"role", role_name(m.role(d.player))},
                          {"round", d.round},
                          {"text", d.text}});
  }
  j["transcript"] = transcript;
  j["votes"] = m.votes();
  j["eliminated"] = m.eliminated() ? nlohmann::json(*m.eliminated()) : nlohmann::json();
  j["winner"] = m.winner() ? nlohmann::json(side_name(*m.winner())) : nlohmann::json();
  j["phase"] = phase_name(m.phase());
  return j;
}

SpyMatch play_match(SpyMatch m, const std::array<Agent*, kPlayers>& seats) {
  while (m.phase() == Phase::kDescribe) {
    const int p = m.current_speaker();
    m = submit_description(m, p, seats[static_cast<std::size_t>(p)]->describe(view_for(m, p)));
  }
  if (m.phase() == Phase::kVote) {
    VoteSheet votes{};
    for (int p = 0; p < kPlayers; ++p) {
      votes[static_cast<std::size_t>(p)] =
          seats[static_cast<std::size_t>(p)]->vote(view_for(m, p));
    }
    m = tally_votes(m, votes);
  }
  return m;
}

std::vector<std::string> tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace nestplay::spy
