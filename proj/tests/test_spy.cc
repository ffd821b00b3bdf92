#include <gtest/gtest.h>

#include <cmath>

#include "nestplay/spy.h"

namespace {

using namespace nestplay;
using namespace nestplay::spy;

const WordPair kApple("apple", "pear");

std::shared_ptr<const Lexicon> lexicon() {
  static const auto lex = std::make_shared<const Lexicon>(
      Lexicon::load(std::string(NESTPLAY_DEFAULT_DATA_DIR) + "/spy_words.tsv",
                    std::string(NESTPLAY_DEFAULT_DATA_DIR) + "/spy_attributes.tsv"));
  return lex;
}

SpyMatch to_vote_phase(SpyMatch m) {
  for (int i = 0; i < kDescriptions; ++i) {
    m = submit_description(m, m.current_speaker(), "statement " + std::to_string(i));
  }
  return m;
}

TEST(Assignment, DeterministicPerSeed) {
  EXPECT_EQ(new_match(kApple, 3, 42), new_match(kApple, 3, 42));
  EXPECT_THROW(new_match(kApple, 2, 42), std::invalid_argument);
}

TEST(Assignment, CiviliansShareTheWord) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto m = new_match(kApple, 3, s);
    int undercover = 0;
    for (int p = 0; p < kPlayers; ++p) {
      if (m.role(p) == Role::kUndercover) {
        ++undercover;
        EXPECT_EQ(m.word_of(p), "pear");
      } else {
        EXPECT_EQ(m.word_of(p), "apple");
      }
    }
    EXPECT_EQ(undercover, 1);
  }
}

TEST(AssignmentProperty, TrainedAgentIsUndercoverAQuarterOfTheTime) {
  int hits = 0;
  constexpr int kSeeds = 10000;
  for (int s = 0; s < kSeeds; ++s) {
    const auto m = new_match(kApple, 3, static_cast<std::uint64_t>(s));
    hits += m.trained_player() == m.undercover_player();
  }
  EXPECT_NEAR(hits / static_cast<double>(kSeeds), 0.25, 0.015);
}

TEST(Describe, AdvancesSpeakerAndPhase) {
  auto m = new_match(kApple, 3, 1);
  const int first = m.current_speaker();
  EXPECT_EQ(first, m.speaking_order()[0]);
  m = submit_description(m, first, "a red fruit");
  EXPECT_EQ(m.transcript().size(), 1u);
  EXPECT_EQ(m.current_speaker(), m.speaking_order()[1]);
  m = to_vote_phase(new_match(kApple, 3, 1));
  EXPECT_EQ(m.phase(), Phase::kVote);
  EXPECT_EQ(m.transcript().size(), 8u);
}

TEST(Describe, RejectsOwnWordOutOfTurnAndWrongPhase) {
  const auto m = new_match(kApple, 3, 3);
  const int p = m.current_speaker();
  const std::string said = "I like " + m.word_of(p) + " pie";
  EXPECT_THROW(submit_description(m, p, said), RuleViolation);
  std::string upper = "I like " + m.word_of(p) + " PIE";
  upper[7] = static_cast<char>(std::toupper(static_cast<unsigned char>(upper[7])));
  EXPECT_THROW(submit_description(m, p, upper), RuleViolation);
  EXPECT_THROW(submit_description(m, m.speaking_order()[1], "fine"), OutOfTurn);
  EXPECT_THROW(tally_votes(m, {1, 0, 0, 0}), WrongPhase);
  const auto v = to_vote_phase(m);
  EXPECT_THROW(submit_description(v, v.speaking_order()[0], "late"), WrongPhase);
}

TEST(PhaseProperty, EachPlayerSpeaksOncePerRound) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto m = to_vote_phase(new_match(kApple, 3, s));
    for (int round = 1; round <= kRounds; ++round) {
      std::array<int, kPlayers> spoke{};
      for (const auto& d : m.transcript()) {
        if (d.round == round) ++spoke[static_cast<std::size_t>(d.player)];
      }
      for (int c : spoke) ASSERT_EQ(c, 1);
    }
    ASSERT_FALSE(m.winner().has_value());
  }
}

TEST(Votes, MajorityEliminates) {
  const auto m = to_vote_phase(new_match(kApple, 3, 8));
  const auto done = tally_votes(m, {1, 0, 1, 1});
  EXPECT_EQ(done.eliminated(), 1);
  EXPECT_EQ(done.phase(), Phase::kFinished);
  EXPECT_THROW(tally_votes(m, {0, 0, 1, 1}), InvalidVote);
  EXPECT_THROW(tally_votes(m, {-1, 0, 1, 1}), InvalidVote);
}

TEST(Votes, TieBreakIsSeededAndAmongTied) {
  const VoteSheet split{1, 0, 0, 1};
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto m = to_vote_phase(new_match(kApple, 3, s));
    const auto a = tally_votes(m, split);
    EXPECT_TRUE(a.eliminated() == 0 || a.eliminated() == 1);
    EXPECT_EQ(a, tally_votes(m, split));
  }
}

// Every self-vote-free sheet: the eliminated player carries a maximal count
// and the winning side follows the eliminated player's role.
TEST(VotesProperty, AllEightyOneSheetsAdjudicateConsistently) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const auto m = to_vote_phase(new_match(kApple, 3, seed));
    int sheets = 0;
    for (int code = 0; code < 81; ++code) {
      VoteSheet v{};
      int c = code;
      for (int p = 0; p < kPlayers; ++p) {
        const int choice = c % 3;
        c /= 3;
        v[static_cast<std::size_t>(p)] = choice >= p ? choice + 1 : choice;
      }
      ++sheets;
      std::array<int, kPlayers> count{};
      for (int t : v) ++count[static_cast<std::size_t>(t)];
      const int best = *std::max_element(count.begin(), count.end());
      const auto done = tally_votes(m, v);
      ASSERT_TRUE(done.eliminated().has_value());
      const int e = *done.eliminated();
      ASSERT_EQ(count[static_cast<std::size_t>(e)], best);
      const Side expect = m.role(e) == Role::kUndercover ? Side::kCivilians : Side::kUndercover;
      ASSERT_EQ(done.winner(), expect);
      for (int p = 0; p < kPlayers; ++p) {
        ASSERT_EQ(score_spy(done, p), done.side(p) == expect ? 1 : 0);
      }
    }
    EXPECT_EQ(sheets, 81);
  }
}

TEST(Score, SideWins) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto m = to_vote_phase(new_match(kApple, 3, s));
    const int u = m.undercover_player();
    VoteSheet v{};
    for (int p = 0; p < kPlayers; ++p) v[static_cast<std::size_t>(p)] = p == u ? (u + 1) % kPlayers : u;
    const auto done = tally_votes(m, v);
    EXPECT_EQ(done.winner(), Side::kCivilians);
    EXPECT_EQ(score_spy(done, (u + 1) % kPlayers), 1);
    EXPECT_EQ(score_spy(done, u), 0);
  }
  EXPECT_THROW(score_spy(new_match(kApple, 3, 0), 0), WrongPhase);
}

TEST(Prompt, RoundOneAndVotePhase) {
  auto m = new_match(kApple, 3, 5);
  const int p = m.current_speaker();
  const auto first = render_spy_prompt(m, p, 0, true);
  EXPECT_NE(first.find(m.word_of(p)), std::string::npos);
  EXPECT_NE(first.find("(none yet)"), std::string::npos);
  m = to_vote_phase(m);
  const auto vote = render_spy_prompt(m, p, 0, true);
  for (int i = 0; i < kDescriptions; ++i) {
    EXPECT_NE(vote.find("statement " + std::to_string(i)), std::string::npos);
  }
  for (int q = 0; q < kPlayers; ++q) {
    const bool listed = vote.find(player_label(q), vote.find("Vote to eliminate")) != std::string::npos;
    EXPECT_EQ(listed, q != p);
  }
}

TEST(Prompt, DiversityHintInRoundTwoOnly) {
  auto m = new_match(kApple, 3, 6);
  const std::string heading = "Additional Rules for Description";
  EXPECT_EQ(render_spy_prompt(m, m.current_speaker(), 1, true).find(heading), std::string::npos);
  for (int i = 0; i < kPlayers; ++i) m = submit_description(m, m.current_speaker(), "x");
  EXPECT_NE(render_spy_prompt(m, m.current_speaker(), 1, true).find(heading), std::string::npos);
  EXPECT_EQ(render_spy_prompt(m, m.current_speaker(), 1, false).find(heading), std::string::npos);
  EXPECT_THROW(render_spy_prompt(m, 0, kSpyTemplateCount, true), UnknownTemplate);
}

// The prompt depends on the seat's own word only: replacing that word with a
// placeholder gives the same text for a civilian and the undercover.
TEST(PromptProperty, HidesOtherWordAndRole) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    for (int tpl = 0; tpl < kSpyTemplateCount; ++tpl) {
      auto m = new_match(WordPair("cherry", "plum"), 3, s);
      for (int i = 0; i < kPlayers; ++i) m = submit_description(m, m.current_speaker(), "words");
      const int u = m.undercover_player();
      const int c = (u + 1) % kPlayers;
      auto pu = render_spy_prompt(m, u, tpl, true);
      auto pc = render_spy_prompt(m, c, tpl, true);
      EXPECT_EQ(pu.find("cherry"), std::string::npos);
      EXPECT_EQ(pc.find("plum"), std::string::npos);
      pu.replace(pu.find("\"plum\""), 6, "\"W\"");
      pc.replace(pc.find("\"cherry\""), 8, "\"W\"");
      const auto label = [](std::string s, int p, const char* tag) {
        const auto l = "You are " + player_label(p);
        s.replace(s.find(l), l.size(), tag);
        return s;
      };
      EXPECT_EQ(label(pu, u, "You are ME"), label(pc, c, "You are ME"));
    }
  }
}

TEST(Parse, VoteText) {
  EXPECT_EQ(parse_vote("I vote Player 3"), 2);
  EXPECT_EQ(parse_vote("Player 1."), 0);
  EXPECT_FALSE(parse_vote("Player 5").has_value());
  EXPECT_FALSE(parse_vote("Player 12").has_value());
  EXPECT_FALSE(parse_vote("nobody").has_value());
}

TEST(Lexicon, BundledWordsHaveAttributes) {
  const auto lex = lexicon();
  ASSERT_GE(lex->pairs().size(), 20u);
  for (const auto& p : lex->pairs()) {
    EXPECT_GE(lex->attributes(p.civilian_word).size(), 3u) << p.civilian_word;
    EXPECT_GE(lex->attributes(p.undercover_word).size(), 3u) << p.undercover_word;
    for (const auto& a : lex->attributes(p.civilian_word)) {
      EXPECT_EQ(a.find(p.civilian_word), std::string::npos);
    }
  }
  EXPECT_THROW(lex->attributes("no-such-word"), MissingWord);
}

TEST(Agents, KeywordCivilianIsDeterministic) {
  const auto lex = lexicon();
  const auto m = new_match(lex->pairs()[0], 3, 4);
  const auto view = view_for(m, m.current_speaker());
  auto a = scripted_spy_agent(AgentKind::kKeywordCivilian, 9, lex);
  auto b = scripted_spy_agent(AgentKind::kKeywordCivilian, 9, lex);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a->describe(view), b->describe(view));
}

TEST(AgentsProperty, RandomVoterIsUniform) {
  const auto lex = lexicon();
  const auto m = to_vote_phase(new_match(lex->pairs()[0], 3, 2));
  const auto view = view_for(m, 0);
  auto agent = scripted_spy_agent(AgentKind::kRandomVoter, 123, lex);
  std::array<int, kPlayers> count{};
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) ++count[static_cast<std::size_t>(agent->vote(view))];
  EXPECT_EQ(count[0], 0);
  const double sigma = std::sqrt(kDraws * (1.0 / 3) * (2.0 / 3));
  for (int p = 1; p < kPlayers; ++p) EXPECT_NEAR(count[static_cast<std::size_t>(p)], kDraws / 3.0, 3 * sigma);
}

TEST(AgentsProperty, KeywordCiviliansBeatBaselineAgainstRandomUndercover) {
  const auto lex = lexicon();
  int civilian_wins = 0;
  constexpr int kMatches = 1000;
  for (int i = 0; i < kMatches; ++i) {
    const auto seed = derive_seed(99, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    const auto& pair = lex->pairs()[uniform_index(rng, lex->pairs().size())];
    auto m = new_match(pair, 3, rng());
    std::vector<std::unique_ptr<Agent>> agents;
    std::array<Agent*, kPlayers> seats{};
    for (int p = 0; p < kPlayers; ++p) {
      const auto kind = m.role(p) == Role::kUndercover ? AgentKind::kRandomVoter
                                                         : AgentKind::kKeywordCivilian;
      agents.push_back(scripted_spy_agent(kind, rng(), lex));
      seats[static_cast<std::size_t>(p)] = agents.back().get();
    }
    m = play_match(m, seats);
    civilian_wins += m.winner() == Side::kCivilians;
  }
  EXPECT_GT(civilian_wins / static_cast<double>(kMatches), 0.25);
}

TEST(Record, CarriesRolesAndOutcome) {
  const auto m = tally_votes(to_vote_phase(new_match(kApple, 3, 1)), {1, 0, 0, 0});
  const auto j = match_record(m);
  EXPECT_EQ(j["civilian_word"], "apple");
  EXPECT_EQ(j["transcript"].size(), 8u);
  EXPECT_EQ(j["eliminated"], 0);
  EXPECT_EQ(j["phase"], "finished");
}

}  // namespace
