#include <algorithm>
#include <fstream>
#include <set>

#include "nestplay/spy.h"
#include "nestplay/text_util.h"

namespace nestplay::spy {
namespace {

constexpr std::array<std::string_view, 3> kPhrasings{
    "I associate it with {}.", "One thing that comes to mind is {}.",
    "It makes me think of {}."};

std::string phrase(std::size_t which, std::string_view attribute) {
  std::string_view t = kPhrasings[which % kPhrasings.size()];
  const auto pos = t.find("{}");
  std::string out(t.substr(0, pos));
  out += attribute;
  out += t.substr(pos + 2);
  return out;
}

std::vector<std::string> own_used(const PlayerView& view) {
  std::vector<std::string> used;
  for (const auto& d : view.transcript) {
    if (d.player != view.player) continue;
    for (auto& t : tokens(d.text)) used.push_back(std::move(t));
  }
  return used;
}

std::vector<std::string> unused(const std::vector<std::string>& pool,
                                const std::vector<std::string>& used) {
  std::vector<std::string> out;
  for (const auto& a : pool) {
    if (std::find(used.begin(), used.end(), a) == used.end()) out.push_back(a);
  }
  return out.empty() ? pool : out;
}

int random_other(const PlayerView& view, Rng& rng) {
  std::vector<int> others;
  for (int p = 0; p < kPlayers; ++p) {
    if (p != view.player) others.push_back(p);
  }
  return others[uniform_index(rng, others.size())];
}

class ScriptedAgent : public Agent {
 public:
  ScriptedAgent(AgentKind kind, std::uint64_t seed,
                std::shared_ptr<const Lexicon> lexicon)
      : kind_(kind), rng_(seed), lexicon_(std::move(lexicon)) {
    if (!lexicon_) throw std::invalid_argument("scripted agent needs a lexicon");
  }

  std::string describe(const PlayerView& view) override {
    const auto& attrs = lexicon_->attributes(view.word);
    std::vector<std::string> pool;
    switch (kind_) {
      case AgentKind::kKeywordCivilian:
        pool = unused(attrs, own_used(view));
        break;
      case AgentKind::kEvasiveUndercover: {
        auto shared = lexicon_->shared_attributes(view.word);
        pool = unused(shared.empty() ? attrs : shared, own_used(view));
        break;
      }
      case AgentKind::kRandomVoter:
        pool = attrs;
        break;
    }
    const std::string& attribute = pool[uniform_index(rng_, pool.size())];
    return phrase(uniform_index(rng_, kPhrasings.size()), attribute);
  }

  int vote(const PlayerView& view) override {
    if (kind_ != AgentKind::kKeywordCivilian) return random_other(view, rng_);
    // Fewest attribute tokens in common with our own word is the suspect.
    const auto& attrs = lexicon_->attributes(view.word);
    const std::set<std::string> mine(attrs.begin(), attrs.end());
    std::array<int, kPlayers> overlap{};
    for (const auto& d : view.transcript) {
      for (const auto& t : tokens(d.text)) {
        if (mine.count(t)) ++overlap[static_cast<std::size_t>(d.player)];
      }
    }
    int best = INT32_MAX;
    std::vector<int> suspects;
    for (int p = 0; p < kPlayers; ++p) {
      if (p == view.player) continue;
      const int o = overlap[static_cast<std::size_t>(p)];
      if (o < best) {
        best = o;
        suspects.clear();
      }
      if (o == best) suspects.push_back(p);
    }
    return suspects[uniform_index(rng_, suspects.size())];
  }

 private:
  AgentKind kind_;
  Rng rng_;
  std::shared_ptr<const Lexicon> lexicon_;
};

}  // namespace

std::string_view agent_kind_name(AgentKind k) {
  switch (k) {
    case AgentKind::kKeywordCivilian: return "keyword-civilian";
    case AgentKind::kEvasiveUndercover: return "evasive-undercover";
    case AgentKind::kRandomVoter: return "random-voter";
  }
  return "?";
}

Lexicon::Lexicon(std::vector<WordPair> pairs,
                 std::map<std::string, std::vector<std::string>> attributes)
    : pairs_(std::move(pairs)), attributes_(std::move(attributes)) {
  if (pairs_.empty()) throw std::invalid_argument("lexicon has no word pairs");
  for (const auto& [word, attrs] : attributes_) {
    if (attrs.empty()) {
      throw std::invalid_argument("word '" + word + "' has no attributes");
    }
  }
}

std::vector<WordPair> Lexicon::read_pairs(std::istream& in) {
  std::vector<WordPair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) {
      throw std::invalid_argument("word pair line " + std::to_string(lineno) +
                                  ": expected two tab-separated words");
    }
    pairs.emplace_back(std::string(trim(fields[0])), std::string(trim(fields[1])));
  }
  return pairs;
}

Lexicon Lexicon::load(const std::string& pairs_path,
                      const std::string& attributes_path) {
  std::ifstream pin(pairs_path);
  if (!pin) throw std::runtime_error("cannot open word pair file: " + pairs_path);
  auto pairs = read_pairs(pin);

  std::ifstream ain(attributes_path);
  if (!ain) {
    throw std::runtime_error("cannot open attribute file: " + attributes_path);
  }
  std::map<std::string, std::vector<std::string>> attributes;
  std::string line;
  int lineno = 0;
  while (std::getline(ain, line)) {
    ++lineno;
    if (trim(line).empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2) {
      throw std::invalid_argument("attribute line " + std::to_string(lineno) +
                                  ": expected word<TAB>attributes");
    }
    auto& list = attributes[std::string(trim(fields[0]))];
    for (const auto& a : split(fields[1], ',')) {
      if (!trim(a).empty()) list.emplace_back(trim(a));
    }
  }
  return Lexicon(std::move(pairs), std::move(attributes));
}

const std::vector<std::string>& Lexicon::attributes(const std::string& word) const {
  auto it = attributes_.find(word);
  if (it == attributes_.end()) {
    throw MissingWord("word '" + word + "' is not in the attribute table");
  }
  return it->second;
}

bool Lexicon::has_word(const std::string& word) const {
  return attributes_.count(word) > 0;
}

std::vector<std::string> Lexicon::shared_attributes(const std::string& word) const {
  const auto& own = attributes(word);
  std::set<std::string> partner;
  for (const auto& p : pairs_) {
    const std::string* other = nullptr;
    if (p.civilian_word == word) other = &p.undercover_word;
    if (p.undercover_word == word) other = &p.civilian_word;
    if (other && has_word(*other)) {
      for (const auto& a : attributes(*other)) partner.insert(a);
    }
  }
  std::vector<std::string> out;
  for (const auto& a : own) {
    if (partner.count(a)) out.push_back(a);
  }
  return out;
}

std::unique_ptr<Agent> scripted_spy_agent(AgentKind kind, std::uint64_t seed,
                                          std::shared_ptr<const Lexicon> lexicon) {
  return std::make_unique<ScriptedAgent>(kind, seed, std::move(lexicon));
}

std::vector<std::string> description_candidates(const Lexicon& lexicon,
                                                const std::string& word) {
  std::vector<std::string> out;
  for (const auto& a : lexicon.attributes(word)) out.push_back(phrase(0, a));
  out.push_back("It is simply a " + word + ".");
  return out;
}

}  // namespace nestplay::spy
