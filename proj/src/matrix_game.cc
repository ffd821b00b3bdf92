#include "nestplay/matrix_game.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "nestplay/random.h"
#include "nestplay/text_util.h"

namespace nestplay::matrix {
namespace {

using Json = nlohmann::ordered_json;

void check_table(const PayoffTable& t, std::size_t rows, std::size_t cols,
                 std::string_view which) {
  if (t.size() != rows) {
    throw InvalidMatrix(std::string(which) + ": expected " +
                        std::to_string(rows) + " rows, got " +
                        std::to_string(t.size()));
  }
  for (const auto& row : t) {
    if (row.size() != cols) {
      throw InvalidMatrix(std::string(which) + ": expected " +
                          std::to_string(cols) + " columns, got " +
                          std::to_string(row.size()));
    }
  }
}

void check_labels(const std::vector<std::string>& labels,
                  std::string_view which, std::size_t min_actions) {
  if (labels.size() < min_actions) {
    throw InvalidMatrix(std::string(which) + ": need at least " +
                        std::to_string(min_actions) + " actions");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) {
      throw InvalidMatrix(std::string(which) + ": empty action label");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (labels[i] == labels[j]) {
        throw InvalidMatrix(std::string(which) + ": duplicate label '" +
                            labels[i] + "'");
      }
    }
  }
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string payoff_table_text(const PayoffMatrix& m, const PayoffTable& t) {
  std::ostringstream out;
  out << "| P1 \\ P2 |";
  for (const auto& c : m.col_actions()) out << ' ' << c << " |";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << "\n| " << m.row_actions()[r] << " |";
    for (std::size_t c = 0; c < m.cols(); ++c) out << ' ' << t[r][c] << " |";
  }
  return out.str();
}

std::string role_line(PlayerRole role) {
  return role == PlayerRole::kP1 ? "You are Player 1 and you choose a row"
                                 : "You are Player 2 and you choose a column";
}

std::string instruction(const PayoffMatrix& m, PlayerRole role,
                        std::uint64_t rng_seed) {
  const std::string own = join(m.actions(role), ", ");
  Rng rng(derive_seed(rng_seed, 0x6d61747269785fULL));
  switch (uniform_index(rng, 3)) {
    case 0:
      return "Both players move simultaneously. Choose exactly one of your "
             "actions [" + own + "] and answer with its name.";
    case 1:
      return "Think about what the other player will do, then pick one "
             "action from [" + own + "]. Reply with the action name only.";
    default:
      return "Select the action you will play. Valid answers: " + own + ".";
  }
}

}  // namespace

std::string_view role_name(PlayerRole role) {
  return role == PlayerRole::kP1 ? "P1" : "P2";
}

PayoffMatrix::PayoffMatrix(std::string name,
                           std::vector<std::string> row_actions,
                           std::vector<std::string> col_actions,
                           PayoffTable payoff_p1, PayoffTable payoff_p2)
    : PayoffMatrix(2, std::move(name), std::move(row_actions),
                   std::move(col_actions), std::move(payoff_p1),
                   std::move(payoff_p2)) {}

PayoffMatrix PayoffMatrix::reduced(std::string name,
                                   std::vector<std::string> row_actions,
                                   std::vector<std::string> col_actions,
                                   PayoffTable payoff_p1,
                                   PayoffTable payoff_p2) {
  return PayoffMatrix(1, std::move(name), std::move(row_actions),
                      std::move(col_actions), std::move(payoff_p1),
                      std::move(payoff_p2));
}

PayoffMatrix::PayoffMatrix(std::size_t min_actions, std::string name,
                           std::vector<std::string> row_actions,
                           std::vector<std::string> col_actions,
                           PayoffTable payoff_p1, PayoffTable payoff_p2)
    : name_(std::move(name)),
      row_actions_(std::move(row_actions)),
      col_actions_(std::move(col_actions)),
      payoff_p1_(std::move(payoff_p1)),
      payoff_p2_(std::move(payoff_p2)) {
  check_labels(row_actions_, "row_actions", min_actions);
  check_labels(col_actions_, "col_actions", min_actions);
  check_table(payoff_p1_, rows(), cols(), "payoff_p1");
  check_table(payoff_p2_, rows(), cols(), "payoff_p2");
}

TransformSpec::TransformSpec(int sign, int offset) : sign(sign), offset(offset) {
  if (sign != 1 && sign != -1) {
    throw std::invalid_argument("TransformSpec: sign must be +1 or -1");
  }
  if (offset != 0 && offset != 100 && offset != -100) {
    throw std::invalid_argument("TransformSpec: offset must be -100, 0 or 100");
  }
}

std::vector<PayoffMatrix> build_canonical_games() {
  std::vector<PayoffMatrix> games;
  games.reserve(9);
  games.emplace_back("Prisoner's Dilemma",
                     std::vector<std::string>{"Cooperate", "Defect"},
                     std::vector<std::string>{"Cooperate", "Defect"},
                     PayoffTable{{3, 0}, {5, 1}}, PayoffTable{{3, 5}, {0, 1}});
  games.emplace_back("Battle of the Sexes",
                     std::vector<std::string>{"Opera", "Football"},
                     std::vector<std::string>{"Opera", "Football"},
                     PayoffTable{{3, 0}, {0, 2}}, PayoffTable{{2, 0}, {0, 3}});
  games.emplace_back("Game of Chicken",
                     std::vector<std::string>{"Swerve", "Straight"},
                     std::vector<std::string>{"Swerve", "Straight"},
                     PayoffTable{{0, -1}, {1, -10}},
                     PayoffTable{{0, 1}, {-1, -10}});
  games.emplace_back("Stag Hunt", std::vector<std::string>{"Stag", "Hare"},
                     std::vector<std::string>{"Stag", "Hare"},
                     PayoffTable{{4, 0}, {3, 3}}, PayoffTable{{4, 3}, {0, 3}});
  // Audience shares 50/30/20; stations choosing the same format split it.
  games.emplace_back("Radio Station",
                     std::vector<std::string>{"Top40", "Country", "Jazz"},
                     std::vector<std::string>{"Top40", "Country", "Jazz"},
                     PayoffTable{{25, 50, 50}, {30, 15, 30}, {20, 20, 10}},
                     PayoffTable{{25, 30, 20}, {50, 15, 20}, {50, 30, 10}});
  games.emplace_back("IESDS", std::vector<std::string>{"Up", "Down"},
                     std::vector<std::string>{"Left", "Middle", "Right"},
                     PayoffTable{{1, 1, 0}, {0, 0, 2}},
                     PayoffTable{{0, 2, 1}, {3, 1, 0}});
  // Quantities 2/4/6, profit q_i * (13 - q_1 - q_2).
  games.emplace_back("Duopolistic Game",
                     std::vector<std::string>{"Low", "Medium", "High"},
                     std::vector<std::string>{"Low", "Medium", "High"},
                     PayoffTable{{18, 14, 10}, {28, 20, 12}, {30, 18, 6}},
                     PayoffTable{{18, 28, 30}, {14, 20, 18}, {10, 12, 6}});
  games.emplace_back("GAME", std::vector<std::string>{"Top", "Middle", "Bottom"},
                     std::vector<std::string>{"Left", "Center", "Right"},
                     PayoffTable{{0, 4, 5}, {4, 0, 5}, {3, 3, 6}},
                     PayoffTable{{4, 0, 3}, {0, 4, 3}, {5, 5, 6}});
  games.emplace_back("Weakly Dominated Game",
                     std::vector<std::string>{"Up", "Down"},
                     std::vector<std::string>{"Left", "Right"},
                     PayoffTable{{1, 0}, {0, 0}}, PayoffTable{{1, 0}, {0, 0}});
  return games;
}

std::optional<PayoffMatrix> find_game(const std::vector<PayoffMatrix>& games,
                                      std::string_view name) {
  for (const auto& g : games) {
    if (g.name() == name) return g;
  }
  return std::nullopt;
}

PayoffMatrix transform_payoffs(const PayoffMatrix& m, const TransformSpec& t) {
  auto apply = [&](PayoffTable table) {
    for (auto& row : table) {
      for (auto& e : row) e = t.sign * e + t.offset;
    }
    return table;
  };
  return PayoffMatrix(m.name(), m.row_actions(), m.col_actions(),
                      apply(m.payoff_p1()), apply(m.payoff_p2()));
}

std::vector<ActionProfile> enumerate_pure_nash(const PayoffMatrix& m) {
  std::vector<ActionProfile> out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      bool stable = true;
      for (std::size_t r2 = 0; r2 < m.rows() && stable; ++r2) {
        if (m.p1(r2, c) > m.p1(r, c)) stable = false;
      }
      for (std::size_t c2 = 0; c2 < m.cols() && stable; ++c2) {
        if (m.p2(r, c2) > m.p2(r, c)) stable = false;
      }
      if (stable) out.push_back({r, c});
    }
  }
  return out;
}

PayoffMatrix iesds_reduce(const PayoffMatrix& m) {
  std::vector<std::size_t> rows(m.rows()), cols(m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = i;

  // Row a is strictly dominated by row b over the surviving columns.
  auto row_dominated = [&](std::size_t a, std::size_t b) {
    return std::all_of(cols.begin(), cols.end(),
                       [&](std::size_t c) { return m.p1(b, c) > m.p1(a, c); });
  };
  auto col_dominated = [&](std::size_t a, std::size_t b) {
    return std::all_of(rows.begin(), rows.end(),
                       [&](std::size_t r) { return m.p2(r, b) > m.p2(r, a); });
  };
  auto eliminate = [](std::vector<std::size_t>& live, auto dominated) {
    if (live.size() < 2) return false;
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::size_t j = 0; j < live.size(); ++j) {
        if (i != j && dominated(live[i], live[j])) {
          live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
          return true;
        }
      }
    }
    return false;
  };

  bool changed = true;
  while (changed) {
    changed = eliminate(rows, row_dominated);
    changed = eliminate(cols, col_dominated) || changed;
  }
  if (rows.size() == m.rows() && cols.size() == m.cols()) return m;

  std::vector<std::string> row_labels, col_labels;
  PayoffTable t1, t2;
  for (std::size_t r : rows) {
    row_labels.push_back(m.row_actions()[r]);
    std::vector<long long> r1, r2;
    for (std::size_t c : cols) {
      r1.push_back(m.p1(r, c));
      r2.push_back(m.p2(r, c));
    }
    t1.push_back(std::move(r1));
    t2.push_back(std::move(r2));
  }
  for (std::size_t c : cols) col_labels.push_back(m.col_actions()[c]);
  return PayoffMatrix::reduced(m.name(), std::move(row_labels),
                               std::move(col_labels), std::move(t1),
                               std::move(t2));
}

std::string render_matrix_prompt(const PayoffMatrix& m, int template_id,
                                 PlayerRole role, std::uint64_t rng_seed) {
  if (template_id < 0 || template_id >= kMatrixTemplateCount) {
    throw UnknownTemplate("matrix prompt template " +
                          std::to_string(template_id));
  }
  const std::string rows = join(m.row_actions(), ", ");
  const std::string cols = join(m.col_actions(), ", ");
  const std::string t1 = payoff_table_text(m, m.payoff_p1());
  const std::string t2 = payoff_table_text(m, m.payoff_p2());
  const std::string instr = instruction(m, role, rng_seed);
  std::ostringstream out;
  switch (template_id) {
    case 0:
      out << role_line(role) << ".\n\n"
          << "Rows = Player 1's actions [" << rows
          << "]; Columns = Player 2's actions [" << cols << "].\n\n"
          << "### P1's payoff\n" << t1 << "\n\n"
          << "### P2's payoff\n" << t2 << "\n\n"
          << instr;
      break;
    case 1:
      out << "Two players each pick one action at the same time.\n"
          << role_line(role) << ".\n"
          << "Player 1 picks a row from: " << rows << ".\n"
          << "Player 2 picks a column from: " << cols << ".\n\n"
          << "Payoffs to Player 1:\n" << t1 << "\n\n"
          << "Payoffs to Player 2:\n" << t2 << "\n\n"
          << instr;
      break;
    case 2:
      out << "## One-shot matrix game\n"
          << "Player 1 actions (rows): [" << rows << "]\n"
          << "Player 2 actions (columns): [" << cols << "]\n\n"
          << "Player 1 payoff table:\n" << t1 << "\n\n"
          << "Player 2 payoff table:\n" << t2 << "\n\n"
          << role_line(role) << ". Each player only cares about their own "
          << "payoff.\n" << instr;
      break;
    default:
      out << role_line(role) << " in a simultaneous-move game.\n"
          << "Row options for Player 1: [" << rows << "]. Column options for "
          << "Player 2: [" << cols << "].\n\n"
          << "### P1's payoff\n" << t1 << "\n\n"
          << "### P2's payoff\n" << t2 << "\n\n"
          << "Aim for a choice that is a best response to the other player's "
          << "best response.\n" << instr;
      break;
  }
  return out.str();
}

int score_matrix_action(const PayoffMatrix& m, PlayerRole role,
                        std::size_t action) {
  const std::size_t n = role == PlayerRole::kP1 ? m.rows() : m.cols();
  if (action >= n) {
    throw std::out_of_range("score_matrix_action: action " +
                            std::to_string(action) + " out of range");
  }
  for (const auto& p : enumerate_pure_nash(m)) {
    const std::size_t own = role == PlayerRole::kP1 ? p.row_action : p.col_action;
    if (own == action) return 1;
  }
  return 0;
}

std::optional<std::size_t> parse_matrix_action(const PayoffMatrix& m,
                                               PlayerRole role,
                                               std::string_view text) {
  const auto& labels = m.actions(role);
  std::optional<std::size_t> best;
  std::size_t best_pos = std::string_view::npos;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string& label = labels[i];
    std::size_t pos = text.find(label);
    while (pos != std::string_view::npos) {
      const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
      const std::size_t end = pos + label.size();
      const bool right_ok = end >= text.size() || !is_word_char(text[end]);
      if (left_ok && right_ok) break;
      pos = text.find(label, pos + 1);
    }
    if (pos == std::string_view::npos) continue;
    if (!best || pos < best_pos ||
        (pos == best_pos && label.size() > labels[*best].size())) {
      best = i;
      best_pos = pos;
    }
  }
  return best;
}

std::string to_json_line(const PayoffMatrix& m) {
  Json j;
  j["name"] = m.name();
  j["row_actions"] = m.row_actions();
  j["col_actions"] = m.col_actions();
  j["payoff_p1"] = m.payoff_p1();
  j["payoff_p2"] = m.payoff_p2();
  return j.dump();
}

PayoffMatrix from_json_line(std::string_view line) {
  Json j;
  try {
    j = Json::parse(std::string(line));
  } catch (const Json::parse_error& e) {
    throw InvalidMatrix(std::string("malformed game record: ") + e.what());
  }
  if (!j.is_object()) throw InvalidMatrix("game record is not an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "name" && key != "row_actions" && key != "col_actions" &&
        key != "payoff_p1" && key != "payoff_p2") {
      throw InvalidMatrix("unknown field '" + key + "' in game record");
    }
  }
  try {
    return PayoffMatrix(j.at("name").get<std::string>(),
                        j.at("row_actions").get<std::vector<std::string>>(),
                        j.at("col_actions").get<std::vector<std::string>>(),
                        j.at("payoff_p1").get<PayoffTable>(),
                        j.at("payoff_p2").get<PayoffTable>());
  } catch (const Json::exception& e) {
    throw InvalidMatrix(std::string("bad game record: ") + e.what());
  }
}

std::vector<PayoffMatrix> read_games(std::istream& in) {
  std::vector<PayoffMatrix> games;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    games.push_back(from_json_line(line));
  }
  return games;
}

std::vector<PayoffMatrix> load_games(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open game file: " + path);
  return read_games(in);
}

void write_games(std::ostream& out, const std::vector<PayoffMatrix>& games) {
  for (const auto& g : games) out << to_json_line(g) << '\n';
}

}  // namespace nestplay::matrix
