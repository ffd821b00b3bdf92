#ifndef NESTPLAY_MATRIX_GAME_H_
#define NESTPLAY_MATRIX_GAME_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nestplay::matrix {

using PayoffTable = std::vector<std::vector<long long>>;

enum class PlayerRole { kP1, kP2 };

std::string_view role_name(PlayerRole role);

class InvalidMatrix : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Two-player normal-form game with integer payoffs. Row player is P1.
class PayoffMatrix {
 public:
  PayoffMatrix(std::string name, std::vector<std::string> row_actions,
               std::vector<std::string> col_actions, PayoffTable payoff_p1,
               PayoffTable payoff_p2);

  // Sub-game left by strategy elimination; a player may keep one action.
  static PayoffMatrix reduced(std::string name,
                              std::vector<std::string> row_actions,
                              std::vector<std::string> col_actions,
                              PayoffTable payoff_p1, PayoffTable payoff_p2);

  const std::string& name() const { return name_; }
  const std::vector<std::string>& row_actions() const { return row_actions_; }
  const std::vector<std::string>& col_actions() const { return col_actions_; }
  const PayoffTable& payoff_p1() const { return payoff_p1_; }
  const PayoffTable& payoff_p2() const { return payoff_p2_; }

  std::size_t rows() const { return row_actions_.size(); }
  std::size_t cols() const { return col_actions_.size(); }
  const std::vector<std::string>& actions(PlayerRole role) const {
    return role == PlayerRole::kP1 ? row_actions_ : col_actions_;
  }

  long long p1(std::size_t r, std::size_t c) const { return payoff_p1_[r][c]; }
  long long p2(std::size_t r, std::size_t c) const { return payoff_p2_[r][c]; }

  bool operator==(const PayoffMatrix&) const = default;

 private:
  PayoffMatrix(std::size_t min_actions, std::string name,
               std::vector<std::string> row_actions,
               std::vector<std::string> col_actions, PayoffTable payoff_p1,
               PayoffTable payoff_p2);

  std::string name_;
  std::vector<std::string> row_actions_;
  std::vector<std::string> col_actions_;
  PayoffTable payoff_p1_;
  PayoffTable payoff_p2_;
};

struct ActionProfile {
  std::size_t row_action = 0;
  std::size_t col_action = 0;

  auto operator<=>(const ActionProfile&) const = default;
};

// Affine payoff rewrite e -> sign * e + offset, applied to both tables.
struct TransformSpec {
  int sign = 1;
  int offset = 0;

  TransformSpec() = default;
  TransformSpec(int sign, int offset);

  bool operator==(const TransformSpec&) const = default;
};

// The nine named games used for training, with fixed canonical payoffs.
std::vector<PayoffMatrix> build_canonical_games();

std::optional<PayoffMatrix> find_game(const std::vector<PayoffMatrix>& games,
                                      std::string_view name);

PayoffMatrix transform_payoffs(const PayoffMatrix& m, const TransformSpec& t);

// Pure profiles where each player weakly best-responds to the other.
// Sorted by (row, col).
std::vector<ActionProfile> enumerate_pure_nash(const PayoffMatrix& m);

// Iterated elimination of strictly dominated pure strategies. Each pass
// removes the lowest-index dominated row, then the lowest-index dominated
// column, until neither player has one.
PayoffMatrix iesds_reduce(const PayoffMatrix& m);

class UnknownTemplate : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

inline constexpr int kMatrixTemplateCount = 4;

std::string render_matrix_prompt(const PayoffMatrix& m, int template_id,
                                 PlayerRole role, std::uint64_t rng_seed);

// 1 when `action` is the acting player's component of some pure equilibrium.
int score_matrix_action(const PayoffMatrix& m, PlayerRole role,
                        std::size_t action);

// Earliest whole-word occurrence of one of the role's action labels.
std::optional<std::size_t> parse_matrix_action(const PayoffMatrix& m,
                                               PlayerRole role,
                                               std::string_view text);

// One JSON object per line: name, row_actions, col_actions, payoff_p1,
// payoff_p2.
std::string to_json_line(const PayoffMatrix& m);
PayoffMatrix from_json_line(std::string_view line);
std::vector<PayoffMatrix> read_games(std::istream& in);
std::vector<PayoffMatrix> load_games(const std::string& path);
void write_games(std::ostream& out, const std::vector<PayoffMatrix>& games);

}  // namespace nestplay::matrix

#endif  // NESTPLAY_MATRIX_GAME_H_
