#ifndef NESTPLAY_TICTACTOE_H_
#define NESTPLAY_TICTACTOE_H_

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nestplay/random.h"

namespace nestplay::ttt {

enum class Mark : std::uint8_t { kO, kX };
enum class Cell : std::uint8_t { kEmpty, kO, kX };
enum class Outcome { kOngoing, kWinO, kWinX, kDraw };
enum class GameValue { kLoss = -1, kDraw = 0, kWin = 1 };

inline constexpr int kCells = 9;

constexpr Mark other(Mark m) { return m == Mark::kO ? Mark::kX : Mark::kO; }
constexpr Cell cell_of(Mark m) { return m == Mark::kO ? Cell::kO : Cell::kX; }
constexpr char glyph(Mark m) { return m == Mark::kO ? 'O' : 'X'; }
constexpr bool is_terminal(Outcome o) { return o != Outcome::kOngoing; }

std::string_view outcome_name(Outcome o);

class IllegalMove : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GameOver : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class BoardParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// 3x3 board, cells row-major. The side to move is derived from the piece
// counts and the recorded first mover.
class Board {
 public:
  explicit Board(Mark first_mover = Mark::kO);

  // Validates piece counts against `first_mover` and that at most one side
  // has a completed line.
  static Board from_cells(const std::array<Cell, kCells>& cells,
                          Mark first_mover);

  Cell at(int cell) const { return cells_[static_cast<std::size_t>(cell)]; }
  const std::array<Cell, kCells>& cells() const { return cells_; }
  Mark to_move() const { return to_move_; }
  Mark first_mover() const { return first_mover_; }
  int count(Cell c) const;
  bool full() const { return count(Cell::kEmpty) == 0; }

  // Base-3 encoding of the cells; with to_move it identifies a position.
  std::uint32_t code() const;

  bool operator==(const Board&) const = default;

 private:
  friend Board apply_move(const Board& b, int cell);

  std::array<Cell, kCells> cells_{};
  Mark first_mover_ = Mark::kO;
  Mark to_move_ = Mark::kO;
};

std::vector<int> legal_moves(const Board& b);

// Returns the successor board; `b` is untouched.
Board apply_move(const Board& b, int cell);

Outcome check_winner(const Board& b);

struct MinimaxResult {
  int cell = -1;
  GameValue value = GameValue::kDraw;
};

// Exhaustive memoized search. Ties between optimal cells go to the lowest
// index.
MinimaxResult minimax_move(const Board& b, Mark mark);

// Game-theoretic value for the side to move.
GameValue minimax_value(const Board& b);

inline constexpr int kBoardTemplateCount = 4;

class UnknownTemplate : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

std::string render_board_prompt(const Board& b, int template_id,
                                bool include_win_conditions, Mark mark);

// 1 for a win by `trained_mark`, 0.5 for a draw, 0 otherwise.
double score_tictactoe(Outcome final, Mark trained_mark);

// Rows of three glyphs from {'.', 'O', 'X'} separated by single spaces,
// rows joined by '\n', no trailing newline.
std::string board_text(const Board& b);
Board parse_board(std::string_view text, Mark first_mover);

struct PromptState {
  Board board;
  Mark mark;
};

// Recovers the board and the acting mark from a rendered prompt.
PromptState parse_board_prompt(std::string_view prompt);

class Opponent {
 public:
  virtual ~Opponent() = default;
  virtual int choose_move(const Board& b, Rng& rng) = 0;
  virtual std::string name() const = 0;
};

class RandomOpponent : public Opponent {
 public:
  int choose_move(const Board& b, Rng& rng) override;
  std::string name() const override { return "random"; }
};

class MinimaxOpponent : public Opponent {
 public:
  int choose_move(const Board& b, Rng& rng) override;
  std::string name() const override { return "minimax"; }
};

// Minimax, except that with probability epsilon it plays a uniform random
// legal move.
class EpsilonMinimaxOpponent : public Opponent {
 public:
  explicit EpsilonMinimaxOpponent(double epsilon);
  int choose_move(const Board& b, Rng& rng) override;
  std::string name() const override;
  double epsilon() const { return epsilon_; }

 private:
  double epsilon_;
};

}  // namespace nestplay::ttt

#endif  // NESTPLAY_TICTACTOE_H_
