#include "nestplay/tictactoe.h"

#include <algorithm>
#include <sstream>

#include "nestplay/text_util.h"

namespace nestplay::ttt {
namespace {

constexpr std::array<std::array<int, 3>, 8> kLines{{
    {0, 1, 2}, {3, 4, 5}, {6, 7, 8},  // rows
    {0, 3, 6}, {1, 4, 7}, {2, 5, 8},  // columns
    {0, 4, 8}, {2, 4, 6},             // diagonals
}};

bool has_line(const std::array<Cell, kCells>& cells, Cell c) {
  return std::any_of(kLines.begin(), kLines.end(), [&](const auto& line) {
    return cells[line[0]] == c && cells[line[1]] == c && cells[line[2]] == c;
  });
}

constexpr int kPositions = 19683;  // 3^9
constexpr std::int8_t kUnknown = 2;

struct MemoTable {
  MemoTable() { values.fill(kUnknown); }
  std::array<std::int8_t, 2 * kPositions> values;
};

// One table per thread; every thread computes identical values.
MemoTable& memo() {
  thread_local MemoTable table;
  return table;
}

int search(const Board& b) {
  auto& slot = memo().values[2 * b.code() + (b.to_move() == Mark::kO ? 0 : 1)];
  if (slot != kUnknown) return slot;
  int best;
  switch (check_winner(b)) {
    case Outcome::kWinO:
    case Outcome::kWinX:
      best = -1;  // previous mover completed a line
      break;
    case Outcome::kDraw:
      best = 0;
      break;
    default:
      best = -2;
      for (int cell : legal_moves(b)) {
        best = std::max(best, -search(apply_move(b, cell)));
        if (best == 1) break;
      }
  }
  slot = static_cast<std::int8_t>(best);
  return best;
}

std::string grid(std::initializer_list<std::string_view> rows) {
  std::string out = "```\n";
  for (auto r : rows) {
    out += r;
    out += '\n';
  }
  return out + "```\n";
}

std::string win_conditions_block() {
  std::string s;
  s += "**Winning Conditions**:\n";
  s += "A player wins as soon as three of their own pieces form a line. A "
       "line can be:\n\n";
  s += "1. **Horizontal** (all three cells of one row)\n";
  s += "*Example: 'X' has completed the top row:*\n";
  s += grid({"X X X", ". O .", "O . ."});
  s += "2. **Vertical** (all three cells of one column)\n";
  s += "*Example: 'O' has completed the left column:*\n";
  s += grid({"O X .", "O X .", "O . X"});
  s += "3. **Diagonal** (corner to corner through the center)\n";
  s += "*Example: 'X' has completed the top-left to bottom-right diagonal:*\n";
  s += grid({"X O .", "O X .", ". . X"});
  s += "*Example: 'O' has completed the top-right to bottom-left diagonal:*\n";
  s += grid({"X X O", ". O .", "O . X"});
  s += "**Draw Condition**:\n";
  s += "If every cell is occupied and nobody has a line, the game is drawn.\n";
  return s;
}

std::string rules_intro(int template_id) {
  switch (template_id) {
    case 0:
      return "##Game Rules: TicTacToe\n"
             "**Objective**: Get three of your pieces in a row before your "
             "opponent does.\n"
             "**Player Pieces**:\n"
             "- One player uses 'O'\n"
             "- The other player uses 'X'\n"
             "- Empty Slot: '.'\n"
             "**How to Play**:\n"
             "1. The board is a 3x3 grid. Cells are numbered 0 to 8, left to "
             "right and top to bottom.\n"
             "2. Players alternate, placing one piece in any empty cell.\n";
    case 1:
      return "You are playing TicTacToe against another player.\n"
             "The 3x3 board uses '.' for an empty cell, 'O' and 'X' for the "
             "two players' pieces.\n"
             "Cell numbers: 0 1 2 on the top row, 3 4 5 in the middle, 6 7 8 "
             "at the bottom.\n"
             "On your turn you must pick one empty cell. Occupied cells cannot "
             "be chosen.\n";
    case 2:
      return "##TicTacToe\n"
             "Two players take turns. Each turn the current player puts one "
             "piece on a free cell of a 3x3 board.\n"
             "Index the cells row by row starting from 0 in the top-left "
             "corner and ending at 8 in the bottom-right corner.\n"
             "Complete a row, column or diagonal with your own pieces to "
             "win.\n";
    default:
      return "Game: TicTacToe (3x3)\n"
             "Rules:\n"
             "- Pieces are 'O' and 'X'; '.' marks a free cell.\n"
             "- Moves are cell numbers 0-8, counted row by row from the top "
             "left.\n"
             "- Only free cells are legal moves.\n"
             "- Three of one piece in a straight line wins.\n";
  }
}

}  // namespace

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kOngoing: return "ongoing";
    case Outcome::kWinO: return "win_o";
    case Outcome::kWinX: return "win_x";
    case Outcome::kDraw: return "draw";
  }
  return "?";
}

Board::Board(Mark first_mover)
    : first_mover_(first_mover), to_move_(first_mover) {
  cells_.fill(Cell::kEmpty);
}

Board Board::from_cells(const std::array<Cell, kCells>& cells,
                        Mark first_mover) {
  Board b(first_mover);
  b.cells_ = cells;
  const int first = b.count(cell_of(first_mover));
  const int second = b.count(cell_of(other(first_mover)));
  if (first - second != 0 && first - second != 1) {
    throw std::invalid_argument("board piece counts inconsistent with first mover");
  }
  if (has_line(cells, Cell::kO) && has_line(cells, Cell::kX)) {
    throw std::invalid_argument("board has lines for both players");
  }
  b.to_move_ = first == second ? first_mover : other(first_mover);
  return b;
}

int Board::count(Cell c) const {
  return static_cast<int>(std::count(cells_.begin(), cells_.end(), c));
}

std::uint32_t Board::code() const {
  std::uint32_t v = 0;
  for (Cell c : cells_) v = v * 3 + static_cast<std::uint32_t>(c);
  return v;
}

std::vector<int> legal_moves(const Board& b) {
  std::vector<int> out;
  for (int i = 0; i < kCells; ++i) {
    if (b.at(i) == Cell::kEmpty) out.push_back(i);
  }
  return out;
}

Board apply_move(const Board& b, int cell) {
  if (is_terminal(check_winner(b))) throw GameOver("game is already over");
  if (cell < 0 || cell >= kCells) {
    throw IllegalMove("cell " + std::to_string(cell) + " is off the board");
  }
  if (b.at(cell) != Cell::kEmpty) {
    throw IllegalMove("cell " + std::to_string(cell) + " is occupied");
  }
  Board next = b;
  next.cells_[static_cast<std::size_t>(cell)] = cell_of(b.to_move_);
  next.to_move_ = other(b.to_move_);
  return next;
}

Outcome check_winner(const Board& b) {
  if (has_line(b.cells(), Cell::kO)) return Outcome::kWinO;
  if (has_line(b.cells(), Cell::kX)) return Outcome::kWinX;
  return b.full() ? Outcome::kDraw : Outcome::kOngoing;
}

GameValue minimax_value(const Board& b) {
  return static_cast<GameValue>(search(b));
}

MinimaxResult minimax_move(const Board& b, Mark mark) {
  if (is_terminal(check_winner(b))) throw GameOver("minimax on a finished game");
  if (mark != b.to_move()) {
    throw std::invalid_argument("minimax_move: it is not this mark's turn");
  }
  MinimaxResult best{-1, GameValue::kLoss};
  int best_value = -2;
  for (int cell : legal_moves(b)) {
    const int v = -search(apply_move(b, cell));
    if (v > best_value) {
      best_value = v;
      best = {cell, static_cast<GameValue>(v)};
    }
  }
  return best;
}

std::string board_text(const Board& b) {
  std::string out;
  for (int r = 0; r < 3; ++r) {
    if (r) out += '\n';
    for (int c = 0; c < 3; ++c) {
      if (c) out += ' ';
      switch (b.at(3 * r + c)) {
        case Cell::kEmpty: out += '.'; break;
        case Cell::kO: out += 'O'; break;
        case Cell::kX: out += 'X'; break;
      }
    }
  }
  return out;
}

Board parse_board(std::string_view text, Mark first_mover) {
  const auto rows = split(text, '\n');
  if (rows.size() != 3) {
    throw BoardParseError("expected 3 rows, got " + std::to_string(rows.size()));
  }
  std::array<Cell, kCells> cells{};
  for (int r = 0; r < 3; ++r) {
    const std::string& row = rows[static_cast<std::size_t>(r)];
    if (row.size() != 5 || row[1] != ' ' || row[3] != ' ') {
      throw BoardParseError("malformed row " + std::to_string(r + 1) + ": '" +
                            row + "'");
    }
    for (int c = 0; c < 3; ++c) {
      Cell cell;
      switch (row[static_cast<std::size_t>(2 * c)]) {
        case '.': cell = Cell::kEmpty; break;
        case 'O': cell = Cell::kO; break;
        case 'X': cell = Cell::kX; break;
        default:
          throw BoardParseError("bad glyph in row " + std::to_string(r + 1));
      }
      cells[static_cast<std::size_t>(3 * r + c)] = cell;
    }
  }
  try {
    return Board::from_cells(cells, first_mover);
  } catch (const std::invalid_argument& e) {
    throw BoardParseError(e.what());
  }
}

std::string render_board_prompt(const Board& b, int template_id,
                                bool include_win_conditions, Mark mark) {
  if (template_id < 0 || template_id >= kBoardTemplateCount) {
    throw UnknownTemplate("board prompt template " + std::to_string(template_id));
  }
  std::vector<std::string> moves;
  for (int m : legal_moves(b)) moves.push_back(std::to_string(m));

  std::string out = rules_intro(template_id);
  if (include_win_conditions) out += win_conditions_block();
  out += "\n## Current Game State\n";
  out += board_text(b);
  out += "\n\n## Your Turn\n";
  out += "You are playing '";
  out += glyph(mark);
  out += "'.\n";
  out += "The available actions are: " + join(moves, ", ") + ".";
  return out;
}

PromptState parse_board_prompt(std::string_view prompt) {
  constexpr std::string_view kState = "## Current Game State\n";
  constexpr std::string_view kMark = "You are playing '";
  const auto s = prompt.find(kState);
  const auto m = prompt.find(kMark);
  if (s == std::string_view::npos || m == std::string_view::npos ||
      m + kMark.size() >= prompt.size()) {
    throw BoardParseError("prompt has no game state section");
  }
  const std::string_view grid_text = prompt.substr(s + kState.size(), 17);
  const char g = prompt[m + kMark.size()];
  if (g != 'O' && g != 'X') throw BoardParseError("prompt names no mark");
  const Mark mark = g == 'O' ? Mark::kO : Mark::kX;
  // Equal counts mean the acting mark opened the game.
  const auto own = std::count(grid_text.begin(), grid_text.end(), g);
  const auto opp = std::count(grid_text.begin(), grid_text.end(), g == 'O' ? 'X' : 'O');
  const Mark first = own == opp ? mark : other(mark);
  return {parse_board(grid_text, first), mark};
}

double score_tictactoe(Outcome final, Mark trained_mark) {
  switch (final) {
    case Outcome::kOngoing:
      throw std::invalid_argument("score_tictactoe: game is not finished");
    case Outcome::kDraw:
      return 0.5;
    case Outcome::kWinO:
      return trained_mark == Mark::kO ? 1.0 : 0.0;
    case Outcome::kWinX:
      return trained_mark == Mark::kX ? 1.0 : 0.0;
  }
  return 0.0;
}

int RandomOpponent::choose_move(const Board& b, Rng& rng) {
  const auto moves = legal_moves(b);
  return moves[uniform_index(rng, moves.size())];
}

int MinimaxOpponent::choose_move(const Board& b, Rng&) {
  return minimax_move(b, b.to_move()).cell;
}

EpsilonMinimaxOpponent::EpsilonMinimaxOpponent(double epsilon)
    : epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("epsilon must lie in [0, 1]");
  }
}

int EpsilonMinimaxOpponent::choose_move(const Board& b, Rng& rng) {
  // Draw the coin unconditionally so the stream does not depend on epsilon.
  const bool explore = uniform_unit(rng) < epsilon_;
  if (explore) {
    const auto moves = legal_moves(b);
    return moves[uniform_index(rng, moves.size())];
  }
  return minimax_move(b, b.to_move()).cell;
}

std::string EpsilonMinimaxOpponent::name() const {
  std::ostringstream out;
  out << "minimax_eps(" << epsilon_ << ")";
  return out.str();
}

}  // namespace nestplay::ttt
