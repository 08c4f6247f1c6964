#include "mctsbp/tictactoe.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <set>
#include <stdexcept>

namespace mctsbp {

namespace {

constexpr std::array<std::uint16_t, 8> kLines = {
    0b000'000'111, 0b000'111'000, 0b111'000'000, 0b001'001'001,
    0b010'010'010, 0b100'100'100, 0b100'010'001, 0b001'010'100,
};

constexpr std::uint16_t kFull = 0x1FF;

std::size_t encode(std::uint16_t x, std::uint16_t o) {
  std::size_t code = 0;
  for (int cell = 8; cell >= 0; --cell) {
    code = code * 3 + ((x >> cell) & 1u ? 1u : ((o >> cell) & 1u ? 2u : 0u));
  }
  return code;
}

// Solved values for every encodable board, filled by exhaustive search on
// first use. Unreachable boards keep -1.
class SolvedTable {
 public:
  SolvedTable() : values_(19683, -1.0) { solve(0, 0); }

  double at(std::uint16_t x, std::uint16_t o) const { return values_[encode(x, o)]; }

 private:
  double solve(std::uint16_t x, std::uint16_t o) {
    double& slot = values_[encode(x, o)];
    if (slot >= 0.0) return slot;
    TicTacToeState s(x, o);
    double out = s.outcome();
    if (out < 0.0) {
      const bool x_moves = std::popcount(x) == std::popcount(o);
      double best = x_moves ? -1.0 : 2.0;
      for (int c = 0; c < 9; ++c) {
        const auto bit = static_cast<std::uint16_t>(1u << c);
        if ((x | o) & bit) continue;
        double v = x_moves ? solve(static_cast<std::uint16_t>(x | bit), o)
                           : solve(x, static_cast<std::uint16_t>(o | bit));
        best = x_moves ? std::max(best, v) : std::min(best, v);
      }
      out = best;
    }
    values_[encode(x, o)] = out;
    return out;
  }

  std::vector<double> values_;
};

const SolvedTable& solved() {
  static const SolvedTable table;
  return table;
}

}  // namespace

TicTacToeState::TicTacToeState(std::uint16_t x_mask, std::uint16_t o_mask)
    : x_(x_mask), o_(o_mask) {
  if ((x_ & o_) != 0 || (x_ | o_) > kFull) {
    throw std::invalid_argument("tic-tac-toe: overlapping or out-of-range masks");
  }
  const int nx = std::popcount(x_);
  const int no = std::popcount(o_);
  if (nx != no && nx != no + 1) {
    throw std::invalid_argument("tic-tac-toe: piece counts are not reachable");
  }
}

std::shared_ptr<const TicTacToeState> TicTacToeState::parse(std::string_view board) {
  std::uint16_t x = 0;
  std::uint16_t o = 0;
  int cell = 0;
  for (char ch : board) {
    if (ch == ' ' || ch == '\n' || ch == '\t' || ch == '/' || ch == '|') continue;
    if (cell >= 9) throw std::invalid_argument("tic-tac-toe: more than nine cells");
    if (ch == 'X' || ch == 'x') {
      x = static_cast<std::uint16_t>(x | (1u << cell));
    } else if (ch == 'O' || ch == 'o') {
      o = static_cast<std::uint16_t>(o | (1u << cell));
    } else if (ch != '.' && ch != '-') {
      throw std::invalid_argument(std::string("tic-tac-toe: bad cell character '") + ch + "'");
    }
    ++cell;
  }
  if (cell != 9) throw std::invalid_argument("tic-tac-toe: expected nine cells");
  return std::make_shared<TicTacToeState>(x, o);
}

std::shared_ptr<const TicTacToeState> TicTacToeState::empty_board() {
  return std::make_shared<TicTacToeState>();
}

bool TicTacToeState::has_line(std::uint16_t mask) {
  return std::any_of(kLines.begin(), kLines.end(),
                     [mask](std::uint16_t line) { return (mask & line) == line; });
}

double TicTacToeState::outcome() const {
  if (has_line(x_)) return 1.0;
  if (has_line(o_)) return 0.0;
  if ((x_ | o_) == kFull) return 0.5;
  return -1.0;
}

PlayerRole TicTacToeState::to_move() const {
  return std::popcount(x_) == std::popcount(o_) ? PlayerRole::kMax : PlayerRole::kMin;
}

std::vector<Action> TicTacToeState::actions() const {
  std::vector<Action> out;
  if (is_terminal()) return out;
  for (int c = 0; c < 9; ++c) {
    if (((x_ | o_) >> c & 1u) == 0) out.push_back(c);
  }
  return out;
}

bool TicTacToeState::is_terminal() const { return outcome() >= 0.0; }

double TicTacToeState::terminal_return() const {
  double out = outcome();
  if (out < 0.0) throw std::logic_error("terminal_return on a non-terminal state");
  return out;
}

StatePtr TicTacToeState::apply(Action action) const {
  if (action < 0 || action > 8 || ((x_ | o_) >> action & 1u) || is_terminal()) {
    throw std::invalid_argument("tic-tac-toe: illegal action " + std::to_string(action));
  }
  const auto bit = static_cast<std::uint16_t>(1u << action);
  if (to_move() == PlayerRole::kMax) {
    return std::make_shared<TicTacToeState>(static_cast<std::uint16_t>(x_ | bit), o_);
  }
  return std::make_shared<TicTacToeState>(x_, static_cast<std::uint16_t>(o_ | bit));
}

std::uint64_t TicTacToeState::key() const { return encode(x_, o_); }

std::optional<double> TicTacToeState::known_value() const { return solved().at(x_, o_); }

std::string TicTacToeState::describe() const {
  std::string s;
  for (int c = 0; c < 9; ++c) {
    if (c == 3 || c == 6) s += '/';
    s += (x_ >> c & 1u) ? 'X' : ((o_ >> c & 1u) ? 'O' : '.');
  }
  return s;
}

std::vector<std::shared_ptr<const TicTacToeState>> reachable_tictactoe_positions() {
  std::set<std::pair<std::uint16_t, std::uint16_t>> seen;
  std::vector<std::shared_ptr<const TicTacToeState>> out;
  std::vector<std::shared_ptr<const TicTacToeState>> stack{TicTacToeState::empty_board()};
  seen.insert({0, 0});
  while (!stack.empty()) {
    auto s = stack.back();
    stack.pop_back();
    if (s->is_terminal()) continue;
    out.push_back(s);
    for (Action a : s->actions()) {
      auto child = std::static_pointer_cast<const TicTacToeState>(s->apply(a));
      if (seen.insert({child->x_mask(), child->o_mask()}).second) stack.push_back(child);
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::pair(a->x_mask(), a->o_mask()) < std::pair(b->x_mask(), b->o_mask());
  });
  return out;
}

}  // namespace mctsbp
