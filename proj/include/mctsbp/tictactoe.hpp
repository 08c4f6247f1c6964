#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mctsbp/game.hpp"

namespace mctsbp {

// 3x3 tic-tac-toe. X moves first and is the MAX player. Cells are numbered
// 0..8 row-major; an action is the index of an empty cell.
class TicTacToeState final : public GameState {
 public:
  TicTacToeState() = default;
  TicTacToeState(std::uint16_t x_mask, std::uint16_t o_mask);

  // Nine characters from {X, O, .}; whitespace is ignored. The side to move
  // follows from the piece counts.
  static std::shared_ptr<const TicTacToeState> parse(std::string_view board);
  static std::shared_ptr<const TicTacToeState> empty_board();

  PlayerRole to_move() const override;
  std::vector<Action> actions() const override;
  bool is_terminal() const override;
  double terminal_return() const override;
  StatePtr apply(Action action) const override;
  std::uint64_t key() const override;
  std::optional<double> known_value() const override;
  std::string describe() const override;

  std::uint16_t x_mask() const { return x_; }
  std::uint16_t o_mask() const { return o_; }
  // 1 if X has three in a row, 0 if O has, 0.5 for a full board, -1 otherwise.
  double outcome() const;

  static bool has_line(std::uint16_t mask);

 private:
  std::uint16_t x_ = 0;
  std::uint16_t o_ = 0;
};

// Every legal non-terminal position reachable from the empty board.
std::vector<std::shared_ptr<const TicTacToeState>> reachable_tictactoe_positions();

}  // namespace mctsbp
