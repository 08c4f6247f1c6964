#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mctsbp/rng.hpp"

namespace mctsbp {

enum class PlayerRole { kMax, kMin };

constexpr PlayerRole opponent(PlayerRole role) {
  return role == PlayerRole::kMax ? PlayerRole::kMin : PlayerRole::kMax;
}

using Action = int;

class GameState;
using StatePtr = std::shared_ptr<const GameState>;

// Immutable game position. Returns are in [0, 1] from MAX's point of view,
// draws map to 0.5. Implementations must be safe to share across threads.
class GameState {
 public:
  virtual ~GameState() = default;

  virtual PlayerRole to_move() const = 0;
  // Ascending action identifiers; empty iff terminal.
  virtual std::vector<Action> actions() const = 0;
  virtual bool is_terminal() const = 0;
  // Only valid on terminal states; throws std::logic_error otherwise.
  virtual double terminal_return() const = 0;
  virtual StatePtr apply(Action action) const = 0;
  // Per-action prior aligned with actions(); uniform unless overridden.
  virtual std::vector<double> priors() const;
  // Stable identifier used to key evaluator noise.
  virtual std::uint64_t key() const = 0;
  // Exact minimax value when the game can answer it without search.
  virtual std::optional<double> known_value() const { return std::nullopt; }
  virtual std::string describe() const = 0;
};

class MinimaxCeilingExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kMinimaxNodeCeiling = 10'000'000;

// Exhaustive game-theoretic value. Throws MinimaxCeilingExceeded rather than
// returning a truncated value when more than `node_ceiling` nodes are visited.
double minimax_value(const GameState& state,
                     std::uint64_t node_ceiling = kMinimaxNodeCeiling);

// Value of every child of `state` (aligned with actions()).
std::vector<double> minimax_child_values(const GameState& state,
                                         std::uint64_t node_ceiling = kMinimaxNodeCeiling);

struct RandomRollout {};

// Stand-in for a learned value function: the exact value plus clamped
// Gaussian noise. The draw is a pure function of (state key, seed).
struct NoisyOracle {
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

using Evaluator = std::variant<RandomRollout, NoisyOracle>;

double rollout(const GameState& state, Rng& rng);
double noisy_oracle_value(const GameState& state, const NoisyOracle& oracle);
double evaluate(const GameState& state, const Evaluator& evaluator, Rng& rng);

std::string to_string(const Evaluator& evaluator);

}  // namespace mctsbp
