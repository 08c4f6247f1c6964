#pragma once

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "mctsbp/search.hpp"
#include "mctsbp/synthetic_tree.hpp"

namespace mctsbp {

// Every game pair draws a fresh tree: the tree seed is derived from
// spec.seed, the match seed and the pair index.
struct SyntheticGame {
  SyntheticTreeSpec spec;
};
struct TicTacToeGame {};

using GameDescriptor = std::variant<SyntheticGame, TicTacToeGame>;

StatePtr make_start_position(const GameDescriptor& game, std::uint64_t position_seed);

struct MatchConfig {
  GameDescriptor game = TicTacToeGame{};
  SearchConfig engine_a;
  SearchConfig engine_b;
  int games = 400;
  int sims_per_move = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class Outcome { kA, kB, kDraw };

const char* to_string(Outcome outcome);

struct GameRecord {
  int index = 0;
  std::uint64_t position_seed = 0;
  bool a_first = true;
  Outcome outcome = Outcome::kDraw;
  std::vector<Action> moves;
};

struct MatchResult {
  int wins_a = 0;
  int wins_b = 0;
  int draws = 0;
  double win_rate_a = 0.5;
  std::pair<double, double> ci95{0.0, 1.0};
  std::vector<GameRecord> games;

  int total() const { return wins_a + wins_b + draws; }
};

// Wilson score interval for a proportion observed over n trials.
std::pair<double, double> wilson_interval(double proportion, int n, double z = 1.959963984540054);

// Plays one game from `start`. The engine to move searches with
// sims_per_move simulations and a seed derived from its own seed, `seed` and
// the ply number, then plays its best action. Fully determined by inputs.
Outcome play_game(const SearchConfig& engine_a, const SearchConfig& engine_b, StatePtr start,
                  std::uint64_t seed, bool a_moves_first, int sims_per_move,
                  std::vector<Action>* moves = nullptr);

// Games are played in mirrored pairs (same start position and seeds, colours
// swapped). An odd game count is rounded up. Results do not depend on
// `workers`.
MatchResult run_match(const MatchConfig& config, int workers = 1);

enum class ProfileKind { kMonotone, kSoftmax };

const char* to_string(ProfileKind kind);

// Win-rate of a Monotone (w0 = 1) or Softmax (w0 = 0) engine built from
// `knots` against Standard-backup MCTS. engine_a of `base` supplies the tree
// policy and evaluator for both sides. A horizon of 0 means sims_per_move.
double winrate_objective(const std::vector<double>& knots, ProfileKind kind,
                         const MatchConfig& base, int horizon = 0, int workers = 1);

// The candidate/baseline match used by winrate_objective.
MatchConfig profile_match(const std::vector<double>& knots, ProfileKind kind,
                          const MatchConfig& base, int horizon = 0);

}  // namespace mctsbp
