#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mctsbp/tictactoe.hpp"
#include "mctsbp/tournament.hpp"

using namespace mctsbp;

namespace {

SearchConfig engine(BackupStrategy backup, std::uint64_t seed) {
  SearchConfig cfg;
  cfg.backup = std::move(backup);
  cfg.seed = seed;
  return cfg;
}

MatchConfig trap_match(int games, int sims) {
  MatchConfig m;
  SyntheticTreeSpec spec;
  spec.branching = 4;
  spec.depth = 6;
  spec.trap_level = 3;
  spec.trap_count = 1;
  spec.trap_prior = 5.0;
  spec.seed = 12;
  m.game = SyntheticGame{spec};
  m.engine_a = engine(StandardBackup{}, 1);
  m.engine_b = engine(ErwaBackup{0.05}, 2);
  m.games = games;
  m.sims_per_move = sims;
  m.seed = 9;
  return m;
}

}  // namespace

TEST_CASE("games come in mirrored pairs") {
  const auto res = run_match(trap_match(7, 50));
  REQUIRE(res.games.size() == 8);
  CHECK(res.total() == 8);
  for (std::size_t i = 0; i < res.games.size(); i += 2) {
    CHECK(res.games[i].position_seed == res.games[i + 1].position_seed);
    CHECK(res.games[i].a_first != res.games[i + 1].a_first);
    CHECK(res.games[i].index == static_cast<int>(i));
  }
  CHECK(res.games[0].position_seed != res.games[2].position_seed);
}

TEST_CASE("swapping the engines swaps the results") {
  auto m = trap_match(20, 60);
  const auto ab = run_match(m);
  std::swap(m.engine_a, m.engine_b);
  const auto ba = run_match(m);
  CHECK(ab.wins_a == ba.wins_b);
  CHECK(ab.wins_b == ba.wins_a);
  CHECK(ab.draws == ba.draws);
  CHECK(ab.win_rate_a == doctest::Approx(1.0 - ba.win_rate_a));
}

TEST_CASE("results do not depend on the worker count") {
  const auto m = trap_match(12, 80);
  const auto one = run_match(m, 1);
  for (int workers : {2, 3, 8}) {
    const auto many = run_match(m, workers);
    REQUIRE(many.games.size() == one.games.size());
    for (std::size_t i = 0; i < one.games.size(); ++i) {
      CHECK(many.games[i].moves == one.games[i].moves);
      CHECK(many.games[i].outcome == one.games[i].outcome);
    }
    CHECK(many.win_rate_a == one.win_rate_a);
  }
}

TEST_CASE("Wilson interval") {
  const auto zero = wilson_interval(0.0, 100);
  CHECK(zero.first == doctest::Approx(0.0));
  const double z2 = 1.959963984540054 * 1.959963984540054;
  CHECK(zero.second == doctest::Approx(z2 / (100.0 + z2)));
  CHECK(wilson_interval(0.5, 0) == std::pair<double, double>{0.0, 1.0});
  const auto half = wilson_interval(0.5, 100);
  CHECK(half.first + half.second == doctest::Approx(1.0));
  double prev = 1.0;
  for (int n : {100, 400, 1600}) {
    const auto ci = wilson_interval(0.3, n);
    CHECK(ci.first < 0.3);
    CHECK(ci.second > 0.3);
    CHECK(ci.second - ci.first < prev);
    prev = ci.second - ci.first;
  }
  // Coverage of a binomial proportion by simulation.
  std::mt19937_64 gen(1);
  std::binomial_distribution<int> draw(200, 0.3);
  int covered = 0;
  const int reps = 4000;
  for (int i = 0; i < reps; ++i) {
    const auto ci = wilson_interval(draw(gen) / 200.0, 200);
    covered += ci.first <= 0.3 && 0.3 <= ci.second;
  }
  CHECK(covered / static_cast<double>(reps) == doctest::Approx(0.95).epsilon(0.02));
}

TEST_CASE("self-play is balanced") {
  MatchConfig m;
  m.engine_a = engine(StandardBackup{}, 1);
  m.engine_b = engine(StandardBackup{}, 2);
  m.games = 100;
  m.sims_per_move = 100;
  m.seed = 3;
  const auto res = run_match(m);
  CHECK(res.ci95.first <= 0.5);
  CHECK(res.ci95.second >= 0.5);
}

TEST_CASE("a large budget beats a single simulation") {
  // play_game gives both sides the same budget, so alternate moves by hand.
  const auto m = trap_match(20, 2000);
  int strong_wins = 0;
  for (std::uint64_t g = 0; g < 20; ++g) {
    StatePtr state = make_start_position(m.game, g);
    const bool strong_first = g % 2 == 0;
    for (int ply = 0; !state->is_terminal(); ++ply) {
      const bool strong_turn = (ply % 2 == 0) == strong_first;
      SearchConfig cfg = engine(StandardBackup{}, mix_seed(g, ply));
      cfg.simulations = strong_turn ? 2000 : 1;
      state = state->apply(run_search(state, cfg).best_action);
    }
    const double r = state->terminal_return();
    strong_wins += strong_first ? r == 1.0 : r == 0.0;
  }
  MESSAGE("strong wins " << strong_wins << " / 20");
  CHECK(strong_wins >= 14);
}

TEST_CASE("strong tic-tac-toe self-play is drawn") {
  MatchConfig m;
  m.engine_a = engine(StandardBackup{}, 1);
  m.engine_b = engine(StandardBackup{}, 2);
  m.games = 20;
  m.sims_per_move = 2000;
  m.seed = 5;
  const auto res = run_match(m);
  CHECK(res.draws >= 19);
}

TEST_CASE("profile matches") {
  MatchConfig base;
  base.engine_a = engine(StandardBackup{}, 1);
  base.engine_a.policy = TreePolicy::kUcb1;
  base.engine_a.exploration = 0.8;
  base.engine_b = engine(ErwaBackup{0.3}, 2);
  base.games = 100;
  base.sims_per_move = 150;
  base.seed = 4;

  const auto mono = profile_match({-10, -10, -10}, ProfileKind::kMonotone, base);
  const auto* backup = std::get_if<MonotoneBackup>(&mono.engine_a.backup);
  REQUIRE(backup != nullptr);
  CHECK(backup->profile->horizon() == 150);
  CHECK(backup->profile->w0() == 1.0);
  CHECK(std::holds_alternative<StandardBackup>(mono.engine_b.backup));
  CHECK(mono.engine_b.policy == TreePolicy::kUcb1);
  CHECK(mono.engine_b.exploration == 0.8);

  // Nearly constant weights are indistinguishable from the baseline.
  const auto res = run_match(mono);
  CHECK(res.ci95.first <= 0.5);
  CHECK(res.ci95.second >= 0.5);

  const auto soft = profile_match({-700, -700}, ProfileKind::kSoftmax, base, 400);
  const auto* sb = std::get_if<SoftmaxBackup>(&soft.engine_a.backup);
  REQUIRE(sb != nullptr);
  CHECK(sb->profile->horizon() == 400);
  CHECK(sb->profile->w0() == 0.0);
  base.games = 10;
  const double v = winrate_objective({-700, -700}, ProfileKind::kSoftmax, base);
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
  CHECK_THROWS_AS(winrate_objective({0.0, 800.0}, ProfileKind::kSoftmax, base), std::invalid_argument);
}

TEST_CASE("invalid matches") {
  auto m = trap_match(0, 10);
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = trap_match(2, 0);
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  CHECK_THROWS_AS(run_match(trap_match(2, 0)), std::invalid_argument);
}
