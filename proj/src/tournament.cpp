#include "mctsbp/tournament.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "mctsbp/tictactoe.hpp"

namespace mctsbp {

StatePtr make_start_position(const GameDescriptor& game, std::uint64_t position_seed) {
  if (const auto* synthetic = std::get_if<SyntheticGame>(&game)) {
    SyntheticTreeSpec spec = synthetic->spec;
    spec.seed = mix_seed(synthetic->spec.seed, position_seed);
    return generate_synthetic_tree(spec);
  }
  return TicTacToeState::empty_board();
}

void MatchConfig::validate() const {
  if (games < 1) throw std::invalid_argument("match: games must be >= 1");
  if (sims_per_move < 1) throw std::invalid_argument("match: sims_per_move must be >= 1");
  engine_a.validate();
  engine_b.validate();
  if (const auto* synthetic = std::get_if<SyntheticGame>(&game)) synthetic->spec.validate();
}

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::kA: return "A";
    case Outcome::kB: return "B";
    case Outcome::kDraw: return "draw";
  }
  return "?";
}

const char* to_string(ProfileKind kind) {
  return kind == ProfileKind::kMonotone ? "monotone" : "softmax";
}

std::pair<double, double> wilson_interval(double proportion, int n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double nn = n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (proportion + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(proportion * (1.0 - proportion) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

Outcome play_game(const SearchConfig& engine_a, const SearchConfig& engine_b, StatePtr start,
                  std::uint64_t seed, bool a_moves_first, int sims_per_move,
                  std::vector<Action>* moves) {
  if (start->is_terminal()) throw std::invalid_argument("play_game: start is terminal");
  const PlayerRole first_role = start->to_move();
  StatePtr state = std::move(start);
  for (std::uint64_t ply = 0; !state->is_terminal(); ++ply) {
    const bool first_to_move = ply % 2 == 0;
    const bool a_to_move = first_to_move == a_moves_first;
    SearchConfig config = a_to_move ? engine_a : engine_b;
    config.simulations = sims_per_move;
    config.seed = mix_seed(config.seed, seed, ply);
    const Action action = run_search(state, config).best_action;
    if (moves) moves->push_back(action);
    state = state->apply(action);
  }
  const double r = state->terminal_return();
  const double first_score = first_role == PlayerRole::kMax ? r : 1.0 - r;
  const double a_score = a_moves_first ? first_score : 1.0 - first_score;
  if (a_score > 0.5) return Outcome::kA;
  if (a_score < 0.5) return Outcome::kB;
  return Outcome::kDraw;
}

MatchResult run_match(const MatchConfig& config, int workers) {
  config.validate();
  const int games = config.games + config.games % 2;
  std::vector<GameRecord> records(static_cast<std::size_t>(games));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int g = next++; g < games; g = next++) {
      try {
        const auto pair = static_cast<std::uint64_t>(g / 2);
        GameRecord& rec = records[static_cast<std::size_t>(g)];
        rec.index = g;
        rec.position_seed = mix_seed(config.seed, pair);
        rec.a_first = g % 2 == 0;
        StatePtr start = make_start_position(config.game, rec.position_seed);
        rec.outcome = play_game(config.engine_a, config.engine_b, std::move(start),
                                mix_seed(config.seed, pair, 0x9a3eULL), rec.a_first,
                                config.sims_per_move, &rec.moves);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(workers, 1, games);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  MatchResult result;
  for (const auto& rec : records) {
    switch (rec.outcome) {
      case Outcome::kA: ++result.wins_a; break;
      case Outcome::kB: ++result.wins_b; break;
      case Outcome::kDraw: ++result.draws; break;
    }
  }
  result.win_rate_a = (result.wins_a + 0.5 * result.draws) / games;
  result.ci95 = wilson_interval(result.win_rate_a, games);
  result.games = std::move(records);
  return result;
}

MatchConfig profile_match(const std::vector<double>& knots, ProfileKind kind,
                          const MatchConfig& base, int horizon) {
  const int n = horizon > 0 ? horizon : base.sims_per_move;
  auto profile = std::make_shared<const WeightProfile>(
      build_weight_table(knots, n, kind == ProfileKind::kMonotone ? 1.0 : 0.0));
  MatchConfig match = base;
  if (kind == ProfileKind::kMonotone) {
    match.engine_a.backup = MonotoneBackup{profile};
  } else {
    match.engine_a.backup = SoftmaxBackup{profile};
  }
  match.engine_b = base.engine_a;
  match.engine_b.backup = StandardBackup{};
  return match;
}

double winrate_objective(const std::vector<double>& knots, ProfileKind kind,
                         const MatchConfig& base, int horizon, int workers) {
  return run_match(profile_match(knots, kind, base, horizon), workers).win_rate_a;
}

}  // namespace mctsbp
