#include "mctsbp/game.hpp"

#include <algorithm>
#include <sstream>

namespace mctsbp {

std::vector<double> GameState::priors() const {
  auto n = actions().size();
  return std::vector<double>(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
}

namespace {

double minimax_rec(const GameState& state, std::uint64_t& visited, std::uint64_t ceiling) {
  if (++visited > ceiling) {
    throw MinimaxCeilingExceeded("minimax: node ceiling of " + std::to_string(ceiling) +
                                 " exceeded");
  }
  if (state.is_terminal()) return state.terminal_return();
  const bool maximize = state.to_move() == PlayerRole::kMax;
  double best = maximize ? -1.0 : 2.0;
  for (Action a : state.actions()) {
    double v = minimax_rec(*state.apply(a), visited, ceiling);
    best = maximize ? std::max(best, v) : std::min(best, v);
  }
  return best;
}

}  // namespace

double minimax_value(const GameState& state, std::uint64_t node_ceiling) {
  std::uint64_t visited = 0;
  return minimax_rec(state, visited, node_ceiling);
}

std::vector<double> minimax_child_values(const GameState& state, std::uint64_t node_ceiling) {
  std::vector<double> out;
  std::uint64_t visited = 1;
  for (Action a : state.actions()) {
    out.push_back(minimax_rec(*state.apply(a), visited, node_ceiling));
  }
  return out;
}

double rollout(const GameState& state, Rng& rng) {
  if (state.is_terminal()) return state.terminal_return();
  auto acts = state.actions();
  StatePtr current = state.apply(acts[rng.index(acts.size())]);
  while (!current->is_terminal()) {
    acts = current->actions();
    current = current->apply(acts[rng.index(acts.size())]);
  }
  return current->terminal_return();
}

double noisy_oracle_value(const GameState& state, const NoisyOracle& oracle) {
  auto known = state.known_value();
  double exact = known ? *known : minimax_value(state);
  if (oracle.noise_sd <= 0.0) return exact;
  double noise = oracle.noise_sd * hashed_normal(mix_seed(oracle.seed, state.key()));
  return std::clamp(exact + noise, 0.0, 1.0);
}

double evaluate(const GameState& state, const Evaluator& evaluator, Rng& rng) {
  if (std::holds_alternative<NoisyOracle>(evaluator)) {
    return noisy_oracle_value(state, std::get<NoisyOracle>(evaluator));
  }
  return rollout(state, rng);
}

std::string to_string(const Evaluator& evaluator) {
  if (const auto* oracle = std::get_if<NoisyOracle>(&evaluator)) {
    std::ostringstream os;
    os << "noisy_oracle(sd=" << oracle->noise_sd << ")";
    return os.str();
  }
  return "random_rollout";
}

}  // namespace mctsbp
