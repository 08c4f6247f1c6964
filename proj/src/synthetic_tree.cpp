#include "mctsbp/synthetic_tree.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace mctsbp {

namespace {

std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

constexpr int kMaxSaltAttempts = 4096;

bool non_trap_actions_safe(const SyntheticTree& tree, bool require_all) {
  const auto& traps = tree.trap_actions();
  bool any_safe = false;
  for (int a = 0; a < tree.spec().branching; ++a) {
    if (std::find(traps.begin(), traps.end(), a) != traps.end()) continue;
    bool safe = tree.value(1, static_cast<std::uint64_t>(a)) >= 0.5;
    any_safe = any_safe || safe;
    if (require_all && !safe) return false;
  }
  return any_safe;
}

int pick_fresh_action(const SyntheticTree& tree, std::uint64_t bits) {
  std::vector<int> free;
  for (int a = 0; a < tree.spec().branching; ++a) {
    const auto& traps = tree.trap_actions();
    if (std::find(traps.begin(), traps.end(), a) == traps.end()) free.push_back(a);
  }
  if (free.empty()) throw std::runtime_error("inject_trap: every root action is already a trap");
  return free[static_cast<std::size_t>(bits % free.size())];
}

}  // namespace

void SyntheticTreeSpec::validate() const {
  if (branching < 2) throw std::invalid_argument("synthetic tree: branching must be >= 2");
  if (depth < 1) throw std::invalid_argument("synthetic tree: depth must be >= 1");
  if (!(leaf_win_prob >= 0.0 && leaf_win_prob <= 1.0)) {
    throw std::invalid_argument("synthetic tree: leaf_win_prob must lie in [0, 1]");
  }
  if (trap_count < 0) throw std::invalid_argument("synthetic tree: trap_count must be >= 0");
  if (trap_level) {
    if (*trap_level < 1 || *trap_level > depth - 1) {
      throw std::invalid_argument("synthetic tree: trap_level must satisfy 1 <= k <= depth - 1");
    }
    if (trap_count >= branching) {
      throw std::invalid_argument("synthetic tree: trap_count must leave a non-trap root action");
    }
  } else if (trap_count > 0) {
    throw std::invalid_argument("synthetic tree: trap_count > 0 requires trap_level");
  }
  if (!(trap_prior > 0.0)) throw std::invalid_argument("synthetic tree: trap_prior must be > 0");
  std::uint64_t nodes = 0;
  std::uint64_t level = 1;
  for (int d = 0; d <= depth; ++d) {
    nodes += level;
    if (nodes > kMaxSyntheticNodes) {
      throw std::invalid_argument("synthetic tree: more than 1e7 nodes");
    }
    level *= static_cast<std::uint64_t>(branching);
  }
}

SyntheticTree::SyntheticTree(SyntheticTreeSpec spec, std::uint64_t salt)
    : spec_(std::move(spec)), salt_(salt) {
  values_.resize(static_cast<std::size_t>(spec_.depth) + 1);
  for (int d = 0; d <= spec_.depth; ++d) {
    values_[d].assign(ipow(static_cast<std::uint64_t>(spec_.branching), d), 0.0);
  }
  auto& leaves = values_.back();
  const std::uint64_t stream = mix_seed(spec_.seed, salt_);
  for (std::uint64_t i = 0; i < leaves.size(); ++i) {
    leaves[i] = to_unit(mix_seed(stream, i)) < spec_.leaf_win_prob ? 1.0 : 0.0;
  }
  recompute_values();
}

std::uint64_t SyntheticTree::node_count() const {
  std::uint64_t n = 0;
  for (const auto& level : values_) n += level.size();
  return n;
}

void SyntheticTree::recompute_values() {
  const auto b = static_cast<std::uint64_t>(spec_.branching);
  for (int d = spec_.depth - 1; d >= 0; --d) {
    const bool maximize = d % 2 == 0;
    const auto& below = values_[d + 1];
    auto& level = values_[d];
    for (std::uint64_t i = 0; i < level.size(); ++i) {
      double best = below[i * b];
      for (std::uint64_t c = 1; c < b; ++c) {
        best = maximize ? std::max(best, below[i * b + c]) : std::min(best, below[i * b + c]);
      }
      level[i] = best;
    }
  }
}

void SyntheticTree::zero_subtree(int depth, std::uint64_t index) {
  const auto b = static_cast<std::uint64_t>(spec_.branching);
  std::uint64_t lo = index;
  std::uint64_t width = 1;
  for (int d = depth; d <= spec_.depth; ++d) {
    std::fill_n(values_[d].begin() + static_cast<std::ptrdiff_t>(lo), width, 0.0);
    lo *= b;
    width *= b;
  }
}

void SyntheticTree::force_loss(int depth, std::uint64_t index, int plies_left,
                               std::uint64_t strategy_seed) {
  if (plies_left == 0 || depth == spec_.depth) {
    zero_subtree(depth, index);
    return;
  }
  const auto b = static_cast<std::uint64_t>(spec_.branching);
  if (depth % 2 == 1) {
    // MIN to move: one designated winning reply.
    auto reply = mix_seed(strategy_seed, static_cast<std::uint64_t>(depth), index) % b;
    force_loss(depth + 1, index * b + reply, plies_left - 1, strategy_seed);
  } else {
    for (std::uint64_t c = 0; c < b; ++c) {
      force_loss(depth + 1, index * b + c, plies_left - 1, strategy_seed);
    }
  }
}

void SyntheticTree::overwrite_with_trap(int action, int plies, std::uint64_t strategy_seed) {
  if (action < 0 || action >= spec_.branching) {
    throw std::invalid_argument("inject_trap: action out of range");
  }
  if (plies < 1 || plies + 1 > spec_.depth) {
    throw std::invalid_argument("inject_trap: tree depth must be >= k + 1");
  }
  force_loss(1, static_cast<std::uint64_t>(action), plies, strategy_seed);
  traps_.push_back(action);
  refutations_.push_back(static_cast<int>(
      mix_seed(strategy_seed, std::uint64_t{1}, static_cast<std::uint64_t>(action)) %
      static_cast<std::uint64_t>(spec_.branching)));
  recompute_values();
}

std::vector<Action> SyntheticState::actions() const {
  if (is_terminal()) return {};
  std::vector<Action> out(static_cast<std::size_t>(tree_->spec().branching));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Action>(i);
  return out;
}

double SyntheticState::terminal_return() const {
  if (!is_terminal()) throw std::logic_error("terminal_return on a non-terminal state");
  return tree_->leaf(index_);
}

StatePtr SyntheticState::apply(Action action) const {
  if (is_terminal() || action < 0 || action >= tree_->spec().branching) {
    throw std::invalid_argument("synthetic tree: illegal action");
  }
  return std::make_shared<SyntheticState>(
      tree_, depth_ + 1,
      index_ * static_cast<std::uint64_t>(tree_->spec().branching) +
          static_cast<std::uint64_t>(action));
}

std::vector<double> SyntheticState::priors() const {
  const auto& traps = tree_->trap_actions();
  const double weight = tree_->spec().trap_prior;
  if (depth_ > 1 || traps.empty() || weight == 1.0) return GameState::priors();
  std::vector<double> p(static_cast<std::size_t>(tree_->spec().branching), 1.0);
  if (depth_ == 0) {
    for (int a : traps) p[static_cast<std::size_t>(a)] = weight;
  } else {
    auto it = std::find(traps.begin(), traps.end(), static_cast<int>(index_));
    if (it == traps.end()) return GameState::priors();
    p[static_cast<std::size_t>(tree_->refutations()[static_cast<std::size_t>(it - traps.begin())])] =
        1.0 / weight;
  }
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return p;
}

std::uint64_t SyntheticState::key() const {
  return mix_seed(tree_->spec().seed, tree_->salt(), static_cast<std::uint64_t>(depth_), index_);
}

std::string SyntheticState::describe() const {
  std::ostringstream os;
  os << "synthetic(b=" << tree_->spec().branching << ", d=" << tree_->spec().depth
     << ", depth=" << depth_ << ", index=" << index_ << ")";
  return os.str();
}

std::shared_ptr<const SyntheticState> generate_synthetic_tree(const SyntheticTreeSpec& spec) {
  spec.validate();
  const bool trapped = spec.trap_level && spec.trap_count > 0;
  if (!trapped) {
    auto tree = std::make_shared<SyntheticTree>(spec, 0);
    return std::make_shared<SyntheticState>(std::move(tree), 0, 0);
  }
  for (std::uint64_t salt = 0; salt < kMaxSaltAttempts; ++salt) {
    auto tree = std::make_shared<SyntheticTree>(spec, salt);
    for (int t = 0; t < spec.trap_count; ++t) {
      std::uint64_t bits = mix_seed(spec.seed, salt, static_cast<std::uint64_t>(t));
      int action = pick_fresh_action(*tree, bits);
      tree->overwrite_with_trap(action, *spec.trap_level, splitmix64(bits));
    }
    if (non_trap_actions_safe(*tree, /*require_all=*/true)) {
      return std::make_shared<SyntheticState>(std::move(tree), 0, 0);
    }
  }
  throw std::runtime_error(
      "synthetic tree: no salt produced a trap tree with safe non-trap actions; "
      "raise leaf_win_prob");
}

TrapInjection inject_trap(const SyntheticState& root, int k, std::uint64_t seed) {
  if (root.depth() != 0) throw std::invalid_argument("inject_trap: state is not a tree root");
  auto tree = std::make_shared<SyntheticTree>(root.tree());
  int action = pick_fresh_action(*tree, splitmix64(seed));
  tree->overwrite_with_trap(action, k, mix_seed(seed, 1));
  if (!non_trap_actions_safe(*tree, /*require_all=*/false)) {
    throw std::runtime_error("inject_trap: no sibling action keeps a non-losing value");
  }
  return {std::make_shared<SyntheticState>(std::move(tree), 0, 0), action};
}

}  // namespace mctsbp
