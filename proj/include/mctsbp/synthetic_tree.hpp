#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mctsbp/game.hpp"

namespace mctsbp {

// Complete b-ary min-max tree with binary leaf returns. The root is a MAX
// node; roles alternate by depth.
struct SyntheticTreeSpec {
  int branching = 4;
  int depth = 8;
  double leaf_win_prob = 0.75;
  std::optional<int> trap_level;
  int trap_count = 0;
  // Prior weight of a trap root action relative to 1 for the others. The
  // refuting reply below the trap gets weight 1 / trap_prior, so a large
  // value both tempts the root player and hides the refutation.
  double trap_prior = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Eagerly materialized tree shared (read-only) by all of its states.
class SyntheticTree {
 public:
  SyntheticTree(SyntheticTreeSpec spec, std::uint64_t salt);

  const SyntheticTreeSpec& spec() const { return spec_; }
  std::uint64_t salt() const { return salt_; }
  const std::vector<int>& trap_actions() const { return traps_; }
  // Refuting reply at depth 1 for each trap action (aligned with trap_actions).
  const std::vector<int>& refutations() const { return refutations_; }
  double value(int depth, std::uint64_t index) const { return values_[depth][index]; }
  double leaf(std::uint64_t index) const { return values_.back()[index]; }
  std::uint64_t node_count() const;

  // Rewrites the subtree below root action `action` so the player to move
  // there (MIN) wins by force within `plies` plies. `strategy_seed` picks the
  // winning reply at each MIN node on the forcing line.
  void overwrite_with_trap(int action, int plies, std::uint64_t strategy_seed);
  void recompute_values();

 private:
  void force_loss(int depth, std::uint64_t index, int plies_left, std::uint64_t strategy_seed);
  void zero_subtree(int depth, std::uint64_t index);

  SyntheticTreeSpec spec_;
  std::uint64_t salt_;
  std::vector<int> traps_;
  std::vector<int> refutations_;
  // values_[depth][index]; values_[depth] has branching^depth entries.
  std::vector<std::vector<double>> values_;
};

class SyntheticState final : public GameState {
 public:
  SyntheticState(std::shared_ptr<const SyntheticTree> tree, int depth, std::uint64_t index)
      : tree_(std::move(tree)), depth_(depth), index_(index) {}

  PlayerRole to_move() const override {
    return depth_ % 2 == 0 ? PlayerRole::kMax : PlayerRole::kMin;
  }
  std::vector<Action> actions() const override;
  bool is_terminal() const override { return depth_ == tree_->spec().depth; }
  double terminal_return() const override;
  StatePtr apply(Action action) const override;
  std::vector<double> priors() const override;
  std::uint64_t key() const override;
  std::optional<double> known_value() const override { return tree_->value(depth_, index_); }
  std::string describe() const override;

  const SyntheticTree& tree() const { return *tree_; }
  std::shared_ptr<const SyntheticTree> tree_ptr() const { return tree_; }
  int depth() const { return depth_; }
  std::uint64_t index() const { return index_; }

 private:
  std::shared_ptr<const SyntheticTree> tree_;
  int depth_;
  std::uint64_t index_;
};

// Largest tree generate_synthetic_tree will materialize.
inline constexpr std::uint64_t kMaxSyntheticNodes = 10'000'000;

// Root of the tree described by `spec`. When spec.trap_level is set and
// trap_count > 0, leaf draws are re-salted until, after trap injection, every
// non-trap root action is non-losing for the root player.
std::shared_ptr<const SyntheticState> generate_synthetic_tree(const SyntheticTreeSpec& spec);

struct TrapInjection {
  std::shared_ptr<const SyntheticState> root;
  int trap_action;
};

// Copies the tree under `root` and turns one seeded non-trap root action into
// a level-k trap. Throws std::invalid_argument when the tree is too shallow
// and std::runtime_error when no sibling keeps a non-losing value.
TrapInjection inject_trap(const SyntheticState& root, int k, std::uint64_t seed);

}  // namespace mctsbp
