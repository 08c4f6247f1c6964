#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mctsbp/backup.hpp"
#include "mctsbp/game.hpp"
#include "mctsbp/rng.hpp"

namespace mctsbp {

enum class TreePolicy { kUcb1, kPuct };

std::string to_string(TreePolicy policy);
TreePolicy parse_tree_policy(const std::string& text);

struct SearchConfig {
  int simulations = 1000;
  TreePolicy policy = TreePolicy::kPuct;
  double exploration = 0.5;
  BackupStrategy backup = StandardBackup{};
  Evaluator evaluator = RandomRollout{};
  std::uint64_t seed = 0;

  void validate() const;
};

// Arena node. Children of a node occupy the contiguous index range
// [first_child, first_child + child_count).
struct SearchNode {
  std::int64_t visits = 0;
  double q = 0.5;
  double prior = 1.0;
  PlayerRole role = PlayerRole::kMax;
  Action action = -1;
  std::int32_t parent = -1;
  std::int32_t first_child = -1;
  std::int32_t child_count = 0;
  bool expanded = false;
  bool terminal = false;
  BackupAccumulator acc;
  StatePtr state;  // materialized on first selection
};

struct SearchResult {
  Action best_action = -1;
  double root_q = 0.0;
  std::vector<std::pair<Action, std::int64_t>> visit_distribution;
  std::vector<Action> principal_variation;
};

// Value assumed for a child that has not been visited yet.
inline constexpr double kUnvisitedValue = 0.5;

struct SelectionStat {
  double q = kUnvisitedValue;
  std::int64_t n = 0;
  double prior = 1.0;
};

// Tree-policy score of one child as seen by the parent's mover; at MIN
// parents the exploitation term is 1 - Q.
double selection_score(const SelectionStat& child, PlayerRole parent_role,
                       std::int64_t parent_visits, TreePolicy policy, double exploration);

// Index of the highest-scoring child, ties to the lowest index. Throws
// std::invalid_argument on an empty child list.
std::size_t select_child(std::span<const SelectionStat> children, PlayerRole parent_role,
                         std::int64_t parent_visits, TreePolicy policy, double exploration);

// Applies return `r` to the nodes on `path` (root first, evaluated node
// last). Every node's visit count grows by one.
void backpropagate(std::vector<SearchNode>& nodes, std::span<const std::int32_t> path, double r,
                   const BackupStrategy& strategy);

// One search tree. Not thread-safe; distinct trees may run concurrently.
class SearchTree {
 public:
  SearchTree(StatePtr root, SearchConfig config);

  SearchResult run();
  void simulate_once();
  SearchResult result() const;

  const std::vector<SearchNode>& nodes() const { return nodes_; }
  const SearchNode& root() const { return nodes_.front(); }
  std::span<const SearchNode> children(const SearchNode& node) const;
  const SearchConfig& config() const { return config_; }

  // When enabled, every simulation's node path and return is logged.
  void record_trace(bool enabled) { tracing_ = enabled; }
  const std::vector<std::pair<std::vector<std::int32_t>, double>>& trace() const { return trace_; }

 private:
  void expand(std::int32_t id);
  const StatePtr& state_of(std::int32_t id);

  SearchConfig config_;
  std::vector<SearchNode> nodes_;
  Rng rng_;
  std::vector<std::int32_t> path_;
  std::vector<SelectionStat> scratch_;
  bool tracing_ = false;
  std::vector<std::pair<std::vector<std::int32_t>, double>> trace_;
};

// Throws std::invalid_argument on a terminal root or a zero budget.
SearchResult run_search(StatePtr root, const SearchConfig& config);

}  // namespace mctsbp
