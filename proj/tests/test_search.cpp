#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "mctsbp/search.hpp"
#include "mctsbp/synthetic_tree.hpp"
#include "mctsbp/tictactoe.hpp"

using namespace mctsbp;

namespace {

std::shared_ptr<const WeightProfile> profile(double w0, int horizon) {
  return std::make_shared<const WeightProfile>(std::vector<double>{-10, -10, -4, -4, -4, -10},
                                               horizon, w0);
}

std::vector<BackupStrategy> all_strategies(int horizon) {
  return {StandardBackup{},
          ErwaBackup{0.01},
          CoulomBackup{2.0, 16},
          FeedbackBackup{FeedbackShape::kGBY, 64.0, horizon},
          MonotoneBackup{profile(1.0, horizon)},
          SoftmaxBackup{profile(0.0, horizon)}};
}

SearchNode make_node(PlayerRole role, std::int32_t parent, double q, std::int64_t visits) {
  SearchNode n;
  n.role = role;
  n.parent = parent;
  n.q = q;
  n.visits = visits;
  return n;
}

}  // namespace

TEST_CASE("selection scores by hand") {
  const SelectionStat c{0.6, 3, 0.5};
  CHECK(selection_score(c, PlayerRole::kMax, 0, TreePolicy::kUcb1, 1.0) == doctest::Approx(0.6));
  CHECK(selection_score(c, PlayerRole::kMax, 20, TreePolicy::kUcb1, 1.0) ==
        doctest::Approx(0.6 + std::sqrt(std::log(20.0) / 4.0)));
  CHECK(selection_score(c, PlayerRole::kMin, 20, TreePolicy::kUcb1, 1.0) ==
        doctest::Approx(0.4 + std::sqrt(std::log(20.0) / 4.0)));
  CHECK(selection_score(c, PlayerRole::kMax, 16, TreePolicy::kPuct, 1.0) == doctest::Approx(0.6 + 0.5 * 4.0 / 4.0));
  CHECK(selection_score(c, PlayerRole::kMin, 16, TreePolicy::kPuct, 2.0) == doctest::Approx(0.4 + 2.0 * 0.5 * 4.0 / 4.0));
  // An unvisited child counts as 0.5 whatever its stored value.
  const SelectionStat fresh{0.99, 0, 1.0};
  CHECK(selection_score(fresh, PlayerRole::kMax, 9, TreePolicy::kPuct, 1.0) == doctest::Approx(0.5 + 3.0));
}

TEST_CASE("child selection") {
  const std::vector<SelectionStat> tied = {{0.5, 2, 1.0}, {0.5, 2, 1.0}, {0.5, 2, 1.0}};
  CHECK(select_child(tied, PlayerRole::kMax, 6, TreePolicy::kUcb1, 1.0) == 0);
  const std::vector<SelectionStat> kids = {{0.2, 5, 1.0}, {0.7, 5, 1.0}, {0.4, 50, 1.0}};
  CHECK(select_child(kids, PlayerRole::kMax, 60, TreePolicy::kUcb1, 0.0) == 1);
  CHECK(select_child(kids, PlayerRole::kMin, 60, TreePolicy::kUcb1, 0.0) == 0);
  const std::vector<SelectionStat> single = {{0.1, 4, 1.0}};
  CHECK(select_child(single, PlayerRole::kMax, 5, TreePolicy::kPuct, 3.0) == 0);
  CHECK_THROWS_AS(select_child({}, PlayerRole::kMax, 1, TreePolicy::kUcb1, 1.0), std::invalid_argument);

  // A constant shift of every visited Q leaves the choice unchanged.
  for (double shift : {-0.15, 0.1, 0.25}) {
    for (auto policy : {TreePolicy::kUcb1, TreePolicy::kPuct}) {
      for (auto role : {PlayerRole::kMax, PlayerRole::kMin}) {
        auto moved = kids;
        for (auto& k : moved) k.q += shift;
        CHECK(select_child(moved, role, 60, policy, 0.7) == select_child(kids, role, 60, policy, 0.7));
      }
    }
  }
}

TEST_CASE("backpropagation on hand-built paths") {
  SUBCASE("one-node path") {
    for (auto strategy : all_strategies(100)) {
      std::vector<SearchNode> nodes = {make_node(PlayerRole::kMax, -1, 0.5, 0)};
      const std::vector<std::int32_t> path = {0};
      backpropagate(nodes, path, 1.0, strategy);
      CHECK(nodes[0].visits == 1);
      CHECK(nodes[0].q == 1.0);
    }
  }
  SUBCASE("a single child carries its value to the parent") {
    std::vector<SearchNode> nodes = {make_node(PlayerRole::kMax, -1, 0.3, 4),
                                     make_node(PlayerRole::kMin, 0, 0.3, 3)};
    nodes[0].first_child = 1;
    nodes[0].child_count = 1;
    nodes[0].expanded = true;
    const std::vector<std::int32_t> path = {0, 1};
    backpropagate(nodes, path, 1.0, SoftmaxBackup{profile(0.0, 100)});
    CHECK(nodes[1].visits == 4);
    CHECK(nodes[1].q == doctest::Approx(0.475));
    CHECK(nodes[0].visits == 5);
    CHECK(nodes[0].q == doctest::Approx(0.475));
  }
  SUBCASE("interior nodes average their own returns") {
    std::vector<SearchNode> nodes = {make_node(PlayerRole::kMax, -1, 0.5, 1),
                                     make_node(PlayerRole::kMin, 0, 0.5, 0)};
    const std::vector<std::int32_t> path = {0, 1};
    backpropagate(nodes, path, 0.0, StandardBackup{});
    CHECK(nodes[0].q == 0.25);
    CHECK(nodes[1].q == 0.0);
  }
}

TEST_CASE("search finds an immediate win with every strategy") {
  auto pos = TicTacToeState::parse("XX./OO./...");
  for (auto strategy : all_strategies(2000)) {
    SearchConfig cfg;
    cfg.simulations = 2000;
    cfg.backup = strategy;
    cfg.seed = 3;
    CHECK_MESSAGE(run_search(pos, cfg).best_action == 2, strategy_name(strategy));
  }
}

TEST_CASE("search is deterministic in its seed") {
  auto root = TicTacToeState::empty_board();
  SearchConfig cfg;
  cfg.simulations = 3000;
  cfg.seed = 17;
  const auto a = run_search(root, cfg);
  const auto b = run_search(root, cfg);
  CHECK(a.visit_distribution == b.visit_distribution);
  CHECK(a.root_q == b.root_q);
  CHECK(a.principal_variation == b.principal_variation);
  cfg.seed = 18;
  CHECK(run_search(root, cfg).visit_distribution != a.visit_distribution);
}

TEST_CASE("standard backup equals the mean of each node's recorded returns") {
  auto root = TicTacToeState::parse("X../.O./...");
  SearchConfig cfg;
  cfg.simulations = 1500;
  cfg.policy = TreePolicy::kUcb1;
  cfg.seed = 5;
  SearchTree tree(root, cfg);
  tree.record_trace(true);
  tree.run();
  std::map<std::int32_t, std::pair<double, std::int64_t>> seen;
  for (const auto& [path, r] : tree.trace()) {
    for (std::int32_t id : path) {
      seen[id].first += r;
      ++seen[id].second;
    }
  }
  const auto& nodes = tree.nodes();
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const auto it = seen.find(static_cast<std::int32_t>(id));
    if (it == seen.end()) {
      CHECK(nodes[id].visits == 0);
      continue;
    }
    CHECK(nodes[id].visits == it->second.second);
    CHECK(nodes[id].q == doctest::Approx(it->second.first / it->second.second).epsilon(1e-12));
  }
}

TEST_CASE("visits are conserved and values stay in [0, 1]") {
  SyntheticTreeSpec spec;
  spec.branching = 4;
  spec.depth = 6;
  spec.seed = 8;
  auto root = generate_synthetic_tree(spec);
  for (auto strategy : all_strategies(2000)) {
    for (auto evaluator : {Evaluator{RandomRollout{}}, Evaluator{NoisyOracle{0.4, 2}}}) {
      SearchConfig cfg;
      cfg.simulations = 2000;
      cfg.backup = strategy;
      cfg.evaluator = evaluator;
      SearchTree tree(root, cfg);
      tree.run();
      CHECK(tree.root().visits == 2000);
      for (const auto& node : tree.nodes()) {
        CHECK(node.q >= 0.0);
        CHECK(node.q <= 1.0);
        if (!node.expanded) continue;
        std::int64_t sum = 0;
        for (const auto& c : tree.children(node)) sum += c.visits;
        CHECK(node.visits == sum + 1);
      }
    }
  }
}

TEST_CASE("every strategy converges on a small tree") {
  // First seed whose depth-2 tree has exactly one winning root action.
  std::shared_ptr<const SyntheticState> root;
  int winning = -1;
  for (std::uint64_t seed = 0; winning < 0; ++seed) {
    SyntheticTreeSpec spec;
    spec.branching = 4;
    spec.depth = 2;
    spec.leaf_win_prob = 0.7;
    spec.seed = seed;
    root = generate_synthetic_tree(spec);
    const auto v = minimax_child_values(*root);
    int wins = 0;
    for (std::size_t a = 0; a < v.size(); ++a) {
      if (v[a] == 1.0) {
        ++wins;
        winning = static_cast<int>(a);
      }
    }
    if (wins != 1) winning = -1;
  }
  for (auto strategy : all_strategies(10000)) {
    for (auto policy : {TreePolicy::kUcb1, TreePolicy::kPuct}) {
      SearchConfig cfg;
      cfg.simulations = 10000;
      cfg.policy = policy;
      cfg.backup = strategy;
      cfg.seed = 1;
      const auto res = run_search(root, cfg);
      CHECK_MESSAGE(res.best_action == winning, strategy_name(strategy));
    }
  }
}

TEST_CASE("invalid searches are rejected") {
  SearchConfig cfg;
  CHECK_THROWS_AS(run_search(TicTacToeState::parse("XXX/OO./..."), cfg), std::invalid_argument);
  cfg.simulations = 0;
  CHECK_THROWS_AS(run_search(TicTacToeState::empty_board(), cfg), std::invalid_argument);
  cfg.simulations = 10;
  cfg.exploration = -1.0;
  CHECK_THROWS_AS(run_search(TicTacToeState::empty_board(), cfg), std::invalid_argument);
  CHECK(parse_tree_policy(to_string(TreePolicy::kUcb1)) == TreePolicy::kUcb1);
  CHECK(parse_tree_policy(to_string(TreePolicy::kPuct)) == TreePolicy::kPuct);
}
