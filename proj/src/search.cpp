#include "mctsbp/search.hpp"

#include <cmath>
#include <stdexcept>

namespace mctsbp {

std::string to_string(TreePolicy policy) {
  return policy == TreePolicy::kUcb1 ? "ucb1" : "puct";
}

TreePolicy parse_tree_policy(const std::string& text) {
  if (text == "ucb1" || text == "UCB1") return TreePolicy::kUcb1;
  if (text == "puct" || text == "PUCT") return TreePolicy::kPuct;
  throw std::invalid_argument("unknown tree policy '" + text + "' (ucb1, puct)");
}

void SearchConfig::validate() const {
  if (simulations < 1) throw std::invalid_argument("search: simulations must be >= 1");
  if (!(exploration >= 0.0) || !std::isfinite(exploration)) {
    throw std::invalid_argument("search: exploration must be finite and >= 0");
  }
  if (const auto* oracle = std::get_if<NoisyOracle>(&evaluator); oracle && oracle->noise_sd < 0) {
    throw std::invalid_argument("search: noise_sd must be >= 0");
  }
  mctsbp::validate(backup);
}

double selection_score(const SelectionStat& child, PlayerRole parent_role,
                       std::int64_t parent_visits, TreePolicy policy, double exploration) {
  const double q = child.n > 0 ? child.q : kUnvisitedValue;
  const double exploit = parent_role == PlayerRole::kMax ? q : 1.0 - q;
  const double denom = static_cast<double>(child.n) + 1.0;
  const double parent = static_cast<double>(parent_visits);
  if (policy == TreePolicy::kUcb1) {
    const double log_n = parent > 0.0 ? std::log(parent) : 0.0;
    return exploit + exploration * std::sqrt(log_n / denom);
  }
  return exploit + exploration * child.prior * std::sqrt(parent) / denom;
}

std::size_t select_child(std::span<const SelectionStat> children, PlayerRole parent_role,
                         std::int64_t parent_visits, TreePolicy policy, double exploration) {
  if (children.empty()) throw std::invalid_argument("select_child: node has no children");
  std::size_t best = 0;
  double best_score = selection_score(children[0], parent_role, parent_visits, policy, exploration);
  for (std::size_t i = 1; i < children.size(); ++i) {
    double s = selection_score(children[i], parent_role, parent_visits, policy, exploration);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

namespace {

void average_update(SearchNode& node, double r, const BackupStrategy& strategy) {
  const std::int64_t n = node.visits;
  if (const auto* erwa = std::get_if<ErwaBackup>(&strategy)) {
    node.q = erwa_update(node.q, r, n, erwa->alpha);
  } else if (const auto* feedback = std::get_if<FeedbackBackup>(&strategy)) {
    node.q = feedback_update(node.acc, r, n, *feedback);
  } else if (const auto* mono = std::get_if<MonotoneBackup>(&strategy)) {
    node.q = monotone_update(node.acc, r, n, *mono->profile);
  } else {
    node.q = standard_update(node.q, r, n);
  }
}

}  // namespace

void backpropagate(std::vector<SearchNode>& nodes, std::span<const std::int32_t> path, double r,
                   const BackupStrategy& strategy) {
  if (!recomputes_from_children(strategy)) {
    for (std::int32_t id : path) {
      average_update(nodes[id], r, strategy);
      ++nodes[id].visits;
    }
    return;
  }

  SearchNode& leaf = nodes[path.back()];
  leaf.q = standard_update(leaf.q, r, leaf.visits);
  for (std::int32_t id : path) ++nodes[id].visits;

  std::vector<ChildStat> stats;
  for (auto it = path.rbegin() + 1; it != path.rend(); ++it) {
    SearchNode& parent = nodes[*it];
    stats.clear();
    for (std::int32_t c = 0; c < parent.child_count; ++c) {
      const SearchNode& child = nodes[parent.first_child + c];
      stats.push_back({child.q, child.visits});
    }
    if (const auto* coulom = std::get_if<CoulomBackup>(&strategy)) {
      parent.q = coulom_parent_update(stats, parent.role, coulom->x, coulom->y, parent.visits);
    } else {
      const auto& softmax = std::get<SoftmaxBackup>(strategy);
      parent.q = softmax_parent_update(stats, parent.role, *softmax.profile, parent.visits);
    }
  }
}

SearchTree::SearchTree(StatePtr root, SearchConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  if (!root) throw std::invalid_argument("search: null root");
  if (root->is_terminal()) throw std::invalid_argument("search: root is terminal");
  SearchNode node;
  node.role = root->to_move();
  node.state = std::move(root);
  nodes_.push_back(std::move(node));
  nodes_.reserve(static_cast<std::size_t>(config_.simulations) * 4 + 16);
}

std::span<const SearchNode> SearchTree::children(const SearchNode& node) const {
  if (node.child_count == 0) return {};
  return {nodes_.data() + node.first_child, static_cast<std::size_t>(node.child_count)};
}

const StatePtr& SearchTree::state_of(std::int32_t id) {
  SearchNode& node = nodes_[id];
  if (!node.state) {
    node.state = nodes_[node.parent].state->apply(node.action);
    node.terminal = node.state->is_terminal();
  }
  return node.state;
}

void SearchTree::expand(std::int32_t id) {
  const StatePtr state = state_of(id);
  const auto actions = state->actions();
  const auto priors = state->priors();
  const auto first = static_cast<std::int32_t>(nodes_.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    SearchNode child;
    child.role = opponent(state->to_move());
    child.action = actions[i];
    child.prior = priors[i];
    child.parent = id;
    nodes_.push_back(std::move(child));
  }
  SearchNode& node = nodes_[id];
  node.first_child = first;
  node.child_count = static_cast<std::int32_t>(actions.size());
  node.expanded = true;
}

void SearchTree::simulate_once() {
  path_.clear();
  std::int32_t id = 0;
  path_.push_back(id);
  while (nodes_[id].expanded) {
    const SearchNode& node = nodes_[id];
    scratch_.clear();
    for (std::int32_t c = 0; c < node.child_count; ++c) {
      const SearchNode& child = nodes_[node.first_child + c];
      scratch_.push_back({child.q, child.visits, child.prior});
    }
    auto pick = select_child(scratch_, node.role, node.visits, config_.policy, config_.exploration);
    id = node.first_child + static_cast<std::int32_t>(pick);
    state_of(id);
    path_.push_back(id);
  }

  double r;
  const StatePtr& state = state_of(id);
  if (state->is_terminal()) {
    nodes_[id].terminal = true;
    r = state->terminal_return();
  } else {
    // Expand on first visit and evaluate the leaf itself; its children are
    // chosen by the tree policy on later passes.
    StatePtr keep = state;
    expand(id);
    r = evaluate(*keep, config_.evaluator, rng_);
  }
  if (tracing_) trace_.emplace_back(path_, r);
  backpropagate(nodes_, path_, r, config_.backup);
}

SearchResult SearchTree::run() {
  for (int i = 0; i < config_.simulations; ++i) simulate_once();
  return result();
}

SearchResult SearchTree::result() const {
  SearchResult out;
  const SearchNode& root = nodes_.front();
  out.root_q = root.q;
  std::int64_t best_visits = -1;
  for (const SearchNode& child : children(root)) {
    out.visit_distribution.emplace_back(child.action, child.visits);
    if (child.visits > best_visits) {
      best_visits = child.visits;
      out.best_action = child.action;
    }
  }
  const SearchNode* node = &root;
  while (node->expanded) {
    const SearchNode* next = nullptr;
    for (const SearchNode& child : children(*node)) {
      if (child.visits > 0 && (next == nullptr || child.visits > next->visits)) next = &child;
    }
    if (next == nullptr) break;
    out.principal_variation.push_back(next->action);
    node = next;
  }
  return out;
}

SearchResult run_search(StatePtr root, const SearchConfig& config) {
  SearchTree tree(std::move(root), config);
  return tree.run();
}

}  // namespace mctsbp
