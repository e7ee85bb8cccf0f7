#pragma once

// Random belief trees built by hand, plus a whole-tree recursive bound
// evaluation to compare incremental backups against.

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "pdespot/domains/tiger.hpp"
#include "pdespot/tree/operations.hpp"

namespace synthetic {

using Model = pdespot::domains::Tiger;
using Node = pdespot::BeliefNode<Model>;
using Tree = pdespot::BeliefTree<Model>;

inline std::vector<pdespot::Scenario<Model::State>> scenarios(std::size_t k) {
  std::vector<pdespot::Scenario<Model::State>> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back({static_cast<pdespot::ScenarioId>(i), Model::State{}, i + 1});
  return out;
}

inline pdespot::Bounds random_bounds(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> value(-10.0, 10.0);
  const double a = value(rng);
  const double b = value(rng);
  return {std::max(a, b), std::min(a, b)};
}

/// Gives `node` between 1 and `max_actions` branches, each splitting the
/// node's scenarios over up to `max_obs` children with random initial
/// bounds, and marks it expanded.
inline void expand_randomly(Tree& tree, Node& node, std::mt19937_64& rng, int max_actions, int max_obs,
                            double gamma) {
  std::uniform_int_distribution<int> actions(1, max_actions);
  std::uniform_real_distribution<double> reward(-2.0, 2.0);
  const int action_count = actions(rng);
  std::int64_t created = 0;
  for (int a = 0; a < action_count; ++a) {
    auto branch = std::make_unique<pdespot::ActionBranch<Model>>();
    branch->action = a;
    branch->mean_step_reward = reward(rng);
    const int obs = std::min<int>(std::uniform_int_distribution<int>(1, max_obs)(rng),
                                  static_cast<int>(node.scenario_count()));
    std::vector<std::vector<std::uint32_t>> groups(static_cast<std::size_t>(obs));
    for (std::uint32_t i = 0; i < node.scenario_count(); ++i) {
      // First `obs` scenarios seed each group so none is empty.
      const auto g = i < static_cast<std::uint32_t>(obs)
                         ? i
                         : static_cast<std::uint32_t>(std::uniform_int_distribution<int>(0, obs - 1)(rng));
      groups[g].push_back(i);
    }
    for (int z = 0; z < obs; ++z) {
      auto child = std::make_unique<Node>();
      child->id = tree.allocate_id();
      child->parent = &node;
      child->depth = node.depth + 1;
      child->pending_action = a;
      child->incoming_observation = static_cast<Model::Observation>(z);
      for (std::uint32_t pos : groups[static_cast<std::size_t>(z)]) child->scenario_ids.push_back(node.scenario_ids[pos]);
      child->parent_positions = groups[static_cast<std::size_t>(z)];
      child->initial = random_bounds(rng);
      child->bounds.store(child->initial);
      branch->children.push_back(std::move(child));
      ++created;
    }
    branch->bounds.store(pdespot::branch_value(*branch, node.scenario_count(), gamma));
    node.branches.push_back(std::move(branch));
  }
  tree.record_children(created, node.depth + 1);
  node.expansion.store(pdespot::ExpansionState::kExpanded);
}

/// Bounds of `node` recomputed from scratch: leaves keep their initial
/// bounds, inner nodes apply the Bellman recursion (clamped to the node's
/// initial bounds when `clamp`).
inline pdespot::Bounds recursive_bounds(const Node& node, double gamma, bool clamp) {
  if (!node.expanded()) return node.initial;
  double upper = -1e300;
  double lower = -1e300;
  for (const auto& branch : node.branches) {
    double bu = 0.0;
    double bl = 0.0;
    for (const auto& child : branch->children) {
      const auto cb = recursive_bounds(*child, gamma, clamp);
      const double w = static_cast<double>(child->scenario_count()) / static_cast<double>(node.scenario_count());
      bu += w * cb.upper;
      bl += w * cb.lower;
    }
    upper = std::max(upper, branch->mean_step_reward + gamma * bu);
    lower = std::max(lower, branch->mean_step_reward + gamma * bl);
  }
  if (clamp) {
    upper = std::min(upper, node.initial.upper);
    lower = std::max(lower, node.initial.lower);
  }
  return {upper, lower};
}

inline std::vector<Node*> leaves(Node& root, int max_depth) {
  std::vector<Node*> out;
  std::vector<Node*> stack{&root};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!n->expanded()) {
      if (n->depth < max_depth) out.push_back(n);
      continue;
    }
    for (auto& b : n->branches)
      for (auto& c : b->children) stack.push_back(c.get());
  }
  return out;
}

inline std::vector<Node*> path_to(Node& node) {
  std::vector<Node*> path;
  for (Node* n = &node; n != nullptr; n = n->parent) path.push_back(n);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace synthetic
