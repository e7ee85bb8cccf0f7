#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "pdespot/backend/expansion.hpp"
#include "pdespot/tree/belief_tree.hpp"

namespace pdespot {

/// Excess uncertainty of a node relative to the root's target gap:
/// gap(b') - (|Phi_b'| / K) * xi * gap(b0).
inline double weu(double node_gap, std::size_t node_scenarios, std::size_t total_scenarios, double xi,
                  double root_gap) noexcept {
  return node_gap - (static_cast<double>(node_scenarios) / static_cast<double>(total_scenarios)) * xi * root_gap;
}

template <Model M>
double weu(const BeliefNode<M>& node, double root_gap, std::size_t total_scenarios, double xi) noexcept {
  return weu(node.bounds.load().gap(), node.scenario_count(), total_scenarios, xi, root_gap);
}

/// Action branch with the largest upper bound; ties go to the lowest index.
template <Model M>
ActionId select_action_serial(const BeliefNode<M>& node) {
  if (!node.expanded()) throw ContractViolation("action selection on an unexpanded node");
  ActionId best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& branch : node.branches) {
    const double u = branch->bounds.load().upper;
    if (u > best_value) {
      best_value = u;
      best = branch->action;
    }
  }
  return best;
}

/// Child with the largest positive WEU, scanning observations in ascending
/// order so ties keep the smallest key. Null ends the trial.
template <Model M>
BeliefNode<M>* select_obs_serial(const ActionBranch<M>& branch, double root_gap, std::size_t total_scenarios,
                                 double xi) {
  BeliefNode<M>* best = nullptr;
  double best_value = 0.0;
  for (const auto& child : branch.children) {
    const double value = weu(*child, root_gap, total_scenarios, xi);
    if (value > best_value) {
      best_value = value;
      best = child.get();
    }
  }
  return best;
}

/// Action with the largest lower bound at the root; ties to the lowest index.
template <Model M>
ActionId root_action(const BeliefNode<M>& root) {
  if (!root.expanded()) throw ContractViolation("root has not been expanded");
  ActionId best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& branch : root.branches) {
    const double l = branch->bounds.load().lower;
    if (l > best_value) {
      best_value = l;
      best = branch->action;
    }
  }
  return best;
}

/// Bellman backup of one action branch from its children's current bounds.
template <Model M>
Bounds branch_value(const ActionBranch<M>& branch, std::size_t parent_scenarios, double gamma) {
  double upper = 0.0;
  double lower = 0.0;
  const auto parent_count = static_cast<double>(parent_scenarios);
  for (const auto& child : branch.children) {
    const Bounds cb = child->bounds.load();
    const double weight = static_cast<double>(child->scenario_count()) / parent_count;
    upper += weight * cb.upper;
    lower += weight * cb.lower;
  }
  return {branch.mean_step_reward + gamma * upper, branch.mean_step_reward + gamma * lower};
}

/// Recomputes an expanded node's branch bounds and its own bounds. With
/// clamping, the upper bound never rises above its stored value and the
/// lower bound never falls below it; stored values start at the node's
/// initial heuristic and rollout values.
template <Model M>
void backup_node(BeliefNode<M>& node, double gamma, bool clamp) {
  if (!node.expanded()) return;
  double upper = -std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  for (auto& branch : node.branches) {
    const Bounds b = branch_value(*branch, node.scenario_count(), gamma);
    branch->bounds.store(b);
    upper = std::max(upper, b.upper);
    lower = std::max(lower, b.lower);
  }
  if (clamp) {
    const Bounds stored = node.bounds.load();
    upper = std::min(upper, stored.upper);
    lower = std::max(lower, stored.lower);
  }
  node.bounds.store({upper, lower});
}

/// Backs up a root-to-leaf path, deepest node first.
template <Model M>
void backup(std::span<BeliefNode<M>* const> path, double gamma, bool clamp) {
  for (auto it = path.rbegin(); it != path.rend(); ++it) backup_node(**it, gamma, clamp);
}

/// Gathers the parent's states for a leaf and packages its expansion.
template <Model M>
ExpansionRequest<M> make_expansion_request(const BeliefTree<M>& tree, const BeliefNode<M>& node) {
  ExpansionRequest<M> request;
  request.node_id = node.id;
  request.depth = node.depth;
  request.scenario_ids = node.scenario_ids;
  request.stream_seeds.reserve(node.scenario_count());
  for (ScenarioId id : node.scenario_ids) request.stream_seeds.push_back(tree.scenarios()[id].stream_seed);
  if (node.is_root()) {
    request.parent_states = node.states;
  } else {
    request.last_action = node.pending_action;
    request.parent_states.reserve(node.scenario_count());
    for (std::uint32_t pos : node.parent_positions) request.parent_states.push_back(node.parent->states[pos]);
  }
  return request;
}

/// Creates the branches and children described by `result` and publishes
/// them. The caller must own the node's expansion claim.
template <Model M>
std::int64_t install_expansion(BeliefTree<M>& tree, BeliefNode<M>& node, ExpansionResult<M>&& result,
                               double gamma) {
  node.states = std::move(result.node_states);
  node.branches.clear();
  node.branches.reserve(static_cast<std::size_t>(result.action_count));
  std::int64_t created = 0;
  for (ActionId a = 0; a < result.action_count; ++a) {
    auto branch = std::make_unique<ActionBranch<M>>();
    branch->action = a;
    branch->mean_step_reward = result.mean_step_reward[static_cast<std::size_t>(a)];
    auto& inits = result.children[static_cast<std::size_t>(a)];
    branch->children.reserve(inits.size());
    for (auto& init : inits) {
      auto child = std::make_unique<BeliefNode<M>>();
      child->id = tree.allocate_id();
      child->parent = &node;
      child->depth = node.depth + 1;
      child->pending_action = a;
      child->incoming_observation = std::move(init.observation);
      child->scenario_ids.reserve(init.positions.size());
      for (std::uint32_t pos : init.positions) child->scenario_ids.push_back(node.scenario_ids[pos]);
      child->parent_positions = std::move(init.positions);
      child->initial = init.bounds;
      child->bounds.store(init.bounds);
      branch->children.push_back(std::move(child));
      ++created;
    }
    branch->bounds.store(branch_value(*branch, node.scenario_count(), gamma));
    node.branches.push_back(std::move(branch));
  }
  tree.record_children(created, node.depth + 1);
  node.expansion.store(ExpansionState::kExpanded, std::memory_order_release);
  return created;
}

}  // namespace pdespot
