#pragma once

#include <nlohmann/json.hpp>

#include "pdespot/tree/belief_tree.hpp"

namespace pdespot {

/// Nodes with bounds and counts, plus (parent, action, observation, child)
/// edges. Call only on a quiescent tree.
template <Model M>
nlohmann::json tree_to_json(const BeliefTree<M>& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  nlohmann::json edges = nlohmann::json::array();
  for_each_node(tree.root(), [&](const BeliefNode<M>& node) {
    const Bounds b = node.bounds.load();
    nodes.push_back({{"id", node.id},
                     {"depth", node.depth},
                     {"scenarios", node.scenario_count()},
                     {"upper", b.upper},
                     {"lower", b.lower},
                     {"visits", node.visits.load()},
                     {"active_threads", node.active_threads.load()},
                     {"expanded", node.expanded()}});
    if (!node.expanded()) return;
    for (const auto& branch : node.branches) {
      for (const auto& child : branch->children) {
        nlohmann::json edge{{"parent", node.id}, {"action", branch->action}, {"child", child->id}};
        if (child->incoming_observation) edge["observation"] = *child->incoming_observation;
        edges.push_back(std::move(edge));
      }
    }
  });
  return {{"node_count", tree.node_count()}, {"max_depth", tree.max_depth()}, {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

}  // namespace pdespot
