#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "pdespot/core/model.hpp"

namespace pdespot {

struct Bounds {
  double upper = 0.0;
  double lower = 0.0;

  double gap() const noexcept { return upper - lower; }
  bool operator==(const Bounds&) const = default;
};

/// Bound pair readable from any thread; writers hold the owning node's lock.
class AtomicBounds {
 public:
  AtomicBounds() = default;
  explicit AtomicBounds(Bounds b) : upper_(b.upper), lower_(b.lower) {}

  Bounds load() const noexcept {
    return {upper_.load(std::memory_order_relaxed), lower_.load(std::memory_order_relaxed)};
  }
  void store(Bounds b) noexcept {
    upper_.store(b.upper, std::memory_order_relaxed);
    lower_.store(b.lower, std::memory_order_relaxed);
  }

 private:
  std::atomic<double> upper_{0.0};
  std::atomic<double> lower_{0.0};
};

enum class ExpansionState : std::uint8_t { kLeaf, kExpanding, kExpanded };

template <Model M>
class BeliefNode;

template <Model M>
struct ActionBranch {
  ActionId action = 0;
  double mean_step_reward = 0.0;
  std::vector<std::unique_ptr<BeliefNode<M>>> children;  // ascending observation
  AtomicBounds bounds;
  std::atomic<std::int64_t> visits{0};
};

/// Sparse belief-tree node.
///
/// Structural fields are fixed at construction. `states` and `branches`
/// are written once by the worker that expands the node and published by
/// the release store of `expansion`; readers must observe kExpanded with
/// acquire ordering before touching them.
template <Model M>
class BeliefNode {
 public:
  using State = typename M::State;
  using Observation = typename M::Observation;

  std::uint64_t id = 0;
  BeliefNode* parent = nullptr;
  std::int32_t depth = 0;
  std::vector<ScenarioId> scenario_ids;
  std::vector<std::uint32_t> parent_positions;  // index of each scenario in the parent's list
  ActionId pending_action = -1;                 // replayed to materialize `states`; -1 at the root
  std::optional<Observation> incoming_observation;
  Bounds initial;

  std::vector<State> states;
  std::vector<std::unique_ptr<ActionBranch<M>>> branches;

  AtomicBounds bounds;
  std::atomic<std::int64_t> visits{0};
  std::atomic<std::int32_t> active_threads{0};
  std::atomic<ExpansionState> expansion{ExpansionState::kLeaf};
  mutable std::mutex mutex;

  std::size_t scenario_count() const noexcept { return scenario_ids.size(); }
  bool expanded() const noexcept { return expansion.load(std::memory_order_acquire) == ExpansionState::kExpanded; }
  bool is_root() const noexcept { return parent == nullptr; }

  const ActionBranch<M>& branch(ActionId a) const { return *branches.at(static_cast<std::size_t>(a)); }
  ActionBranch<M>& branch(ActionId a) { return *branches.at(static_cast<std::size_t>(a)); }
};

/// Owns the root and the scenario list every node indexes into.
template <Model M>
class BeliefTree {
 public:
  using State = typename M::State;
  using Node = BeliefNode<M>;

  BeliefTree(std::vector<Scenario<State>> scenarios, Bounds root_bounds)
      : scenarios_(std::move(scenarios)), root_(std::make_unique<Node>()) {
    if (scenarios_.empty()) throw ContractViolation("a belief tree needs at least one scenario");
    root_->id = next_id_++;
    root_->scenario_ids.reserve(scenarios_.size());
    root_->parent_positions.reserve(scenarios_.size());
    root_->states.reserve(scenarios_.size());
    for (std::uint32_t i = 0; i < scenarios_.size(); ++i) {
      if (scenarios_[i].id != i) throw ContractViolation("root scenario ids must be 0..K-1 in order");
      root_->scenario_ids.push_back(scenarios_[i].id);
      root_->parent_positions.push_back(i);
      root_->states.push_back(scenarios_[i].initial_state);
    }
    root_->initial = root_bounds;
    root_->bounds.store(root_bounds);
  }

  const std::vector<Scenario<State>>& scenarios() const noexcept { return scenarios_; }
  std::size_t scenario_count() const noexcept { return scenarios_.size(); }

  Node& root() noexcept { return *root_; }
  const Node& root() const noexcept { return *root_; }

  std::int64_t node_count() const noexcept { return node_count_.load(std::memory_order_relaxed); }
  std::int32_t max_depth() const noexcept { return max_depth_.load(std::memory_order_relaxed); }

  std::uint64_t allocate_id() noexcept { return next_id_.fetch_add(1, std::memory_order_relaxed); }

  void record_children(std::int64_t count, std::int32_t depth) noexcept {
    node_count_.fetch_add(count, std::memory_order_relaxed);
    std::int32_t seen = max_depth_.load(std::memory_order_relaxed);
    while (depth > seen && !max_depth_.compare_exchange_weak(seen, depth, std::memory_order_relaxed)) {
    }
  }

 private:
  std::vector<Scenario<State>> scenarios_;
  std::unique_ptr<Node> root_;
  std::atomic<std::uint64_t> next_id_{0};
  std::atomic<std::int64_t> node_count_{1};
  std::atomic<std::int32_t> max_depth_{0};
};

/// Visits every node reachable through published expansions, parents first.
template <Model M, class Fn>
void for_each_node(const BeliefNode<M>& node, Fn&& fn) {
  fn(node);
  if (!node.expanded()) return;
  for (const auto& branch : node.branches) {
    for (const auto& child : branch->children) for_each_node<M>(*child, fn);
  }
}

}  // namespace pdespot
