#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <vector>

#include "pdespot/backend/backend.hpp"
#include "pdespot/tree/operations.hpp"
#include "pdespot/tree/search_config.hpp"

namespace pdespot {

struct TrialRecord {
  std::int32_t worker = 0;
  std::int64_t index = 0;
  std::vector<std::pair<ActionId, std::uint64_t>> path;  // (action taken, child node id)
  bool expanded = false;
  double seconds = 0.0;
};

template <Model M>
struct SearchHooks {
  /// Called after each trial's backup. Parallel searches call it under a
  /// lock, but other workers may still be mutating the tree.
  std::function<void(const BeliefTree<M>&, const TrialRecord&)> on_trial;
  /// When set, one line per trial is written here.
  std::ostream* trace = nullptr;
};

template <Model M>
struct SearchResult {
  std::unique_ptr<BeliefTree<M>> tree;
  SearchStats stats;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline Clock::time_point deadline_after(Clock::time_point start, double seconds) {
  return start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
}

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

inline void write_trace(std::ostream& out, const TrialRecord& r) {
  std::ostringstream line;
  line << "trial worker=" << r.worker << " index=" << r.index << " expanded=" << (r.expanded ? 1 : 0)
       << " depth=" << r.path.size() << " path=";
  for (std::size_t i = 0; i < r.path.size(); ++i) {
    if (i) line << ',';
    line << r.path[i].first << ':' << r.path[i].second;
  }
  line << " time_us=" << static_cast<std::int64_t>(r.seconds * 1e6) << '\n';
  out << line.str();
}

template <Model M>
void fill_stats(SearchStats& stats, const BeliefTree<M>& tree, Clock::time_point start) {
  stats.node_count = tree.node_count();
  stats.max_depth = tree.max_depth();
  stats.elapsed_seconds = seconds_since(start);
  const Bounds root = tree.root().bounds.load();
  stats.root_upper = root.upper;
  stats.root_lower = root.lower;
}

template <Model M>
std::unique_ptr<BeliefTree<M>> make_tree(const M& model, std::vector<Scenario<typename M::State>> scenarios,
                                         const SearchConfig& config) {
  const RolloutSettings settings{config.gamma, config.max_depth};
  const Bounds root_bounds = initial_root_bounds(model, scenarios, settings);
  return std::make_unique<BeliefTree<M>>(std::move(scenarios), root_bounds);
}

}  // namespace detail

/// Single-threaded anytime search: forward search by upper bound and WEU,
/// expansion of the leaf reached, backup along the path. Stops on the time
/// budget, the trial cap, a closed root gap, or a trial that finds nothing
/// left to expand.
template <Model M>
SearchResult<M> serial_search(const M& model, std::vector<Scenario<typename M::State>> scenarios,
                              const SearchConfig& config, SimulationBackend<M>& backend,
                              const SearchHooks<M>& hooks = {}) {
  config.validate();
  if (!(config.time_budget > 0.0)) throw ConfigError("time budget must be positive");
  const auto start = detail::Clock::now();
  const auto deadline = detail::deadline_after(start, config.time_budget);

  SearchResult<M> out;
  out.tree = detail::make_tree(model, std::move(scenarios), config);
  auto& tree = *out.tree;
  auto& root = tree.root();
  const std::size_t total = tree.scenario_count();

  for (;;) {
    if (root.bounds.load().gap() <= config.target_gap) break;
    if (detail::Clock::now() >= deadline) break;
    if (config.max_trials > 0 && out.stats.trials >= config.max_trials) break;

    const auto trial_start = detail::Clock::now();
    TrialRecord record;
    record.index = out.stats.trials;
    std::vector<BeliefNode<M>*> path{&root};
    BeliefNode<M>* node = &root;
    for (;;) {
      if (!node->expanded()) {
        node->expansion.store(ExpansionState::kExpanding, std::memory_order_relaxed);
        try {
          install_expansion(tree, *node, backend.submit(make_expansion_request(tree, *node)).get(), config.gamma);
        } catch (...) {
          node->expansion.store(ExpansionState::kLeaf, std::memory_order_relaxed);
          throw;
        }
        record.expanded = true;
        ++out.stats.expansions;
        break;
      }
      const ActionId action = select_action_serial(*node);
      auto& branch = node->branch(action);
      node->visits.fetch_add(1, std::memory_order_relaxed);
      branch.visits.fetch_add(1, std::memory_order_relaxed);
      BeliefNode<M>* child = select_obs_serial(branch, root.bounds.load().gap(), total, config.xi);
      if (child == nullptr) break;
      record.path.emplace_back(action, child->id);
      path.push_back(child);
      node = child;
    }
    backup<M>(path, config.gamma, config.clamp_bounds);
    ++out.stats.trials;
    record.seconds = detail::seconds_since(trial_start);
    if (hooks.trace) detail::write_trace(*hooks.trace, record);
    if (hooks.on_trial) hooks.on_trial(tree, record);
    if (!record.expanded) break;
  }

  detail::fill_stats(out.stats, tree, start);
  return out;
}

}  // namespace pdespot
