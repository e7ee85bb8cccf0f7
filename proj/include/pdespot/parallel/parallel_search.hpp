#pragma once

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "pdespot/tree/serial_search.hpp"

namespace pdespot {

/// Upper bound plus the scenario-weighted PO-UCT bonus
/// c_a * sqrt(log(|Phi_b| N(b)) / (|Phi_b| N(b,a))), natural log.
/// An unvisited node gets no bonus; an untried branch under a visited
/// node is preferred outright.
inline double augmented_upper(double branch_upper, std::size_t node_scenarios, std::int64_t node_visits,
                              std::int64_t branch_visits, double explore) noexcept {
  if (explore == 0.0 || node_visits <= 0) return branch_upper;
  if (branch_visits <= 0) return std::numeric_limits<double>::infinity();
  const double phi = static_cast<double>(node_scenarios);
  return branch_upper + explore * std::sqrt(std::log(phi * static_cast<double>(node_visits)) /
                                            (phi * static_cast<double>(branch_visits)));
}

/// WEU less a virtual loss of c_o * gap(b0) per worker inside the branch.
inline double augmented_weu(double weu_value, std::int32_t active_threads, double loss_scale,
                            double root_gap) noexcept {
  return weu_value - static_cast<double>(active_threads) * loss_scale * root_gap;
}

template <Model M>
ActionId select_action_parallel(const BeliefNode<M>& node, double explore) {
  if (!node.expanded()) throw ContractViolation("action selection on an unexpanded node");
  const std::int64_t visits = node.visits.load(std::memory_order_relaxed);
  ActionId best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const auto& branch : node.branches) {
    const double value = augmented_upper(branch->bounds.load().upper, node.scenario_count(), visits,
                                         branch->visits.load(std::memory_order_relaxed), explore);
    if (value > best_value) {
      best_value = value;
      best = branch->action;
    }
  }
  return best;
}

template <Model M>
BeliefNode<M>* select_obs_parallel(const ActionBranch<M>& branch, double root_gap, std::size_t total_scenarios,
                                   double xi, double loss_scale) {
  BeliefNode<M>* best = nullptr;
  double best_value = 0.0;
  for (const auto& child : branch.children) {
    const double value = augmented_weu(weu(*child, root_gap, total_scenarios, xi),
                                       child->active_threads.load(std::memory_order_relaxed), loss_scale, root_gap);
    if (value > best_value) {
      best_value = value;
      best = child.get();
    }
  }
  return best;
}

namespace detail {

template <Model M>
class SharedTreeSearch {
 public:
  SharedTreeSearch(BeliefTree<M>& tree, const SearchConfig& config, SimulationBackend<M>& backend,
                   const SearchHooks<M>& hooks, Clock::time_point deadline)
      : tree_(tree), config_(config), backend_(backend), hooks_(hooks), deadline_(deadline) {}

  void run() {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(config_.workers));
    for (std::int32_t w = 0; w < config_.workers; ++w) workers.emplace_back([this, w] { worker_loop(w); });
    for (auto& t : workers) t.join();
    if (error_) std::rethrow_exception(error_);
  }

  std::int64_t trials() const noexcept { return trials_done_.load(); }
  std::int64_t expansions() const noexcept { return expansions_.load(); }

 private:
  struct TrialOutcome {
    bool expanded = false;
    bool contended = false;
  };

  void worker_loop(std::int32_t worker) {
    try {
      while (!stop_.load(std::memory_order_acquire)) {
        if (tree_.root().bounds.load().gap() <= config_.target_gap || Clock::now() >= deadline_) break;
        if (config_.max_trials > 0 && trials_started_.fetch_add(1) >= config_.max_trials) break;
        const std::int64_t version = expansions_.load(std::memory_order_acquire);
        active_trials_.fetch_add(1, std::memory_order_acq_rel);
        const TrialOutcome outcome = trial(worker);
        const bool alone = active_trials_.fetch_sub(1, std::memory_order_acq_rel) == 1;
        // Without the count bonus, a trial that expands nothing in an
        // unchanged, otherwise idle tree will keep expanding nothing.
        if (!outcome.expanded && !outcome.contended && config_.action_explore == 0.0 && alone &&
            in_flight_.load(std::memory_order_acquire) == 0 &&
            expansions_.load(std::memory_order_acquire) == version) {
          break;
        }
        if (outcome.contended) std::this_thread::yield();
      }
    } catch (...) {
      std::lock_guard lock(error_mutex_);
      if (!error_) error_ = std::current_exception();
    }
    stop_.store(true, std::memory_order_release);
  }

  TrialOutcome trial(std::int32_t worker) {
    const auto trial_start = Clock::now();
    auto& root = tree_.root();
    const std::size_t total = tree_.scenario_count();
    TrialRecord record;
    record.worker = worker;
    std::vector<BeliefNode<M>*> path{&root};
    TrialOutcome outcome;

    // Markers taken on the way down are released on every exit path.
    struct MarkerRelease {
      std::vector<BeliefNode<M>*>& nodes;
      ~MarkerRelease() {
        for (std::size_t i = 1; i < nodes.size(); ++i) nodes[i]->active_threads.fetch_sub(1, std::memory_order_acq_rel);
      }
    } release{path};

    BeliefNode<M>* node = &root;
    for (;;) {
      ExpansionState state = node->expansion.load(std::memory_order_acquire);
      if (state == ExpansionState::kLeaf) {
        if (node->expansion.compare_exchange_strong(state, ExpansionState::kExpanding, std::memory_order_acq_rel)) {
          expand(*node);
          outcome.expanded = true;
        } else {
          outcome.contended = true;
        }
        break;
      }
      if (state == ExpansionState::kExpanding) {
        outcome.contended = true;
        break;
      }

      BeliefNode<M>* child = nullptr;
      ActionId action = 0;
      {
        std::lock_guard lock(node->mutex);
        node->visits.fetch_add(1, std::memory_order_relaxed);
        action = select_action_parallel(*node, config_.action_explore);
        auto& branch = node->branch(action);
        branch.visits.fetch_add(1, std::memory_order_relaxed);
        child = select_obs_parallel(branch, root.bounds.load().gap(), total, config_.xi, config_.virtual_loss);
        if (child) child->active_threads.fetch_add(1, std::memory_order_acq_rel);
      }
      if (child == nullptr) break;
      record.path.emplace_back(action, child->id);
      path.push_back(child);
      node = child;
    }

    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      std::lock_guard lock((*it)->mutex);
      backup_node(**it, config_.gamma, config_.clamp_bounds);
    }

    const std::int64_t index = trials_done_.fetch_add(1, std::memory_order_relaxed);
    if (hooks_.trace || hooks_.on_trial) {
      record.index = index;
      record.expanded = outcome.expanded;
      record.seconds = seconds_since(trial_start);
      std::lock_guard lock(hook_mutex_);
      if (hooks_.trace) write_trace(*hooks_.trace, record);
      if (hooks_.on_trial) hooks_.on_trial(tree_, record);
    }
    return outcome;
  }

  void expand(BeliefNode<M>& node) {
    in_flight_.fetch_add(1, std::memory_order_acq_rel);
    try {
      auto result = backend_.submit(make_expansion_request(tree_, node)).get();
      install_expansion(tree_, node, std::move(result), config_.gamma);
    } catch (...) {
      node.expansion.store(ExpansionState::kLeaf, std::memory_order_release);
      in_flight_.fetch_sub(1, std::memory_order_acq_rel);
      throw;
    }
    expansions_.fetch_add(1, std::memory_order_relaxed);
    in_flight_.fetch_sub(1, std::memory_order_acq_rel);
  }

  BeliefTree<M>& tree_;
  const SearchConfig& config_;
  SimulationBackend<M>& backend_;
  const SearchHooks<M>& hooks_;
  Clock::time_point deadline_;

  std::atomic<bool> stop_{false};
  std::atomic<std::int64_t> trials_started_{0};
  std::atomic<std::int64_t> trials_done_{0};
  std::atomic<std::int64_t> expansions_{0};
  std::atomic<std::int32_t> in_flight_{0};
  std::atomic<std::int32_t> active_trials_{0};
  std::mutex hook_mutex_;
  std::mutex error_mutex_;
  std::exception_ptr error_;
};

}  // namespace detail

/// Shared-tree search with `config.workers` threads. Action branches are
/// chosen by the scenario-weighted PO-UCT bound, observation branches by
/// WEU less virtual loss; leaves go to `backend`, possibly several at once.
template <Model M>
SearchResult<M> parallel_search(const M& model, std::vector<Scenario<typename M::State>> scenarios,
                                const SearchConfig& config, SimulationBackend<M>& backend,
                                const SearchHooks<M>& hooks = {}) {
  config.validate();
  const auto start = detail::Clock::now();
  SearchResult<M> out;
  out.tree = detail::make_tree(model, std::move(scenarios), config);
  if (config.time_budget > 0.0) {
    detail::SharedTreeSearch<M> search(*out.tree, config, backend, hooks,
                                       detail::deadline_after(start, config.time_budget));
    search.run();
    out.stats.trials = search.trials();
    out.stats.expansions = search.expansions();
  }
  detail::fill_stats(out.stats, *out.tree, start);
  return out;
}

}  // namespace pdespot
