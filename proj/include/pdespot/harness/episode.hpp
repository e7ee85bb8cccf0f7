#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <memory>
#include <ranges>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "pdespot/harness/belief_update.hpp"
#include "pdespot/parallel/parallel_search.hpp"
#include "pdespot/tree/serial_search.hpp"

namespace pdespot {

enum class Variant { kSerial, kParallelTree, kParallelBackend, kHybrid };

inline std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::kSerial: return "serial";
    case Variant::kParallelTree: return "parallel-tree-only";
    case Variant::kParallelBackend: return "parallel-backend-only";
    case Variant::kHybrid: return "hybrid";
  }
  return "serial";
}

inline Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kSerial, Variant::kParallelTree, Variant::kParallelBackend, Variant::kHybrid})
    if (to_string(v) == name) return v;
  throw ConfigError("unknown planner variant '" + std::string(name) +
                    "' (expected serial, parallel-tree-only, parallel-backend-only or hybrid)");
}

inline bool uses_parallel_tree(Variant v) noexcept { return v == Variant::kParallelTree || v == Variant::kHybrid; }
inline bool uses_parallel_backend(Variant v) noexcept {
  return v == Variant::kParallelBackend || v == Variant::kHybrid;
}

struct PlannerSettings {
  SearchConfig search;
  Variant variant = Variant::kSerial;
  std::size_t backend_threads = 0;  // 0: one per hardware thread
};

struct StepRecord {
  std::int32_t step = 0;
  ActionId action = 0;
  std::string observation;
  double reward = 0.0;
  bool fallback = false;  // root never expanded; the default policy acted
  SearchStats stats;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  Variant variant = Variant::kSerial;
  double discount = 0.95;
  std::vector<StepRecord> steps;
  double discounted_return = 0.0;
  double total_reward = 0.0;
  bool terminal = false;
  bool success = false;
  bool aborted = false;
  std::string error;

  std::int32_t step_count() const noexcept { return static_cast<std::int32_t>(steps.size()); }
};

/// Sum of discount^t * r_t over the step log.
inline double recompute_return(const EpisodeRecord& record) {
  double total = 0.0;
  double weight = 1.0;
  for (const auto& s : record.steps) {
    total += weight * s.reward;
    weight *= record.discount;
  }
  return total;
}

/// Node count scaled back to the budget when planning overran it by more
/// than 5%.
inline double normalized_node_count(const SearchStats& stats, double budget) noexcept {
  if (budget > 0.0 && stats.elapsed_seconds > 1.05 * budget) {
    return static_cast<double>(stats.node_count) * budget / stats.elapsed_seconds;
  }
  return static_cast<double>(stats.node_count);
}

template <class Z>
std::string observation_string(const Z& z) {
  if constexpr (std::is_integral_v<Z>) {
    return std::to_string(+z);
  } else if constexpr (std::ranges::range<Z>) {
    std::string out;
    for (const auto& x : z) {
      if (!out.empty()) out += ':';
      out += observation_string(x);
    }
    return out;
  } else {
    return "?";
  }
}

template <class M>
concept GoalModel = Model<M> && requires(const M& m, const typename M::State& s) {
  { m.goal_reached(s) } -> std::convertible_to<bool>;
};

template <Model M>
struct PlanResult {
  ActionId action = 0;
  bool fallback = false;
  SearchStats stats;
  std::unique_ptr<BeliefTree<M>> tree;
};

/// One planner instance: a backend kept for the planner's lifetime plus
/// the search routine the variant calls for.
template <Model M>
class Planner {
 public:
  Planner(const M& model, PlannerSettings settings) : model_(model), settings_(std::move(settings)) {
    settings_.search.validate();
    const RolloutSettings rollout{settings_.search.gamma, settings_.search.max_depth};
    backend_ = make_backend(uses_parallel_backend(settings_.variant) ? "parallel" : "serial", model_, rollout,
                            settings_.backend_threads);
  }

  const PlannerSettings& settings() const noexcept { return settings_; }
  SimulationBackend<M>& backend() noexcept { return *backend_; }

  PlanResult<M> plan(const ParticleBelief<typename M::State>& belief, std::uint64_t scenario_seed,
                     const SearchHooks<M>& hooks = {}) {
    auto scenarios =
        sample_scenarios(belief, static_cast<std::size_t>(settings_.search.scenario_count), scenario_seed);
    const auto first_state = scenarios.front().initial_state;
    SearchResult<M> result;
    if (uses_parallel_tree(settings_.variant)) {
      result = parallel_search(model_, std::move(scenarios), settings_.search, *backend_, hooks);
    } else {
      SearchConfig single = settings_.search;
      single.workers = 1;
      result = serial_search(model_, std::move(scenarios), single, *backend_, hooks);
    }
    PlanResult<M> out;
    out.stats = result.stats;
    if (result.tree->root().expanded()) {
      out.action = root_action(result.tree->root());
    } else {
      out.action = model_.default_policy_action(first_state, 0);
      out.fallback = true;
    }
    out.tree = std::move(result.tree);
    return out;
  }

 private:
  const M& model_;
  PlannerSettings settings_;
  std::unique_ptr<SimulationBackend<M>> backend_;
};

struct EpisodeSettings {
  PlannerSettings planner;
  std::int32_t step_limit = 100;
  FilterSettings filter;
  std::int32_t success_steps = 60;  // goal must be reached within this many steps
};

/// Closed-loop run: plan from the current belief, act in a simulated world,
/// observe, update the belief. The world and the filter draw from their own
/// streams, never from the planner's scenarios. Planner or filter failures
/// end the episode with `aborted` set and the steps so far kept.
template <Model M>
EpisodeRecord run_episode(const M& model, const EpisodeSettings& settings, std::uint64_t seed) {
  EpisodeRecord record;
  record.seed = seed;
  record.variant = settings.planner.variant;
  record.discount = model.spec().discount;
  if (settings.step_limit < 0) throw ConfigError("step limit must be >= 0");
  if (settings.step_limit == 0) return record;

  double weight = 1.0;
  try {
    Planner<M> planner(model, settings.planner);
    SplitMix world(hash_combine(seed, 0x776f726c64ULL));
    SplitMix filter_rng(hash_combine(seed, 0xf117e5ULL));
    auto belief = model.initial_belief(settings.filter.particle_count, hash_combine(seed, 0xb311efULL));
    auto state = resample(belief, 1, world).front().state;

    for (std::int32_t t = 0; t < settings.step_limit && !model.is_terminal(state); ++t) {
      const std::uint64_t scenario_seed =
          hash_combine(settings.planner.search.seed, hash_combine(seed, static_cast<std::uint64_t>(t)));
      auto plan = planner.plan(belief, scenario_seed);
      auto outcome = model.step(state, plan.action, RandomDraws(world(), 1));

      StepRecord step;
      step.step = t;
      step.action = plan.action;
      step.observation = observation_string(outcome.observation);
      step.reward = outcome.reward;
      step.fallback = plan.fallback;
      step.stats = plan.stats;
      record.steps.push_back(std::move(step));
      record.discounted_return += weight * outcome.reward;
      record.total_reward += outcome.reward;
      weight *= record.discount;

      state = std::move(outcome.next_state);
      if constexpr (GoalModel<M>) {
        if (model.goal_reached(state) && record.step_count() <= settings.success_steps) record.success = true;
      }
      if (outcome.terminal || model.is_terminal(state)) break;
      belief = belief_update(belief, plan.action, outcome.observation, model, filter_rng, settings.filter);
    }
    record.terminal = model.is_terminal(state);
  } catch (const std::exception& e) {
    record.aborted = true;
    record.error = e.what();
  }
  return record;
}

}  // namespace pdespot
