#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdespot/core/errors.hpp"
#include "pdespot/core/random.hpp"

namespace pdespot {

using ActionId = std::int32_t;
using ScenarioId = std::uint32_t;

struct ModelSpec {
  std::int32_t action_count = 1;
  double discount = 0.95;
  std::int32_t max_rollout_depth = 90;
  std::int32_t factored_element_count = 1;

  void validate() const {
    if (action_count < 1) throw ContractViolation("model needs at least one action");
    if (!(discount > 0.0 && discount < 1.0)) throw ContractViolation("discount must lie in (0, 1)");
    if (max_rollout_depth < 1) throw ContractViolation("max rollout depth must be >= 1");
    if (factored_element_count < 1) throw ContractViolation("factored element count must be >= 1");
  }
};

template <class State, class Observation>
struct StepOutcome {
  State next_state;
  Observation observation;
  double reward = 0.0;
  bool terminal = false;

  bool operator==(const StepOutcome&) const = default;
};

/// Sampled start state plus the seed of its per-depth random numbers.
template <class State>
struct Scenario {
  ScenarioId id = 0;
  State initial_state;
  std::uint64_t stream_seed = 0;

  RandomDraws draws(int depth) const noexcept { return RandomDraws(stream_seed, depth); }
};

template <class State>
struct Particle {
  State state;
  double weight = 1.0;
};

template <class State>
using ParticleBelief = std::vector<Particle<State>>;

// clang-format off
/// A deterministic-scenario POMDP. `step` must be a pure function of
/// (state, action, draws); models are immutable and shared across threads.
template <class M>
concept Model =
    std::copyable<typename M::State> &&
    std::default_initializable<typename M::State> &&
    std::default_initializable<typename M::Observation> &&
    std::equality_comparable<typename M::State> &&
    std::totally_ordered<typename M::Observation> &&
    std::copyable<typename M::Observation> &&
    requires(const M& m, const typename M::State& s, ActionId a, RandomDraws d,
             const typename M::Observation& z, int depth) {
      { m.spec() } -> std::convertible_to<ModelSpec>;
      { m.step(s, a, d) } -> std::same_as<StepOutcome<typename M::State, typename M::Observation>>;
      { m.is_terminal(s) } -> std::convertible_to<bool>;
      { m.upper_bound_heuristic(s) } -> std::convertible_to<double>;
      { m.lower_bound_heuristic(s) } -> std::convertible_to<double>;
      { m.default_policy_action(s, depth) } -> std::convertible_to<ActionId>;
      { m.observation_likelihood(s, a, z) } -> std::convertible_to<double>;
      { m.terminal_observation() } -> std::convertible_to<typename M::Observation>;
    };

/// A model whose step splits into independent per-element parts
/// (vehicle, pedestrians, ...) that are merged by `compose_factored`.
template <class M>
concept FactoredModel =
    Model<M> &&
    std::copyable<typename M::FactorPart> &&
    std::default_initializable<typename M::FactorPart> &&
    requires(const M& m, const typename M::State& s, ActionId a, RandomDraws d, std::int32_t element,
             std::span<const typename M::FactorPart> parts) {
      { m.step_factored(s, a, d, element) } -> std::same_as<typename M::FactorPart>;
      { m.compose_factored(s, a, d, parts) } -> std::same_as<StepOutcome<typename M::State, typename M::Observation>>;
    };
// clang-format on

template <Model M>
using OutcomeOf = StepOutcome<typename M::State, typename M::Observation>;

template <Model M>
void check_action(const M& model, ActionId action) {
  if (action < 0 || action >= model.spec().action_count) {
    throw ContractViolation("action index " + std::to_string(action) + " out of range [0, " +
                            std::to_string(model.spec().action_count) + ")");
  }
}

/// One deterministic step of scenario `scenario` at `depth` (depth >= 1).
template <Model M>
OutcomeOf<M> step(const M& model, const typename M::State& state, ActionId action,
                  const Scenario<typename M::State>& scenario, int depth) {
  check_action(model, action);
  if (depth < 1) throw ContractViolation("step depth must be >= 1");
  return model.step(state, action, scenario.draws(depth));
}

/// Step that treats terminal states as absorbing with zero reward. All
/// search-side simulation goes through here.
template <Model M>
OutcomeOf<M> simulate_step(const M& model, const typename M::State& state, ActionId action,
                           RandomDraws draws) {
  if (model.is_terminal(state)) {
    return {state, model.terminal_observation(), 0.0, true};
  }
  return model.step(state, action, draws);
}

/// Factor part for element `element`. Unfactored models expose a single
/// element whose part is the full step outcome.
template <Model M>
auto step_factored(const M& model, const typename M::State& state, ActionId action,
                   const Scenario<typename M::State>& scenario, int depth, std::int32_t element) {
  check_action(model, action);
  if (depth < 1) throw ContractViolation("step depth must be >= 1");
  const std::int32_t count = model.spec().factored_element_count;
  if (element < 0 || element >= count) {
    throw ContractViolation("factored element index out of range");
  }
  if constexpr (FactoredModel<M>) {
    return model.step_factored(state, action, scenario.draws(depth), element);
  } else {
    return model.step(state, action, scenario.draws(depth));
  }
}

/// Evaluates every element in ascending order and composes them.
template <Model M>
OutcomeOf<M> step_by_elements(const M& model, const typename M::State& state, ActionId action,
                              RandomDraws draws) {
  if constexpr (FactoredModel<M>) {
    const std::int32_t count = model.spec().factored_element_count;
    std::vector<typename M::FactorPart> parts;
    parts.reserve(static_cast<std::size_t>(count));
    for (std::int32_t e = 0; e < count; ++e) parts.push_back(model.step_factored(state, action, draws, e));
    return model.compose_factored(state, action, draws, std::span<const typename M::FactorPart>(parts));
  } else {
    return model.step(state, action, draws);
  }
}

/// Draws K scenarios i.i.d. from a weighted particle belief.
///
/// Selection uses inverse-CDF lookup on counter-based uniforms, so the
/// result depends only on (belief, K, seed).
template <class State>
std::vector<Scenario<State>> sample_scenarios(std::span<const Particle<State>> belief, std::size_t count,
                                              std::uint64_t seed) {
  if (belief.empty()) throw EmptyBeliefError();
  if (count == 0) throw ContractViolation("scenario count must be >= 1");

  std::vector<double> cumulative(belief.size());
  double total = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    if (!(belief[i].weight >= 0.0)) throw ContractViolation("particle weights must be non-negative");
    total += belief[i].weight;
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw EmptyBeliefError();

  const RandomDraws selector(seed, 0);
  std::vector<Scenario<State>> scenarios;
  scenarios.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double target = selector.uniform(static_cast<std::uint32_t>(k)) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    const auto index = static_cast<std::size_t>(it - cumulative.begin());
    scenarios.push_back(Scenario<State>{static_cast<ScenarioId>(k), belief[index].state,
                                        hash_combine(seed, 0x5eed0000ULL + k)});
  }
  return scenarios;
}

template <class State>
std::vector<Scenario<State>> sample_scenarios(const ParticleBelief<State>& belief, std::size_t count,
                                              std::uint64_t seed) {
  return sample_scenarios(std::span<const Particle<State>>(belief), count, seed);
}

}  // namespace pdespot
