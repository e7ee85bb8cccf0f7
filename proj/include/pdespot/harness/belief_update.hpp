#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <string>
#include <vector>

#include "pdespot/core/model.hpp"

namespace pdespot {

/// A model that can condition its particles on an observation directly,
/// instead of propagating and weighting them.
template <class M>
concept StructuredBeliefModel =
    Model<M> && requires(const M& m, const ParticleBelief<typename M::State>& b, ActionId a,
                         const typename M::Observation& z) {
      { m.structured_update(b, a, z) } -> std::same_as<ParticleBelief<typename M::State>>;
    };

struct FilterSettings {
  std::size_t particle_count = 10000;  // 0 keeps the incoming size
  bool structured = true;              // use the model's own update when it has one
};

/// Propagates every particle through a freshly sampled transition and
/// multiplies its weight by the observation likelihood. Weights are left
/// unnormalized.
template <Model M>
ParticleBelief<typename M::State> propagate_and_weight(const M& model, const ParticleBelief<typename M::State>& belief,
                                                       ActionId action, const typename M::Observation& observation,
                                                       SplitMix& rng) {
  ParticleBelief<typename M::State> out;
  out.reserve(belief.size());
  for (const auto& p : belief) {
    if (!(p.weight > 0.0)) continue;
    auto outcome = simulate_step(model, p.state, action, RandomDraws(rng(), 1));
    const double w = p.weight * model.observation_likelihood(outcome.next_state, action, observation);
    if (w > 0.0) out.push_back({std::move(outcome.next_state), w});
  }
  return out;
}

/// Scales weights to sum to one; throws when nothing is left.
template <class State>
void normalize(ParticleBelief<State>& belief, ActionId action) {
  double total = 0.0;
  for (const auto& p : belief) total += p.weight;
  if (belief.empty() || !(total > 0.0)) {
    throw BeliefDegeneracyError("every particle has zero weight after action " + std::to_string(action) +
                                "; the observation is inconsistent with the belief");
  }
  for (auto& p : belief) p.weight /= total;
}

/// Multinomial resampling to `count` equally weighted particles.
template <class State>
ParticleBelief<State> resample(const ParticleBelief<State>& belief, std::size_t count, SplitMix& rng) {
  if (belief.empty()) throw EmptyBeliefError();
  if (count == 0) count = belief.size();
  std::vector<double> cumulative(belief.size());
  double total = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) cumulative[i] = total += belief[i].weight;
  ParticleBelief<State> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    out.push_back({belief[static_cast<std::size_t>(it - cumulative.begin())].state, 1.0 / static_cast<double>(count)});
  }
  return out;
}

/// Particle-filter belief update: condition on (action, observation), then
/// resample to a fixed count.
template <Model M>
ParticleBelief<typename M::State> belief_update(const ParticleBelief<typename M::State>& belief, ActionId action,
                                                const typename M::Observation& observation, const M& model,
                                                SplitMix& rng, const FilterSettings& settings = {}) {
  if (belief.empty()) throw EmptyBeliefError();
  check_action(model, action);
  ParticleBelief<typename M::State> weighted;
  if constexpr (StructuredBeliefModel<M>) {
    if (settings.structured) {
      weighted = model.structured_update(belief, action, observation);
    } else {
      weighted = propagate_and_weight(model, belief, action, observation, rng);
    }
  } else {
    weighted = propagate_and_weight(model, belief, action, observation, rng);
  }
  normalize(weighted, action);
  return resample(weighted, settings.particle_count, rng);
}

}  // namespace pdespot
