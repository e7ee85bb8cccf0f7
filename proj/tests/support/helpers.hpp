#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "pdespot/core/model.hpp"

namespace helpers {

/// First draws, scanning stream seeds, for which `accept` holds.
inline pdespot::RandomDraws find_draws(const std::function<bool(const pdespot::RandomDraws&)>& accept,
                                       int depth = 1) {
  for (std::uint64_t seed = 1;; ++seed) {
    pdespot::RandomDraws d(seed, depth);
    if (accept(d)) return d;
  }
}

/// A state reached by a short random walk from a particle of `belief`.
template <pdespot::Model M>
typename M::State random_state(const M& model, const pdespot::ParticleBelief<typename M::State>& belief,
                               std::mt19937_64& rng, int max_steps) {
  std::uniform_int_distribution<std::size_t> pick(0, belief.size() - 1);
  auto state = belief[pick(rng)].state;
  std::uniform_int_distribution<int> steps(0, max_steps);
  std::uniform_int_distribution<pdespot::ActionId> action(0, model.spec().action_count - 1);
  const int n = steps(rng);
  for (int t = 0; t < n && !model.is_terminal(state); ++t) {
    auto next = model.step(state, action(rng), pdespot::RandomDraws(rng(), 1));
    if (model.is_terminal(next.next_state)) break;
    state = next.next_state;
  }
  return state;
}

}  // namespace helpers
