#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "pdespot/core/model.hpp"

namespace pdespot::domains {

/// Explicit-table POMDP with randomly generated dynamics. Small instances
/// can be enumerated exactly, which makes it the reference for belief
/// tracking checks.
class Tabular {
 public:
  struct State {
    std::uint32_t index = 0;
    bool operator==(const State&) const = default;
  };
  using Observation = std::uint32_t;

  struct Params {
    std::uint32_t states = 2;
    std::uint32_t actions = 2;
    std::uint32_t observations = 2;
    std::uint64_t seed = 1;
    double discount = 0.95;
    std::int32_t max_depth = 30;
  };

  explicit Tabular(Params p) : params_(p) {
    if (p.states < 1 || p.actions < 1 || p.observations < 1) throw ContractViolation("empty tabular model");
    SplitMix rng(p.seed);
    auto simplex = [&](std::size_t n) {
      std::vector<double> w(n);
      double total = 0.0;
      for (auto& x : w) {
        x = 0.05 + rng.uniform();
        total += x;
      }
      for (auto& x : w) x /= total;
      return w;
    };
    transition_.resize(std::size_t{p.actions} * p.states);
    for (auto& row : transition_) row = simplex(p.states);
    emission_.resize(std::size_t{p.actions} * p.states);
    for (auto& row : emission_) row = simplex(p.observations);
    reward_.resize(std::size_t{p.states} * p.actions);
    for (auto& r : reward_) r = rng.uniform() * 2.0 - 1.0;
    reward_max_ = *std::max_element(reward_.begin(), reward_.end());
    reward_min_ = *std::min_element(reward_.begin(), reward_.end());
  }

  ModelSpec spec() const {
    return {static_cast<std::int32_t>(params_.actions), params_.discount, params_.max_depth, 1};
  }
  const Params& params() const noexcept { return params_; }

  double transition_probability(State s, ActionId a, State next) const {
    return transition_[row(a, s.index)][next.index];
  }
  double reward(State s, ActionId a) const { return reward_[std::size_t{s.index} * params_.actions + a]; }

  StepOutcome<State, Observation> step(const State& s, ActionId a, RandomDraws draws) const {
    check_action(*this, a);
    const State next{pick(transition_[row(a, s.index)], draws.uniform(0))};
    const Observation z = pick(emission_[row(a, next.index)], draws.uniform(1));
    return {next, z, reward(s, a), false};
  }

  bool is_terminal(const State&) const noexcept { return false; }
  double upper_bound_heuristic(const State&) const noexcept { return reward_max_ / (1.0 - params_.discount); }
  double lower_bound_heuristic(const State&) const noexcept { return reward_min_ / (1.0 - params_.discount); }
  ActionId default_policy_action(const State&, int) const noexcept { return 0; }

  double observation_likelihood(const State& next, ActionId a, Observation z) const {
    if (a < 0 || a >= static_cast<ActionId>(params_.actions) || z >= params_.observations) return 0.0;
    return emission_[row(a, next.index)][z];
  }

  Observation terminal_observation() const noexcept { return 0; }

  /// Uniform prior, one particle per state.
  ParticleBelief<State> initial_belief(std::size_t = 0, std::uint64_t = 0) const {
    ParticleBelief<State> belief;
    for (std::uint32_t s = 0; s < params_.states; ++s) belief.push_back({State{s}, 1.0 / params_.states});
    return belief;
  }

 private:
  std::size_t row(ActionId a, std::uint32_t s) const {
    return static_cast<std::size_t>(a) * params_.states + s;
  }

  static std::uint32_t pick(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    for (std::uint32_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return static_cast<std::uint32_t>(probs.size() - 1);
  }

  Params params_;
  std::vector<std::vector<double>> transition_;  // [a * S + s][s']
  std::vector<std::vector<double>> emission_;    // [a * S + s'][z]
  std::vector<double> reward_;                   // [s * A + a]
  double reward_max_ = 0.0;
  double reward_min_ = 0.0;
};

}  // namespace pdespot::domains
