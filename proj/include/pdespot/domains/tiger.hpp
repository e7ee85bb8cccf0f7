#pragma once

#include <cstdint>

#include "pdespot/core/model.hpp"

namespace pdespot::domains {

/// Two-door tiger task; small enough for exact belief-space value iteration.
class Tiger {
 public:
  struct State {
    bool tiger_left = false;
    bool opened = false;
    bool operator==(const State&) const = default;
  };
  using Observation = std::uint8_t;

  enum Action : ActionId { kListen = 0, kOpenLeft = 1, kOpenRight = 2 };
  enum Obs : Observation { kHearLeft = 0, kHearRight = 1, kNone = 2 };

  struct Params {
    double listen_accuracy = 0.85;
    double listen_cost = -1.0;
    double treasure = 10.0;
    double tiger_penalty = -100.0;
    double discount = 0.95;
    std::int32_t max_depth = 20;
  };

  Tiger() = default;
  explicit Tiger(Params p) : params_(p) {}

  ModelSpec spec() const { return {3, params_.discount, params_.max_depth, 1}; }
  const Params& params() const noexcept { return params_; }

  StepOutcome<State, Observation> step(const State& s, ActionId a, RandomDraws draws) const {
    check_action(*this, a);
    if (a == kListen) {
      const bool correct = draws.uniform(0) < params_.listen_accuracy;
      const bool hear_left = correct ? s.tiger_left : !s.tiger_left;
      return {s, hear_left ? kHearLeft : kHearRight, params_.listen_cost, false};
    }
    const bool opened_left = a == kOpenLeft;
    const double reward = opened_left == s.tiger_left ? params_.tiger_penalty : params_.treasure;
    return {State{s.tiger_left, true}, kNone, reward, true};
  }

  bool is_terminal(const State& s) const noexcept { return s.opened; }

  // Opening the correct door right away is the best any scenario allows.
  double upper_bound_heuristic(const State& s) const noexcept { return s.opened ? 0.0 : params_.treasure; }

  // Listening forever.
  double lower_bound_heuristic(const State& s) const noexcept {
    return s.opened ? 0.0 : params_.listen_cost / (1.0 - params_.discount);
  }

  ActionId default_policy_action(const State&, int) const noexcept { return kListen; }

  double observation_likelihood(const State& next, ActionId a, Observation z) const noexcept {
    if (a != kListen) return z == kNone ? 1.0 : 0.0;
    if (z == kNone) return 0.0;
    if (z != kHearLeft && z != kHearRight) return 0.0;
    const bool hear_left = z == kHearLeft;
    return hear_left == next.tiger_left ? params_.listen_accuracy : 1.0 - params_.listen_accuracy;
  }

  Observation terminal_observation() const noexcept { return kNone; }

  /// Exact prior: two equally weighted particles whatever the requested count.
  ParticleBelief<State> initial_belief(std::size_t = 0, std::uint64_t = 0) const {
    return {{State{true, false}, 0.5}, {State{false, false}, 0.5}};
  }

 private:
  Params params_;
};

}  // namespace pdespot::domains
