#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pdespot/core/model.hpp"

namespace pdespot::domains {

/// Two-robot RockSample on an n x n grid with m rocks. Each robot picks one
/// of {N, E, S, W, Sample, Sense rock k}; the joint action index is
/// first * (5 + m) + second. Leaving the grid eastwards pays the exit reward
/// and retires the robot.
class Mars {
 public:
  struct Robot {
    std::int16_t x = 0;  // column
    std::int16_t y = 0;  // row
    bool exited = false;
    bool operator==(const Robot&) const = default;
  };

  struct State {
    std::array<Robot, 2> robots{};
    std::uint32_t good = 0;  // bit k set when rock k is Good
    bool operator==(const State&) const = default;
  };

  /// Per-robot reading, combined as first * 3 + second.
  using Observation = std::uint8_t;
  enum Reading : std::uint8_t { kNothing = 0, kGood = 1, kBad = 2 };
  enum SubAction : ActionId { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3, kSample = 4, kSenseFirst = 5 };

  struct Params {
    int size = 11;
    int rocks = 11;
    double half_efficiency_distance = 4.0;
    std::uint64_t layout_seed = 3;
    double sample_reward = 10.0;
    double exit_reward = 10.0;
    double discount = 0.95;
    std::int32_t max_depth = 60;

    void validate() const {
      if (size < 1 || rocks < 1) throw ContractViolation("rock sample needs n, m >= 1");
      if (rocks > 32 || rocks > size * size) throw ContractViolation("too many rocks for the grid");
      if (!(half_efficiency_distance > 0.0)) throw ContractViolation("sensing distance scale must be positive");
    }
  };

  Mars() : Mars(Params{}) {}
  Mars(int n, int m) : Mars(make_params(n, m)) {}
  explicit Mars(Params p) : params_(p) {
    params_.validate();
    SplitMix rng(params_.layout_seed);
    std::vector<bool> used(static_cast<std::size_t>(params_.size * params_.size), false);
    while (static_cast<int>(rock_cells_.size()) < params_.rocks) {
      const int cell = static_cast<int>(rng.uniform() * params_.size * params_.size);
      if (used[static_cast<std::size_t>(cell)]) continue;
      used[static_cast<std::size_t>(cell)] = true;
      rock_cells_.push_back({static_cast<std::int16_t>(cell % params_.size),
                             static_cast<std::int16_t>(cell / params_.size), false});
    }
    start_.robots[0] = {0, static_cast<std::int16_t>(params_.size / 4), false};
    start_.robots[1] = {0, static_cast<std::int16_t>((3 * params_.size) / 4), false};
  }

  static Params make_params(int n, int m) {
    Params p;
    p.size = n;
    p.rocks = m;
    return p;
  }

  int sub_action_count() const noexcept { return 5 + params_.rocks; }
  ModelSpec spec() const { return {sub_action_count() * sub_action_count(), params_.discount, params_.max_depth, 1}; }
  const Params& params() const noexcept { return params_; }
  const std::vector<Robot>& rock_positions() const noexcept { return rock_cells_; }
  const State& start_state() const noexcept { return start_; }

  ActionId joint(ActionId first, ActionId second) const noexcept { return first * sub_action_count() + second; }
  std::array<ActionId, 2> split(ActionId a) const noexcept { return {a / sub_action_count(), a % sub_action_count()}; }

  int rock_at(const Robot& r) const noexcept {
    for (std::size_t k = 0; k < rock_cells_.size(); ++k)
      if (rock_cells_[k].x == r.x && rock_cells_[k].y == r.y) return static_cast<int>(k);
    return -1;
  }

  /// Probability that sensing rock k from `r` reads its true status.
  double sensing_accuracy(const Robot& r, int k) const noexcept {
    const auto& rock = rock_cells_[static_cast<std::size_t>(k)];
    const double d = std::hypot(static_cast<double>(r.x - rock.x), static_cast<double>(r.y - rock.y));
    return 0.5 * (1.0 + std::exp2(-d / params_.half_efficiency_distance));
  }

  StepOutcome<State, Observation> step(const State& s, ActionId a, RandomDraws draws) const {
    check_action(*this, a);
    const auto subs = split(a);
    State next = s;
    double reward = 0.0;
    // Samples and moves in robot order, then readings against the result.
    for (std::size_t i = 0; i < 2; ++i) {
      Robot& robot = next.robots[i];
      if (robot.exited) continue;
      const ActionId sub = subs[i];
      if (sub == kSample) {
        const int k = rock_at(robot);
        if (k >= 0 && (next.good >> k & 1U)) {
          reward += params_.sample_reward;
          next.good &= ~(std::uint32_t{1} << k);
        } else {
          reward -= params_.sample_reward;
        }
      } else if (sub < kSample) {
        reward += move(robot, sub);
      }
    }
    Observation z = 0;
    for (std::size_t i = 0; i < 2; ++i) {
      const Robot& robot = next.robots[i];
      Reading reading = kNothing;
      if (!robot.exited && subs[i] >= kSenseFirst) {
        const int k = subs[i] - kSenseFirst;
        const bool good = next.good >> k & 1U;
        const bool correct = draws.uniform(static_cast<std::uint32_t>(i)) < sensing_accuracy(robot, k);
        reading = good == correct ? kGood : kBad;
      }
      z = static_cast<Observation>(z * 3 + reading);
    }
    return {next, z, reward, is_terminal(next)};
  }

  bool is_terminal(const State& s) const noexcept { return s.robots[0].exited && s.robots[1].exited; }

  // Every good rock sampled at once plus the fastest exit of each robot.
  double upper_bound_heuristic(const State& s) const noexcept {
    double value = params_.sample_reward * std::popcount(s.good);
    for (const auto& r : s.robots)
      if (!r.exited) value += params_.exit_reward * std::pow(params_.discount, params_.size - r.x - 1);
    return value;
  }

  // Exiting is always available and never costs anything.
  double lower_bound_heuristic(const State&) const noexcept { return 0.0; }

  ActionId default_policy_action(const State&, int) const noexcept { return joint(kEast, kEast); }

  double observation_likelihood(const State& next, ActionId a, Observation z) const noexcept {
    if (a < 0 || a >= spec().action_count || z >= 9) return 0.0;
    const auto subs = split(a);
    const std::array<int, 2> readings{z / 3, z % 3};
    double p = 1.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const Robot& robot = next.robots[i];
      if (robot.exited || subs[i] < kSenseFirst) {
        if (readings[i] != kNothing) return 0.0;
        continue;
      }
      if (readings[i] == kNothing) return 0.0;
      const int k = subs[i] - kSenseFirst;
      const bool good = next.good >> k & 1U;
      const double acc = sensing_accuracy(robot, k);
      p *= (readings[i] == kGood) == good ? acc : 1.0 - acc;
    }
    return p;
  }

  Observation terminal_observation() const noexcept { return 0; }

  /// Robots at their start cells, each rock Good with probability 1/2.
  ParticleBelief<State> initial_belief(std::size_t count, std::uint64_t seed) const {
    if (count == 0) count = 1;
    SplitMix rng(seed);
    ParticleBelief<State> belief;
    belief.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      State s = start_;
      for (int k = 0; k < params_.rocks; ++k)
        if (rng.uniform() < 0.5) s.good |= std::uint32_t{1} << k;
      belief.push_back({s, 1.0 / static_cast<double>(count)});
    }
    return belief;
  }

 private:
  double move(Robot& r, ActionId dir) const noexcept {
    const int last = params_.size - 1;
    switch (dir) {
      case kNorth:
        if (r.y > 0) --r.y;
        return 0.0;
      case kSouth:
        if (r.y < last) ++r.y;
        return 0.0;
      case kWest:
        if (r.x > 0) --r.x;
        return 0.0;
      default:
        if (r.x < last) {
          ++r.x;
          return 0.0;
        }
        r.exited = true;
        return params_.exit_reward;
    }
  }

  Params params_;
  std::vector<Robot> rock_cells_;
  State start_;
};

}  // namespace pdespot::domains
