#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "pdespot/core/model.hpp"

namespace pdespot::domains {

/// Speed control along a straight path through a crowd. The vehicle picks
/// Accelerate, Decelerate or Maintain; pedestrians walk toward hidden goals
/// with noisy headings. Positions and velocities are observed on a grid,
/// goals never are. Each step factors into a vehicle part and one part per
/// pedestrian.
class Driving {
 public:
  static constexpr int kMaxPedestrians = 20;

  struct Vehicle {
    double x = 0.0;
    double speed = 0.0;
    bool operator==(const Vehicle&) const = default;
  };

  struct Pedestrian {
    double x = 0.0;
    double y = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    std::uint8_t goal = 0;
    bool operator==(const Pedestrian&) const = default;
  };

  struct State {
    Vehicle vehicle;
    std::array<Pedestrian, kMaxPedestrians> pedestrians{};
    bool collided = false;
    bool arrived = false;
    bool operator==(const State&) const = default;
  };

  /// Discretized vehicle position and speed, then x, y, vx, vy per pedestrian.
  using Observation = std::vector<std::int32_t>;

  struct FactorPart {
    Vehicle vehicle;
    Pedestrian pedestrian;
  };

  enum Action : ActionId { kAccelerate = 0, kDecelerate = 1, kMaintain = 2 };

  struct Params {
    int pedestrians = 6;
    std::uint64_t scene_seed = 11;
    double path_length = 20.0;
    double dt = 0.5;
    double max_speed = 3.0;
    double speed_step = 0.5;
    double control_failure = 0.01;
    double walk_speed = 1.0;
    double heading_noise = 0.3;  // radians
    double goal_offset = 6.0;
    double collision_radius = 1.0;
    double collision_penalty = -1000.0;  // scaled by speed^2 + 0.5
    double goal_reward = 1000.0;
    double time_cost = -0.1;
    double deceleration_penalty = -0.1;
    double position_bin = 0.5;
    double speed_bin = 0.03;
    double discount = 0.95;
    std::int32_t max_depth = 60;

    void validate() const {
      if (pedestrians < 0 || pedestrians > kMaxPedestrians) throw ContractViolation("pedestrian count out of range");
      if (!(dt > 0.0 && max_speed > 0.0 && path_length > 0.0)) throw ContractViolation("bad driving kinematics");
      if (!(position_bin > 0.0 && speed_bin > 0.0)) throw ContractViolation("bins must be positive");
    }
  };

  Driving() : Driving(Params{}) {}
  explicit Driving(int pedestrians) : Driving(with_pedestrians(pedestrians)) {}
  explicit Driving(Params p) : params_(p) {
    params_.validate();
    const double l = params_.path_length;
    goals_ = {{{0.25 * l, params_.goal_offset}},
              {{0.25 * l, -params_.goal_offset}},
              {{0.75 * l, params_.goal_offset}},
              {{0.75 * l, -params_.goal_offset}}};
  }

  /// The crowd sizes used in the benchmark: 6, 12 or 20.
  static Params with_pedestrians(int count) {
    if (count != 6 && count != 12 && count != 20) throw ConfigError("pedestrian count must be 6, 12 or 20");
    Params p;
    p.pedestrians = count;
    return p;
  }

  ModelSpec spec() const { return {3, params_.discount, params_.max_depth, 1 + params_.pedestrians}; }
  const Params& params() const noexcept { return params_; }
  const std::vector<std::array<double, 2>>& goals() const noexcept { return goals_; }

  FactorPart step_factored(const State& s, ActionId a, RandomDraws draws, std::int32_t element) const {
    FactorPart part;
    if (element == 0) {
      part.vehicle = advance_vehicle(s.vehicle, a, draws);
    } else {
      part.pedestrian = advance_pedestrian(s.pedestrians[static_cast<std::size_t>(element - 1)], draws, element - 1);
    }
    return part;
  }

  StepOutcome<State, Observation> compose_factored(const State& s, ActionId a, RandomDraws,
                                                   std::span<const FactorPart> parts) const {
    State next = s;
    next.vehicle = parts[0].vehicle;
    for (int j = 0; j < params_.pedestrians; ++j)
      next.pedestrians[static_cast<std::size_t>(j)] = parts[static_cast<std::size_t>(j) + 1].pedestrian;
    return settle(std::move(next), a);
  }

  StepOutcome<State, Observation> step(const State& s, ActionId a, RandomDraws draws) const {
    check_action(*this, a);
    State next = s;
    next.vehicle = advance_vehicle(s.vehicle, a, draws);
    for (int j = 0; j < params_.pedestrians; ++j) {
      const auto k = static_cast<std::size_t>(j);
      next.pedestrians[k] = advance_pedestrian(s.pedestrians[k], draws, j);
    }
    return settle(std::move(next), a);
  }

  bool is_terminal(const State& s) const noexcept { return s.collided || s.arrived; }

  // Goal reward at the earliest arrival running at full speed.
  double upper_bound_heuristic(const State& s) const noexcept {
    if (is_terminal(s)) return 0.0;
    const double remaining = std::max(params_.path_length - s.vehicle.x, 0.0);
    const double steps = std::ceil(remaining / (params_.max_speed * params_.dt));
    return params_.goal_reward * std::pow(params_.discount, std::max(steps - 1.0, 0.0));
  }

  // Braking and waiting: every step costs at most time plus smoothness.
  double lower_bound_heuristic(const State& s) const noexcept {
    if (is_terminal(s)) return 0.0;
    return (params_.time_cost + params_.deceleration_penalty) / (1.0 - params_.discount);
  }

  /// Brakes for a pedestrian near the lane ahead, otherwise speeds up.
  ActionId default_policy_action(const State& s, int) const noexcept {
    const double reach = s.vehicle.x + 2.0 * params_.collision_radius + s.vehicle.speed * 2.0 * params_.dt;
    for (int j = 0; j < params_.pedestrians; ++j) {
      const auto& p = s.pedestrians[static_cast<std::size_t>(j)];
      if (p.x >= s.vehicle.x - params_.collision_radius && p.x <= reach && std::abs(p.y) < 2.0 * params_.collision_radius)
        return kDecelerate;
    }
    return s.vehicle.speed < params_.max_speed ? kAccelerate : kMaintain;
  }

  Observation observe(const State& s) const {
    Observation z;
    z.reserve(2 + 4 * static_cast<std::size_t>(params_.pedestrians));
    z.push_back(bin(s.vehicle.x, params_.position_bin));
    z.push_back(bin(s.vehicle.speed, params_.speed_bin));
    for (int j = 0; j < params_.pedestrians; ++j) {
      const auto& p = s.pedestrians[static_cast<std::size_t>(j)];
      z.push_back(bin(p.x, params_.position_bin));
      z.push_back(bin(p.y, params_.position_bin));
      z.push_back(bin(p.vx, params_.speed_bin));
      z.push_back(bin(p.vy, params_.speed_bin));
    }
    return z;
  }

  double observation_likelihood(const State& next, ActionId a, const Observation& z) const {
    if (a < 0 || a >= 3) return 0.0;
    return observe(next) == z ? 1.0 : 0.0;
  }

  Observation terminal_observation() const { return {}; }

  /// Scene fixed by the scene seed: vehicle at the path start, pedestrians
  /// scattered around the road at rest. Goals are drawn per particle from
  /// `seed`.
  ParticleBelief<State> initial_belief(std::size_t count, std::uint64_t seed) const {
    if (count == 0) count = 1;
    SplitMix layout(params_.scene_seed);
    State scene;
    for (int j = 0; j < params_.pedestrians; ++j) {
      auto& p = scene.pedestrians[static_cast<std::size_t>(j)];
      p.x = 3.0 + layout.uniform() * (params_.path_length - 3.0);
      const double side = layout.uniform() < 0.5 ? -1.0 : 1.0;
      p.y = side * (params_.collision_radius + 0.5 + layout.uniform() * (params_.goal_offset - 2.0));
    }
    SplitMix rng(seed);
    ParticleBelief<State> belief;
    belief.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      State s = scene;
      for (int j = 0; j < params_.pedestrians; ++j)
        s.pedestrians[static_cast<std::size_t>(j)].goal = static_cast<std::uint8_t>(rng.uniform() * goals_.size());
      belief.push_back({s, 1.0 / static_cast<double>(count)});
    }
    return belief;
  }

  /// Belief update that copies the observed components into every particle
  /// and reweights goals by how well each explains the observed headings.
  /// Returns normalized weights; resampling is left to the caller.
  ParticleBelief<State> structured_update(const ParticleBelief<State>& belief, ActionId, const Observation& z) const {
    if (z.size() != 2 + 4 * static_cast<std::size_t>(params_.pedestrians)) return {};
    ParticleBelief<State> out;
    out.reserve(belief.size());
    std::vector<double> log_weights;
    log_weights.reserve(belief.size());
    const double sigma = std::max(params_.heading_noise, 1e-3);
    for (const auto& particle : belief) {
      if (!(particle.weight > 0.0)) continue;
      State s = particle.state;
      double log_w = std::log(particle.weight);
      s.vehicle.x = z[0] * params_.position_bin;
      s.vehicle.speed = z[1] * params_.speed_bin;
      for (int j = 0; j < params_.pedestrians; ++j) {
        auto& p = s.pedestrians[static_cast<std::size_t>(j)];
        const std::size_t base = 2 + 4 * static_cast<std::size_t>(j);
        const double nx = z[base] * params_.position_bin;
        const double ny = z[base + 1] * params_.position_bin;
        const double dx = nx - p.x;
        const double dy = ny - p.y;
        if (std::hypot(dx, dy) > params_.position_bin) {
          const auto& g = goals_[p.goal];
          const double expected = std::atan2(g[1] - p.y, g[0] - p.x);
          const double diff = std::remainder(std::atan2(dy, dx) - expected, 2.0 * std::numbers::pi);
          log_w += -0.5 * (diff * diff) / (sigma * sigma);
        }
        p.x = nx;
        p.y = ny;
        p.vx = z[base + 2] * params_.speed_bin;
        p.vy = z[base + 3] * params_.speed_bin;
      }
      out.push_back({s, 0.0});
      log_weights.push_back(log_w);
    }
    if (out.empty()) return out;
    const double peak = *std::max_element(log_weights.begin(), log_weights.end());
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].weight = std::exp(log_weights[i] - peak);
      total += out[i].weight;
    }
    for (auto& p : out) p.weight /= total;
    return out;
  }

 private:
  static std::int32_t bin(double value, double width) noexcept {
    return static_cast<std::int32_t>(std::lround(value / width));
  }

  Vehicle advance_vehicle(const Vehicle& v, ActionId a, RandomDraws draws) const {
    Vehicle next = v;
    if (a != kMaintain && draws.uniform(0) >= params_.control_failure) {
      const double delta = a == kAccelerate ? params_.speed_step : -params_.speed_step;
      next.speed = std::clamp(v.speed + delta, 0.0, params_.max_speed);
    }
    next.x = v.x + next.speed * params_.dt;
    return next;
  }

  Pedestrian advance_pedestrian(const Pedestrian& p, RandomDraws draws, int index) const {
    Pedestrian next = p;
    const auto& g = goals_[p.goal];
    const double gx = g[0] - p.x;
    const double gy = g[1] - p.y;
    const double step = params_.walk_speed * params_.dt;
    const double noise = draws.normal(static_cast<std::uint32_t>(1 + index)) * params_.heading_noise;
    if (std::hypot(gx, gy) <= step) {
      next.vx = 0.0;
      next.vy = 0.0;
      return next;
    }
    const double heading = std::atan2(gy, gx) + noise;
    next.vx = params_.walk_speed * std::cos(heading);
    next.vy = params_.walk_speed * std::sin(heading);
    next.x = p.x + next.vx * params_.dt;
    next.y = p.y + next.vy * params_.dt;
    return next;
  }

  StepOutcome<State, Observation> settle(State next, ActionId a) const {
    double reward = params_.time_cost;
    if (a == kDecelerate) reward += params_.deceleration_penalty;
    if (next.vehicle.speed > 0.0) {
      for (int j = 0; j < params_.pedestrians; ++j) {
        const auto& p = next.pedestrians[static_cast<std::size_t>(j)];
        if (std::hypot(p.x - next.vehicle.x, p.y) < params_.collision_radius) {
          next.collided = true;
          break;
        }
      }
    }
    if (next.collided) {
      const double v = next.vehicle.speed;
      reward = params_.collision_penalty * (v * v + 0.5);
    } else if (next.vehicle.x >= params_.path_length) {
      next.arrived = true;
      reward += params_.goal_reward;
    }
    Observation z = observe(next);
    const bool terminal = is_terminal(next);
    return {std::move(next), std::move(z), reward, terminal};
  }

  Params params_;
  std::vector<std::array<double, 2>> goals_;
};

}  // namespace pdespot::domains
