#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "pdespot/core/model.hpp"

namespace pdespot::domains {

/// Grid navigation with a partially known map. The robot starts somewhere
/// on the top row, must pass a wall through whichever of two gates is open,
/// and reach the goal cell on the bottom row. Cells off the fixed layout are
/// occupied with a small prior probability; the robot only senses its eight
/// neighbours, with per-direction errors.
class Navigation {
 public:
  static constexpr int kMaxCells = 192;

  struct Params {
    int width = 13;
    int height = 13;
    int wall_row = 6;
    std::array<int, 2> gate_cols{3, 9};
    int goal_col = 6;
    int landmarks = 6;
    std::uint64_t layout_seed = 7;
    double unknown_occupancy = 0.1;
    double move_failure = 0.03;
    double observation_error = 0.03;
    double stay_reward = -0.2;
    double move_reward = -0.1;
    double crash_reward = -1.0;
    double goal_reward = 20.0;
    double discount = 0.95;
    std::int32_t max_depth = 60;

    /// 4x4 instance small enough for exact value iteration.
    static Params shrunken() {
      Params p;
      p.width = 4;
      p.height = 4;
      p.wall_row = 2;
      p.gate_cols = {0, 3};
      p.goal_col = 1;
      p.landmarks = 0;
      p.max_depth = 20;
      return p;
    }

    void validate() const {
      if (width < 2 || height < 3 || width * height > kMaxCells) throw ContractViolation("bad navigation grid size");
      if (wall_row < 1 || wall_row > height - 2) throw ContractViolation("wall row must be interior");
      for (int g : gate_cols)
        if (g < 0 || g >= width) throw ContractViolation("gate column out of range");
      if (gate_cols[0] == gate_cols[1]) throw ContractViolation("gates must differ");
      if (goal_col < 0 || goal_col >= width) throw ContractViolation("goal column out of range");
      if (landmarks < 0) throw ContractViolation("landmark count must be >= 0");
      for (double p : {unknown_occupancy, move_failure, observation_error})
        if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("probability out of range");
    }
  };

  struct Occupancy {
    std::array<std::uint64_t, 3> words{};

    bool test(int cell) const noexcept { return (words[cell >> 6] >> (cell & 63)) & 1U; }
    void set(int cell, bool on) noexcept {
      const std::uint64_t bit = std::uint64_t{1} << (cell & 63);
      if (on) {
        words[cell >> 6] |= bit;
      } else {
        words[cell >> 6] &= ~bit;
      }
    }
    bool operator==(const Occupancy&) const = default;
  };

  struct State {
    std::int16_t cell = 0;
    std::uint8_t open_gate = 0;
    bool at_goal = false;
    Occupancy occupied;
    bool operator==(const State&) const = default;
  };
  using Observation = std::uint8_t;  // one bit per neighbour, N first, clockwise

  enum Action : ActionId { kStay = 0 };  // 1..8 move N, NE, E, SE, S, SW, W, NW
  static constexpr std::array<int, 8> kRowStep{-1, -1, 0, 1, 1, 1, 0, -1};
  static constexpr std::array<int, 8> kColStep{0, 1, 1, 1, 0, -1, -1, -1};

  Navigation() : Navigation(Params{}) {}
  explicit Navigation(Params p) : params_(p) {
    params_.validate();
    const int cells = params_.width * params_.height;
    fixed_.assign(static_cast<std::size_t>(cells), false);
    unknown_.clear();
    for (int c = 0; c < params_.width; ++c) {
      if (c != params_.gate_cols[0] && c != params_.gate_cols[1]) fixed_[index(params_.wall_row, c)] = true;
    }
    place_landmarks();
    for (int r = 1; r < params_.height - 1; ++r) {
      if (r == params_.wall_row) continue;
      for (int c = 0; c < params_.width; ++c)
        if (!fixed_[index(r, c)]) unknown_.push_back(index(r, c));
    }
    for (int g = 0; g < 2; ++g) goal_distance_[g] = optimistic_distances(g);
  }

  ModelSpec spec() const { return {9, params_.discount, params_.max_depth, 1}; }
  const Params& params() const noexcept { return params_; }

  int index(int row, int col) const noexcept { return row * params_.width + col; }
  int row_of(int cell) const noexcept { return cell / params_.width; }
  int col_of(int cell) const noexcept { return cell % params_.width; }
  int goal_cell() const noexcept { return index(params_.height - 1, params_.goal_col); }
  int cell_count() const noexcept { return params_.width * params_.height; }

  /// Cells whose occupancy is uncertain in the initial belief.
  const std::vector<int>& unknown_cells() const noexcept { return unknown_; }
  bool fixed_obstacle(int cell) const { return fixed_[static_cast<std::size_t>(cell)]; }

  /// Occupancy for the given gate and unknown-cell assignment; bit i of
  /// `unknown_bits` refers to unknown_cells()[i].
  Occupancy layout(int open_gate, const std::vector<bool>& unknown_bits) const {
    Occupancy occ;
    for (int cell = 0; cell < cell_count(); ++cell)
      if (fixed_[static_cast<std::size_t>(cell)]) occ.set(cell, true);
    occ.set(index(params_.wall_row, params_.gate_cols[1 - open_gate]), true);
    for (std::size_t i = 0; i < unknown_.size() && i < unknown_bits.size(); ++i) occ.set(unknown_[i], unknown_bits[i]);
    return occ;
  }

  bool blocked(const State& s, int row, int col) const noexcept {
    if (row < 0 || row >= params_.height || col < 0 || col >= params_.width) return true;
    return s.occupied.test(index(row, col));
  }

  StepOutcome<State, Observation> step(const State& s, ActionId a, RandomDraws draws) const {
    check_action(*this, a);
    State next = s;
    double reward = params_.stay_reward;
    if (a != kStay) {
      const int r = row_of(s.cell) + kRowStep[static_cast<std::size_t>(a - 1)];
      const int c = col_of(s.cell) + kColStep[static_cast<std::size_t>(a - 1)];
      if (draws.uniform(0) < params_.move_failure) {
        reward = params_.move_reward;
      } else if (blocked(s, r, c)) {
        reward = params_.crash_reward;
      } else {
        next.cell = static_cast<std::int16_t>(index(r, c));
        if (next.cell == goal_cell()) {
          next.at_goal = true;
          reward = params_.goal_reward;
        } else {
          reward = params_.move_reward;
        }
      }
    }
    Observation z = true_observation(next);
    for (std::uint32_t k = 0; k < 8; ++k)
      if (draws.uniform(1 + k) < params_.observation_error) z ^= static_cast<Observation>(1U << k);
    return {next, z, reward, next.at_goal};
  }

  Observation true_observation(const State& s) const noexcept {
    Observation z = 0;
    for (std::size_t k = 0; k < 8; ++k)
      if (blocked(s, row_of(s.cell) + kRowStep[k], col_of(s.cell) + kColStep[k])) z |= static_cast<Observation>(1U << k);
    return z;
  }

  bool is_terminal(const State& s) const noexcept { return s.at_goal; }
  bool goal_reached(const State& s) const noexcept { return s.at_goal; }

  // Goal reward at the earliest possible arrival, with unknown cells free.
  double upper_bound_heuristic(const State& s) const noexcept {
    if (s.at_goal) return 0.0;
    const int d = goal_distance_[s.open_gate][static_cast<std::size_t>(s.cell)];
    if (d < 0) return 0.0;
    return params_.goal_reward * std::pow(params_.discount, std::max(d - 1, 0));
  }

  // Staying put forever.
  double lower_bound_heuristic(const State& s) const noexcept {
    if (s.at_goal) return 0.0;
    return std::min(params_.stay_reward, params_.move_reward) / (1.0 - params_.discount);
  }

  /// Heads for the open gate, then for the goal, stepping around obstacles.
  ActionId default_policy_action(const State& s, int) const noexcept {
    const int r = row_of(s.cell);
    const int c = col_of(s.cell);
    int target_row = params_.height - 1;
    int target_col = params_.goal_col;
    if (r < params_.wall_row) {
      target_row = params_.wall_row;
      target_col = params_.gate_cols[s.open_gate];
    }
    const int dr = target_row > r ? 1 : (target_row < r ? -1 : 0);
    const int dc = target_col > c ? 1 : (target_col < c ? -1 : 0);
    const int preferred[][2] = {{dr, dc}, {dr, 0}, {0, dc}, {dr, -1}, {dr, 1}, {1, 0}};
    for (const auto& d : preferred) {
      if (d[0] == 0 && d[1] == 0) continue;
      if (r < params_.wall_row && r + d[0] == params_.wall_row && c + d[1] != params_.gate_cols[s.open_gate]) continue;
      if (!blocked(s, r + d[0], c + d[1])) return move_action(d[0], d[1]);
    }
    return kStay;
  }

  double observation_likelihood(const State& next, ActionId a, Observation z) const noexcept {
    if (a < 0 || a >= 9) return 0.0;
    const Observation clean = true_observation(next);
    double p = 1.0;
    for (int k = 0; k < 8; ++k) {
      const bool agree = ((clean ^ z) >> k & 1U) == 0;
      p *= agree ? 1.0 - params_.observation_error : params_.observation_error;
    }
    return p;
  }

  Observation terminal_observation() const noexcept { return 0; }

  /// Robot uniform on the top row, unknown cells i.i.d. occupied, open gate
  /// uniform.
  ParticleBelief<State> initial_belief(std::size_t count, std::uint64_t seed) const {
    if (count == 0) count = 1;
    SplitMix rng(seed);
    ParticleBelief<State> belief;
    belief.reserve(count);
    std::vector<bool> bits(unknown_.size());
    for (std::size_t i = 0; i < count; ++i) {
      State s;
      s.open_gate = static_cast<std::uint8_t>(rng.uniform() < 0.5 ? 0 : 1);
      s.cell = static_cast<std::int16_t>(index(0, static_cast<int>(rng.uniform() * params_.width)));
      for (std::size_t u = 0; u < bits.size(); ++u) bits[u] = rng.uniform() < params_.unknown_occupancy;
      s.occupied = layout(s.open_gate, bits);
      belief.push_back({s, 1.0 / static_cast<double>(count)});
    }
    return belief;
  }

  static ActionId move_action(int dr, int dc) noexcept {
    for (std::size_t k = 0; k < 8; ++k)
      if (kRowStep[k] == dr && kColStep[k] == dc) return static_cast<ActionId>(k + 1);
    return kStay;
  }

  /// King-move distance to the goal over `occ`, or -1 when unreachable.
  std::vector<int> distances(const Occupancy& occ) const {
    std::vector<int> dist(static_cast<std::size_t>(cell_count()), -1);
    std::deque<int> frontier{goal_cell()};
    dist[static_cast<std::size_t>(goal_cell())] = 0;
    while (!frontier.empty()) {
      const int cell = frontier.front();
      frontier.pop_front();
      for (std::size_t k = 0; k < 8; ++k) {
        const int r = row_of(cell) + kRowStep[k];
        const int c = col_of(cell) + kColStep[k];
        if (r < 0 || r >= params_.height || c < 0 || c >= params_.width) continue;
        const int n = index(r, c);
        if (occ.test(n) || dist[static_cast<std::size_t>(n)] >= 0) continue;
        dist[static_cast<std::size_t>(n)] = dist[static_cast<std::size_t>(cell)] + 1;
        frontier.push_back(n);
      }
    }
    return dist;
  }

 private:
  void place_landmarks() {
    SplitMix rng(params_.layout_seed);
    std::vector<int> candidates;
    for (int r = 1; r < params_.height - 1; ++r) {
      if (std::abs(r - params_.wall_row) <= 1) continue;
      for (int c = 0; c < params_.width; ++c) {
        if (c == params_.goal_col) continue;
        candidates.push_back(index(r, c));
      }
    }
    for (int placed = 0; placed < params_.landmarks && !candidates.empty(); ++placed) {
      const auto pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(candidates.size()));
      fixed_[static_cast<std::size_t>(candidates[pick])] = true;
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
    }
  }

  std::vector<int> optimistic_distances(int open_gate) const { return distances(layout(open_gate, {})); }

  Params params_;
  std::vector<bool> fixed_;
  std::vector<int> unknown_;
  std::array<std::vector<int>, 2> goal_distance_;
};

}  // namespace pdespot::domains
