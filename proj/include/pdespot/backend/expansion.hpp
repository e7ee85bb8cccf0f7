#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "pdespot/core/model.hpp"
#include "pdespot/tree/belief_tree.hpp"

namespace pdespot {

/// Discount and depth cap shared by rollouts and bound initialization.
struct RolloutSettings {
  double gamma = 0.95;
  std::int32_t max_depth = 90;
};

/// Work order for one leaf: replay `last_action` on the gathered parent
/// states, expand every action under every scenario, initialize bounds.
template <Model M>
struct ExpansionRequest {
  using State = typename M::State;

  std::uint64_t node_id = 0;
  std::vector<State> parent_states;
  std::vector<ScenarioId> scenario_ids;
  std::vector<std::uint64_t> stream_seeds;
  std::int32_t depth = 0;  // depth of the node being expanded
  std::optional<ActionId> last_action;

  std::size_t size() const noexcept { return scenario_ids.size(); }

  void validate(const ModelSpec& spec) const {
    if (scenario_ids.empty()) throw ContractViolation("expansion request has no scenarios");
    if (parent_states.size() != scenario_ids.size() || stream_seeds.size() != scenario_ids.size()) {
      throw ContractViolation("expansion request arrays disagree in length");
    }
    if (depth < 0) throw ContractViolation("expansion depth must be >= 0");
    if (last_action && (*last_action < 0 || *last_action >= spec.action_count)) {
      throw ContractViolation("expansion request replays an invalid action");
    }
    if (!last_action && depth != 0) throw ContractViolation("only the root may omit its last action");
  }
};

template <Model M>
struct ScenarioOutcome {
  typename M::Observation observation{};
  double reward = 0.0;
  bool terminal = false;
  typename M::State next_state{};
  double upper = 0.0;  // per-scenario heuristic value at the child
  double lower = 0.0;  // per-scenario rollout value at the child
};

template <Model M>
struct ChildInit {
  typename M::Observation observation{};
  std::vector<std::uint32_t> positions;  // indices into the request's scenario list
  Bounds bounds;
};

struct ExpansionTiming {
  std::int64_t update_ns = 0;
  std::int64_t expand_ns = 0;
  std::int64_t rollout_ns = 0;
  std::int64_t reduce_ns = 0;
};

template <Model M>
struct ExpansionResult {
  std::uint64_t node_id = 0;
  std::int32_t action_count = 0;
  std::size_t scenario_count = 0;
  std::vector<typename M::State> node_states;
  std::vector<ScenarioOutcome<M>> outcomes;  // index: action * scenario_count + i
  std::vector<double> mean_step_reward;      // per action
  std::vector<std::vector<ChildInit<M>>> children;  // per action, ascending observation
  ExpansionTiming timing;

  const ScenarioOutcome<M>& outcome(ActionId a, std::size_t i) const {
    return outcomes[static_cast<std::size_t>(a) * scenario_count + i];
  }
};

namespace detail {
inline bool same_bits(double a, double b) noexcept {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}
}  // namespace detail

/// Bit-for-bit equality of two results; timings are ignored.
template <Model M>
bool identical(const ExpansionResult<M>& a, const ExpansionResult<M>& b) {
  using detail::same_bits;
  if (a.node_id != b.node_id || a.action_count != b.action_count || a.scenario_count != b.scenario_count) return false;
  if (a.node_states != b.node_states || a.outcomes.size() != b.outcomes.size()) return false;
  for (std::size_t k = 0; k < a.outcomes.size(); ++k) {
    const auto& x = a.outcomes[k];
    const auto& y = b.outcomes[k];
    if (!(x.observation == y.observation) || x.terminal != y.terminal || !(x.next_state == y.next_state) ||
        !same_bits(x.reward, y.reward) || !same_bits(x.upper, y.upper) || !same_bits(x.lower, y.lower)) {
      return false;
    }
  }
  if (a.mean_step_reward.size() != b.mean_step_reward.size() || a.children.size() != b.children.size()) return false;
  for (std::size_t k = 0; k < a.mean_step_reward.size(); ++k) {
    if (!same_bits(a.mean_step_reward[k], b.mean_step_reward[k])) return false;
  }
  for (std::size_t k = 0; k < a.children.size(); ++k) {
    if (a.children[k].size() != b.children[k].size()) return false;
    for (std::size_t c = 0; c < a.children[k].size(); ++c) {
      const auto& x = a.children[k][c];
      const auto& y = b.children[k][c];
      if (!(x.observation == y.observation) || x.positions != y.positions ||
          !same_bits(x.bounds.upper, y.bounds.upper) || !same_bits(x.bounds.lower, y.bounds.lower)) {
        return false;
      }
    }
  }
  return true;
}

/// Discounted default-policy return from `start_depth`, with the tail past
/// `max_depth` estimated by the model's lower-bound heuristic.
template <Model M>
double rollout(const M& model, typename M::State state, std::uint64_t stream_seed, std::int32_t start_depth,
               const RolloutSettings& settings) {
  if (start_depth > settings.max_depth) throw ContractViolation("rollout starts beyond the depth cap");
  double total = 0.0;
  double discount = 1.0;
  for (std::int32_t t = start_depth; t < settings.max_depth; ++t) {
    if (model.is_terminal(state)) return total;
    const ActionId action = model.default_policy_action(state, t);
    auto out = model.step(state, action, RandomDraws(stream_seed, t + 1));
    total += discount * out.reward;
    discount *= settings.gamma;
    if (out.terminal) return total;
    state = std::move(out.next_state);
  }
  if (model.is_terminal(state)) return total;
  return total + discount * model.lower_bound_heuristic(state);
}

template <Model M>
double rollout(const M& model, const Scenario<typename M::State>& scenario, std::int32_t start_depth,
               const RolloutSettings& settings) {
  return rollout(model, scenario.initial_state, scenario.stream_seed, start_depth, settings);
}

/// Root bounds: scenario means of the heuristic and of default-policy rollouts.
template <Model M>
Bounds initial_root_bounds(const M& model, const std::vector<Scenario<typename M::State>>& scenarios,
                           const RolloutSettings& settings) {
  if (scenarios.empty()) throw ContractViolation("no scenarios");
  double upper = 0.0;
  double lower = 0.0;
  for (const auto& sc : scenarios) {
    if (model.is_terminal(sc.initial_state)) continue;
    upper += model.upper_bound_heuristic(sc.initial_state);
    lower += rollout(model, sc.initial_state, sc.stream_seed, 0, settings);
  }
  const auto n = static_cast<double>(scenarios.size());
  Bounds b{upper / n, lower / n};
  if (b.upper < b.lower) b.upper = b.lower;
  return b;
}

/// The per-item pieces of an expansion. Every backend calls exactly these
/// functions and then `reduce`, so results differ only in scheduling.
template <Model M>
struct ExpansionKernel {
  const M& model;
  const ExpansionRequest<M>& request;
  const RolloutSettings& settings;
  ExpansionResult<M>& result;

  static ExpansionResult<M> allocate(const M& model, const ExpansionRequest<M>& request) {
    ExpansionResult<M> r;
    r.node_id = request.node_id;
    r.action_count = model.spec().action_count;
    r.scenario_count = request.size();
    r.node_states.resize(request.size());
    r.outcomes.resize(static_cast<std::size_t>(r.action_count) * request.size());
    return r;
  }

  void update(std::size_t i) const {
    if (request.last_action) {
      auto out = simulate_step(model, request.parent_states[i], *request.last_action,
                               RandomDraws(request.stream_seeds[i], request.depth));
      result.node_states[i] = std::move(out.next_state);
    } else {
      result.node_states[i] = request.parent_states[i];
    }
  }

  RandomDraws expansion_draws(std::size_t i) const { return RandomDraws(request.stream_seeds[i], request.depth + 1); }

  void expand(std::size_t item) const {
    const auto [a, i] = split(item);
    auto out = simulate_step(model, result.node_states[i], a, expansion_draws(i));
    store(item, std::move(out));
  }

  void store(std::size_t item, OutcomeOf<M>&& out) const {
    auto& slot = result.outcomes[item];
    slot.observation = std::move(out.observation);
    slot.reward = out.reward;
    slot.terminal = out.terminal;
    slot.next_state = std::move(out.next_state);
  }

  void bound(std::size_t item) const {
    const auto [a, i] = split(item);
    (void)a;
    auto& slot = result.outcomes[item];
    if (slot.terminal || model.is_terminal(slot.next_state)) {
      slot.upper = 0.0;
      slot.lower = 0.0;
      return;
    }
    slot.upper = model.upper_bound_heuristic(slot.next_state);
    slot.lower = rollout(model, slot.next_state, request.stream_seeds[i], request.depth + 1, settings);
  }

  /// Per-action means and per-(action, observation) child bounds, reduced
  /// in ascending scenario order.
  void reduce() const {
    const std::size_t n = request.size();
    const auto actions = static_cast<std::size_t>(result.action_count);
    const bool at_cap = request.depth + 1 >= settings.max_depth;
    result.mean_step_reward.assign(actions, 0.0);
    result.children.assign(actions, {});
    for (std::size_t a = 0; a < actions; ++a) {
      double reward_sum = 0.0;
      std::map<typename M::Observation, std::vector<std::uint32_t>> groups;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& slot = result.outcomes[a * n + i];
        reward_sum += slot.reward;
        groups[slot.observation].push_back(static_cast<std::uint32_t>(i));
      }
      result.mean_step_reward[a] = reward_sum / static_cast<double>(n);
      auto& kids = result.children[a];
      kids.reserve(groups.size());
      for (auto& [obs, positions] : groups) {
        double upper = 0.0;
        double lower = 0.0;
        for (std::uint32_t i : positions) {
          upper += result.outcomes[a * n + i].upper;
          lower += result.outcomes[a * n + i].lower;
        }
        const auto count = static_cast<double>(positions.size());
        Bounds b{upper / count, lower / count};
        if (at_cap) b.upper = b.lower;
        if (b.upper < b.lower) b.upper = b.lower;
        kids.push_back(ChildInit<M>{obs, std::move(positions), b});
      }
    }
  }

  std::pair<ActionId, std::size_t> split(std::size_t item) const {
    const std::size_t n = request.size();
    return {static_cast<ActionId>(item / n), item % n};
  }
};

/// Straight-line reference implementation of a full expansion.
template <Model M>
ExpansionResult<M> expand_and_initialize(const M& model, const ExpansionRequest<M>& request,
                                         const RolloutSettings& settings) {
  request.validate(model.spec());
  auto result = ExpansionKernel<M>::allocate(model, request);
  const ExpansionKernel<M> kernel{model, request, settings, result};
  const std::size_t items = result.outcomes.size();
  for (std::size_t i = 0; i < request.size(); ++i) kernel.update(i);
  for (std::size_t k = 0; k < items; ++k) kernel.expand(k);
  for (std::size_t k = 0; k < items; ++k) kernel.bound(k);
  kernel.reduce();
  return result;
}

}  // namespace pdespot
