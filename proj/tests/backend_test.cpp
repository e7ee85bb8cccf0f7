#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "pdespot/backend/backend.hpp"
#include "pdespot/domains/driving.hpp"
#include "pdespot/domains/mars.hpp"
#include "pdespot/domains/navigation.hpp"
#include "pdespot/domains/tabular.hpp"
#include "pdespot/domains/tiger.hpp"
#include "support/requests.hpp"

namespace {

using namespace pdespot;
using domains::Driving;
using domains::Mars;
using domains::Navigation;
using domains::Tabular;
using domains::Tiger;

template <Model M>
ExpansionRequest<M> root_request(const std::vector<typename M::State>& states, std::uint64_t seed) {
  ExpansionRequest<M> r;
  r.parent_states = states;
  for (std::size_t i = 0; i < states.size(); ++i) {
    r.scenario_ids.push_back(static_cast<ScenarioId>(i));
    r.stream_seeds.push_back(hash_combine(seed, i));
  }
  return r;
}

TEST(Expansion, TwoActionsOneScenario) {
  const Tabular model({3, 2, 2, 4, 0.9, 10});
  SerialBackend<Tabular> backend(model, {0.9, 10});
  const auto result = backend.run(root_request<Tabular>({{1}}, 3));
  EXPECT_EQ(result.outcomes.size(), 2U);
  ASSERT_EQ(result.children.size(), 2U);
  EXPECT_EQ(result.children[0].size() + result.children[1].size(), 2U);
  EXPECT_EQ(result.mean_step_reward[0], model.reward({1}, 0));
}

TEST(Expansion, TerminalScenariosGiveZeroFutureValue) {
  const Tiger tiger;
  SerialBackend<Tiger> backend(tiger, {0.95, 20});
  const auto done = backend.run(root_request<Tiger>({{true, true}, {false, true}}, 1));
  for (ActionId a = 0; a < 3; ++a) {
    EXPECT_EQ(done.mean_step_reward[static_cast<std::size_t>(a)], 0.0);
    ASSERT_EQ(done.children[static_cast<std::size_t>(a)].size(), 1U);
    EXPECT_EQ(done.children[static_cast<std::size_t>(a)][0].bounds, (Bounds{0.0, 0.0}));
  }
  // Opening a door records only the immediate reward.
  const auto live = backend.run(root_request<Tiger>({{true, false}, {false, false}}, 1));
  EXPECT_DOUBLE_EQ(live.mean_step_reward[Tiger::kOpenLeft], 0.5 * (-100.0 + 10.0));
  EXPECT_EQ(live.children[Tiger::kOpenLeft][0].bounds, (Bounds{0.0, 0.0}));
}

// Per-scenario default-policy return written out from its definition.
double reference_rollout(const Navigation& nav, Navigation::State s, std::uint64_t seed, int start, int cap,
                         double gamma) {
  double total = 0.0;
  double weight = 1.0;
  int t = start;
  while (t < cap) {
    if (nav.is_terminal(s)) return total;
    const auto out = nav.step(s, nav.default_policy_action(s, t), RandomDraws(seed, t + 1));
    total += weight * out.reward;
    weight *= gamma;
    s = out.next_state;
    ++t;
    if (out.terminal) return total;
  }
  return nav.is_terminal(s) ? total : total + weight * nav.lower_bound_heuristic(s);
}

TEST(Expansion, ChildBoundsAreScenarioMeansOfHeuristicAndRollout) {
  const Navigation nav(Navigation::Params::shrunken());
  const RolloutSettings settings{0.95, 20};
  SerialBackend<Navigation> backend(nav, settings);
  std::mt19937_64 rng(3);
  const auto belief = nav.initial_belief(200, 1);
  const auto request = helpers::random_request(nav, belief, rng, 50, 5);
  const auto result = backend.run(request);
  for (ActionId a = 0; a < 9; ++a) {
    for (const auto& child : result.children[static_cast<std::size_t>(a)]) {
      double upper = 0.0;
      double lower = 0.0;
      for (std::uint32_t i : child.positions) {
        const auto& out = result.outcome(a, i);
        EXPECT_EQ(out.observation, child.observation);
        if (out.terminal) continue;
        upper += nav.upper_bound_heuristic(out.next_state);
        lower += reference_rollout(nav, out.next_state, request.stream_seeds[i], request.depth + 1, 20, 0.95);
      }
      const auto n = static_cast<double>(child.positions.size());
      const bool at_cap = request.depth + 1 >= 20;
      const double expected_lower = lower / n;
      const double expected_upper = at_cap ? expected_lower : std::max(upper / n, expected_lower);
      EXPECT_NEAR(child.bounds.upper, expected_upper, 1e-12);
      EXPECT_NEAR(child.bounds.lower, expected_lower, 1e-12);
    }
  }
}

TEST(Rollout, TerminalStartIsZero) {
  const Tiger tiger;
  EXPECT_EQ(rollout(tiger, Tiger::State{true, true}, 1, 0, {0.95, 10}), 0.0);
}

TEST(Rollout, SingleStepPlusTail) {
  const Tiger tiger;
  const double h = tiger.lower_bound_heuristic({true, false});
  EXPECT_NEAR(rollout(tiger, Tiger::State{true, false}, 1, 0, {0.95, 1}), -1.0 + 0.95 * h, 1e-12);
}

TEST(Rollout, ListeningMatchesGeometricSum) {
  const Tiger tiger;
  const double g = 0.95;
  // Ten listening steps plus the listen-forever tail.
  const double steps = -(1.0 - std::pow(g, 10)) / (1.0 - g);
  const double tail = std::pow(g, 10) * (-1.0 / (1.0 - g));
  EXPECT_NEAR(rollout(tiger, Tiger::State{false, false}, 9, 0, {g, 10}), steps + tail, 1e-12);
  EXPECT_NEAR(rollout(tiger, Tiger::State{false, false}, 9, 4, {g, 10}),
              -(1.0 - std::pow(g, 6)) / (1.0 - g) + std::pow(g, 6) * (-1.0 / (1.0 - g)), 1e-12);
  EXPECT_THROW(rollout(tiger, Tiger::State{}, 9, 11, {g, 10}), ContractViolation);
}

template <Model M>
void expect_backends_agree(const M& model, std::uint64_t seed, int requests, std::size_t size) {
  const RolloutSettings settings{model.spec().discount, model.spec().max_rollout_depth};
  SerialBackend<M> serial(model, settings);
  ParallelBackend<M> parallel(model, settings, 3);
  std::mt19937_64 rng(seed);
  const auto belief = model.initial_belief(100, seed);
  for (int k = 0; k < requests; ++k) {
    const auto request = helpers::random_request(model, belief, rng, 1 + rng() % size, settings.max_depth);
    const auto expected = serial.run(request);
    const auto got = parallel.submit(request).get();
    ASSERT_TRUE(identical(expected, got)) << "request " << k;
    ASSERT_TRUE(identical(expected, expand_and_initialize(model, request, settings))) << "request " << k;
  }
}

TEST(BackendEquivalence, Navigation) { expect_backends_agree(Navigation{}, 1, 200, 64); }
TEST(BackendEquivalence, Mars) { expect_backends_agree(Mars(11, 11), 2, 60, 16); }
TEST(BackendEquivalence, Driving) { expect_backends_agree(Driving(6), 3, 100, 32); }
TEST(BackendEquivalence, Tiger) { expect_backends_agree(Tiger{}, 4, 200, 64); }

TEST(BackendEquivalence, WithinStepSplitOnOrOff) {
  const Driving model(20);
  const RolloutSettings settings{0.95, 60};
  ParallelBackend<Driving> split(model, settings, 3, true);
  ParallelBackend<Driving> whole(model, settings, 3, false);
  std::mt19937_64 rng(9);
  const auto belief = model.initial_belief(50, 9);
  for (int k = 0; k < 30; ++k) {
    const auto request = helpers::random_request(model, belief, rng, 20, 60);
    ASSERT_TRUE(identical(split.submit(request).get(), whole.submit(request).get()));
  }
}

TEST(BackendEquivalence, ConcurrentProducers) {
  const Navigation nav;
  const RolloutSettings settings{0.95, 60};
  SerialBackend<Navigation> serial(nav, settings);
  ParallelBackend<Navigation> parallel(nav, settings, 3);
  std::mt19937_64 rng(10);
  const auto belief = nav.initial_belief(200, 10);
  std::vector<ExpansionRequest<Navigation>> requests;
  for (int k = 0; k < 8; ++k) requests.push_back(helpers::random_request(nav, belief, rng, 40, 60));
  std::vector<std::future<ExpansionResult<Navigation>>> futures(8);
  std::vector<std::thread> producers;
  for (std::size_t k = 0; k < 8; ++k)
    producers.emplace_back([&, k] { futures[k] = parallel.submit(requests[k]); });
  for (auto& t : producers) t.join();
  for (std::size_t k = 0; k < 8; ++k) EXPECT_TRUE(identical(futures[k].get(), serial.run(requests[k])));
  EXPECT_EQ(parallel.counters().requests, 8);
}

TEST(Backend, RejectsWorkAfterShutdown) {
  const Tiger tiger;
  auto backend = make_backend<Tiger>("parallel", tiger, {0.95, 20}, 2);
  backend->shutdown();
  EXPECT_FALSE(backend->running());
  EXPECT_THROW(backend->submit(root_request<Tiger>({{true, false}}, 1)), BackendShutdownError);
}

TEST(Backend, UnknownNameAndInvalidSettings) {
  const Tiger tiger;
  EXPECT_THROW(make_backend<Tiger>("gpu", tiger, {0.95, 20}), ConfigError);
  EXPECT_THROW(SerialBackend<Tiger>(tiger, {0.95, 0}), ConfigError);
  EXPECT_EQ(make_backend<Tiger>("serial", tiger, {0.95, 20})->name(), "serial");
}

/// Tiger with an empty action set.
struct NoActions : Tiger {
  ModelSpec spec() const { return {0, 0.95, 20, 1}; }
};

TEST(Backend, EmptyActionSetIsRejected) {
  const NoActions model;
  EXPECT_THROW(SerialBackend<NoActions>(model, {0.95, 20}), ContractViolation);
}

TEST(Backend, MalformedRequestsFailThroughTheFuture) {
  const Tiger tiger;
  SerialBackend<Tiger> backend(tiger, {0.95, 20});
  ExpansionRequest<Tiger> empty;
  EXPECT_THROW(backend.submit(empty).get(), ContractViolation);
  auto mismatched = root_request<Tiger>({{true, false}}, 1);
  mismatched.stream_seeds.push_back(3);
  EXPECT_THROW(backend.submit(mismatched).get(), ContractViolation);
  auto no_action = root_request<Tiger>({{true, false}}, 1);
  no_action.depth = 2;
  EXPECT_THROW(backend.submit(no_action).get(), ContractViolation);
}

TEST(Backend, ParallelThroughputDoublesOnFourThreads) {
  const unsigned hw = std::thread::hardware_concurrency();
  if (hw < 4) GTEST_SKIP() << "needs at least 4 hardware threads, found " << hw;
  const Navigation nav;
  const RolloutSettings settings{0.95, 60};
  SerialBackend<Navigation> serial(nav, settings);
  ParallelBackend<Navigation> parallel(nav, settings, hw);
  std::mt19937_64 rng(12);
  const auto belief = nav.initial_belief(500, 12);
  std::vector<ExpansionRequest<Navigation>> requests;
  for (int k = 0; k < 20; ++k) requests.push_back(helpers::random_request(nav, belief, rng, 500, 10));
  auto time = [&](auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    for (const auto& r : requests) fn(r);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  const double serial_s = time([&](const auto& r) { serial.run(r); });
  const double parallel_s = time([&](const auto& r) { parallel.submit(r).get(); });
  EXPECT_GE(serial_s / parallel_s, 2.0);
}

}  // namespace
