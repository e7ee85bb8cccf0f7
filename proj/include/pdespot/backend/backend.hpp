#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <future>
#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "pdespot/backend/expansion.hpp"
#include "pdespot/backend/task_pool.hpp"

namespace pdespot {

struct BackendCounters {
  std::int64_t requests = 0;
  std::int64_t update_ns = 0;
  std::int64_t expand_ns = 0;
  std::int64_t rollout_ns = 0;
  std::int64_t reduce_ns = 0;
};

/// Thread-safe leaf-expansion service. Any number of tree workers may
/// submit concurrently; each result is delivered once through its future.
template <Model M>
class SimulationBackend {
 public:
  SimulationBackend(const M& model, RolloutSettings settings) : model_(model), settings_(settings) {
    model_.spec().validate();
    if (settings_.max_depth < 1) throw ConfigError("max depth must be >= 1");
  }
  virtual ~SimulationBackend() = default;

  virtual std::future<ExpansionResult<M>> submit(ExpansionRequest<M> request) = 0;
  virtual std::string_view name() const noexcept = 0;

  void shutdown() noexcept { running_.store(false, std::memory_order_release); }
  bool running() const noexcept { return running_.load(std::memory_order_acquire); }

  const M& model() const noexcept { return model_; }
  const RolloutSettings& settings() const noexcept { return settings_; }

  BackendCounters counters() const noexcept {
    return {requests_.load(), update_ns_.load(), expand_ns_.load(), rollout_ns_.load(), reduce_ns_.load()};
  }

 protected:
  void ensure_running() const {
    if (!running()) throw BackendShutdownError();
  }

  void account(const ExpansionTiming& t) noexcept {
    requests_.fetch_add(1, std::memory_order_relaxed);
    update_ns_.fetch_add(t.update_ns, std::memory_order_relaxed);
    expand_ns_.fetch_add(t.expand_ns, std::memory_order_relaxed);
    rollout_ns_.fetch_add(t.rollout_ns, std::memory_order_relaxed);
    reduce_ns_.fetch_add(t.reduce_ns, std::memory_order_relaxed);
  }

  const M& model_;
  RolloutSettings settings_;

 private:
  std::atomic<bool> running_{true};
  std::atomic<std::int64_t> requests_{0};
  std::atomic<std::int64_t> update_ns_{0};
  std::atomic<std::int64_t> expand_ns_{0};
  std::atomic<std::int64_t> rollout_ns_{0};
  std::atomic<std::int64_t> reduce_ns_{0};
};

namespace detail {
class PhaseClock {
 public:
  std::int64_t lap() {
    const auto now = std::chrono::steady_clock::now();
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(now - last_).count();
    last_ = now;
    return ns;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};
}  // namespace detail

/// Reference backend: executes each request inline on the submitting thread.
template <Model M>
class SerialBackend final : public SimulationBackend<M> {
 public:
  using SimulationBackend<M>::SimulationBackend;

  std::future<ExpansionResult<M>> submit(ExpansionRequest<M> request) override {
    this->ensure_running();
    std::promise<ExpansionResult<M>> promise;
    try {
      promise.set_value(run(request));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
    return promise.get_future();
  }

  std::string_view name() const noexcept override { return "serial"; }

  ExpansionResult<M> run(const ExpansionRequest<M>& request) {
    request.validate(this->model_.spec());
    auto result = ExpansionKernel<M>::allocate(this->model_, request);
    const ExpansionKernel<M> kernel{this->model_, request, this->settings_, result};
    const std::size_t items = result.outcomes.size();
    detail::PhaseClock clock;
    for (std::size_t i = 0; i < request.size(); ++i) kernel.update(i);
    result.timing.update_ns = clock.lap();
    for (std::size_t k = 0; k < items; ++k) kernel.expand(k);
    result.timing.expand_ns = clock.lap();
    for (std::size_t k = 0; k < items; ++k) kernel.bound(k);
    result.timing.rollout_ns = clock.lap();
    kernel.reduce();
    result.timing.reduce_ns = clock.lap();
    this->account(result.timing);
    return result;
  }
};

/// Data-parallel backend. Each request becomes one pool job (node level);
/// inside it the (action, scenario) pairs form a flat parallel loop, and
/// factored models additionally split each step into (pair, element)
/// work items before composing them in element order.
template <Model M>
class ParallelBackend final : public SimulationBackend<M> {
 public:
  ParallelBackend(const M& model, RolloutSettings settings, std::size_t threads = 0, bool within_step = true)
      : SimulationBackend<M>(model, settings),
        within_step_(within_step),
        pool_(threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads) {}

  std::future<ExpansionResult<M>> submit(ExpansionRequest<M> request) override {
    this->ensure_running();
    auto task = std::make_shared<std::packaged_task<ExpansionResult<M>()>>(
        [this, req = std::move(request)] { return run(req); });
    auto future = task->get_future();
    pool_.post([task] { (*task)(); });
    return future;
  }

  std::string_view name() const noexcept override { return "parallel"; }
  std::size_t thread_count() const noexcept { return pool_.thread_count(); }

  ExpansionResult<M> run(const ExpansionRequest<M>& request) {
    request.validate(this->model_.spec());
    auto result = ExpansionKernel<M>::allocate(this->model_, request);
    const ExpansionKernel<M> kernel{this->model_, request, this->settings_, result};
    const std::size_t n = request.size();
    const std::size_t items = result.outcomes.size();
    detail::PhaseClock clock;

    pool_.parallel_for(n, grain(n), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) kernel.update(i);
    });
    result.timing.update_ns = clock.lap();

    if constexpr (FactoredModel<M>) {
      if (within_step_ && this->model_.spec().factored_element_count > 1) {
        expand_factored(kernel, result);
      } else {
        expand_pairs(kernel, items);
      }
    } else {
      expand_pairs(kernel, items);
    }
    result.timing.expand_ns = clock.lap();

    // Rollouts dominate; use finer chunks so uneven episode lengths balance.
    pool_.parallel_for(items, std::max<std::size_t>(1, grain(items) / 4), [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) kernel.bound(k);
    });
    result.timing.rollout_ns = clock.lap();

    kernel.reduce();
    result.timing.reduce_ns = clock.lap();
    this->account(result.timing);
    return result;
  }

 private:
  std::size_t grain(std::size_t count) const noexcept {
    return std::max<std::size_t>(1, count / (pool_.thread_count() * 4 + 1));
  }

  void expand_pairs(const ExpansionKernel<M>& kernel, std::size_t items) {
    pool_.parallel_for(items, grain(items), [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) kernel.expand(k);
    });
  }

  void expand_factored(const ExpansionKernel<M>& kernel, ExpansionResult<M>& result) {
    const auto& model = this->model_;
    const std::size_t items = result.outcomes.size();
    const auto elements = static_cast<std::size_t>(model.spec().factored_element_count);
    std::vector<typename M::FactorPart> parts(items * elements);

    pool_.parallel_for(items * elements, grain(items * elements), [&](std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t item = k / elements;
        const auto element = static_cast<std::int32_t>(k % elements);
        const auto [a, i] = kernel.split(item);
        const auto& state = result.node_states[i];
        if (model.is_terminal(state)) continue;
        parts[k] = model.step_factored(state, a, kernel.expansion_draws(i), element);
      }
    });
    pool_.parallel_for(items, grain(items), [&](std::size_t b, std::size_t e) {
      for (std::size_t item = b; item < e; ++item) {
        const auto [a, i] = kernel.split(item);
        const auto& state = result.node_states[i];
        if (model.is_terminal(state)) {
          kernel.store(item, {state, model.terminal_observation(), 0.0, true});
          continue;
        }
        std::span<const typename M::FactorPart> view(parts.data() + item * elements, elements);
        kernel.store(item, model.compose_factored(state, a, kernel.expansion_draws(i), view));
      }
    });
  }

  bool within_step_;
  TaskPool pool_;  // last: joined before the other members go away
};

/// Backend by name: "serial" or "parallel".
template <Model M>
std::unique_ptr<SimulationBackend<M>> make_backend(std::string_view name, const M& model, RolloutSettings settings,
                                                   std::size_t threads = 0) {
  if (name == "serial") return std::make_unique<SerialBackend<M>>(model, settings);
  if (name == "parallel") return std::make_unique<ParallelBackend<M>>(model, settings, threads);
  throw ConfigError("unknown backend '" + std::string(name) + "' (expected serial or parallel)");
}

}  // namespace pdespot
