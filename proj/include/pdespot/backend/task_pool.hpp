#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace pdespot {

/// Fixed thread pool with two kinds of work: standalone jobs and chunked
/// data-parallel loops. A thread calling `parallel_for` executes chunks of
/// its own loop while it waits, so loops may nest inside jobs.
class TaskPool {
 public:
  explicit TaskPool(std::size_t threads) {
    threads_.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) threads_.emplace_back([this] { run_worker(); });
  }

  TaskPool(const TaskPool&) = delete;
  TaskPool& operator=(const TaskPool&) = delete;

  ~TaskPool() {
    {
      std::lock_guard lock(mutex_);
      stopping_ = true;
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
  }

  std::size_t thread_count() const noexcept { return threads_.size(); }

  void post(std::function<void()> job) {
    {
      std::lock_guard lock(mutex_);
      jobs_.push_back(std::move(job));
    }
    wake_.notify_one();
  }

  /// Calls body(begin, end) over [0, count) in chunks of at most `grain`.
  /// Rethrows the first exception raised by any chunk.
  template <class Body>
  void parallel_for(std::size_t count, std::size_t grain, Body&& body) {
    if (count == 0) return;
    grain = std::max<std::size_t>(grain, 1);
    const std::size_t chunks = (count + grain - 1) / grain;
    if (threads_.empty() || chunks == 1) {
      body(std::size_t{0}, count);
      return;
    }

    auto batch = std::make_shared<Batch>();
    batch->chunks = chunks;
    batch->run = [&body, count, grain](std::size_t chunk) {
      const std::size_t begin = chunk * grain;
      body(begin, std::min(count, begin + grain));
    };
    {
      std::lock_guard lock(mutex_);
      batches_.push_back(batch);
    }
    wake_.notify_all();

    for (;;) {
      const std::size_t chunk = batch->next.fetch_add(1, std::memory_order_relaxed);
      if (chunk >= chunks) break;
      batch->execute(chunk);
    }
    {
      std::lock_guard lock(mutex_);
      std::erase(batches_, batch);
    }
    std::unique_lock done_lock(batch->mutex);
    batch->done.wait(done_lock, [&] { return batch->finished == batch->chunks; });
    if (batch->error) std::rethrow_exception(batch->error);
  }

 private:
  struct Batch {
    std::function<void(std::size_t)> run;
    std::size_t chunks = 0;
    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    std::condition_variable done;
    std::size_t finished = 0;
    std::exception_ptr error;

    void execute(std::size_t chunk) {
      std::exception_ptr failure;
      try {
        run(chunk);
      } catch (...) {
        failure = std::current_exception();
      }
      std::lock_guard lock(mutex);
      if (failure && !error) error = failure;
      if (++finished == chunks) done.notify_all();
    }
  };

  void run_worker() {
    std::unique_lock lock(mutex_);
    for (;;) {
      wake_.wait(lock, [&] { return stopping_ || !batches_.empty() || !jobs_.empty(); });
      if (!batches_.empty()) {
        auto batch = batches_.front();
        const std::size_t chunk = batch->next.fetch_add(1, std::memory_order_relaxed);
        if (chunk >= batch->chunks) {
          if (!batches_.empty() && batches_.front() == batch) batches_.pop_front();
          continue;
        }
        lock.unlock();
        batch->execute(chunk);
        lock.lock();
        continue;
      }
      if (!jobs_.empty()) {
        auto job = std::move(jobs_.front());
        jobs_.pop_front();
        lock.unlock();
        job();
        lock.lock();
        continue;
      }
      if (stopping_) return;
    }
  }

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<std::shared_ptr<Batch>> batches_;
  std::deque<std::function<void()>> jobs_;
  bool stopping_ = false;
};

}  // namespace pdespot
