#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dedisp {

/// Persistent worker pool for data-parallel index loops. The calling thread
/// participates in every loop, so a pool of size one runs inline with no
/// dispatch overhead. Tasks must write to disjoint state.
class ThreadPool {
 public:
  /// workers = 0 picks std::thread::hardware_concurrency().
  explicit ThreadPool(unsigned workers = 0);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  unsigned worker_count() const noexcept { return workers_; }

  /// Runs task(i) for every i in [0, count), then returns. Indices are
  /// claimed dynamically in chunks; the assignment is not deterministic, so
  /// correctness must not depend on which thread runs which index.
  void for_each_index(std::size_t count, const std::function<void(std::size_t)>& task);

 private:
  struct Job;
  void worker_loop();

  unsigned workers_ = 1;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  Job* job_ = nullptr;
  bool stop_ = false;
};

}  // namespace dedisp
