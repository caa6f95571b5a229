#include "dedisp/thread_pool.hpp"

#include <algorithm>
#include <atomic>
#include <exception>

namespace dedisp {

struct ThreadPool::Job {
  std::size_t count = 0;
  const std::function<void(std::size_t)>* task = nullptr;
  std::atomic<std::size_t> next{0};
  unsigned active = 0;
  std::exception_ptr error;

  void run() {
    while (true) {
      const std::size_t index = next.fetch_add(1, std::memory_order_relaxed);
      if (index >= count) return;
      (*task)(index);
    }
  }
};

ThreadPool::ThreadPool(unsigned workers) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers_ = workers;
  threads_.reserve(workers - 1);
  for (unsigned i = 1; i < workers; ++i) {
    threads_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (std::thread& thread : threads_) thread.join();
}

void ThreadPool::worker_loop() {
  while (true) {
    Job* job = nullptr;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [this] { return stop_ || job_ != nullptr; });
      if (stop_) return;
      job = job_;
      ++job->active;
    }
    try {
      job->run();
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!job->error) job->error = std::current_exception();
    }
    {
      std::lock_guard lock(mutex_);
      --job->active;
      if (job_ == job && job->next.load(std::memory_order_relaxed) >= job->count) {
        job_ = nullptr;
      }
      if (job->active == 0) done_.notify_all();
    }
  }
}

void ThreadPool::for_each_index(std::size_t count,
                                const std::function<void(std::size_t)>& task) {
  if (count == 0) return;
  if (threads_.empty() || count == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }

  Job job;
  job.count = count;
  job.task = &task;
  {
    std::lock_guard lock(mutex_);
    job_ = &job;
  }
  wake_.notify_all();

  std::exception_ptr caller_error;
  try {
    job.run();
  } catch (...) {
    caller_error = std::current_exception();
  }

  std::unique_lock lock(mutex_);
  if (job_ == &job) job_ = nullptr;
  done_.wait(lock, [&job] { return job.active == 0; });
  if (caller_error) std::rethrow_exception(caller_error);
  if (job.error) std::rethrow_exception(job.error);
}

}  // namespace dedisp
