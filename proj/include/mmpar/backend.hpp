#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mmpar {

// Fixed set of worker threads executing indexed tasks. The calling thread
// takes part in each run, so a pool of size n starts n - 1 threads.
// A run issued from inside a task executes inline (no nested fan-out).
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t threads);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t size() const { return workers_.size() + 1; }

  // Calls task(k) for k in [0, tasks) and blocks until all have finished.
  // The first exception thrown by a task is rethrown here.
  void run(std::size_t tasks, const std::function<void(std::size_t)>& task);

 private:
  void worker_loop();
  void drain();

  std::vector<std::thread> workers_;
  std::mutex run_mutex_;  // one run at a time

  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t job_tasks_ = 0;
  std::size_t next_task_ = 0;
  std::size_t finished_ = 0;
  std::size_t generation_ = 0;
  std::exception_ptr error_;
  bool stopping_ = false;
};

// Execution policy for the kernels: serial, or parallel over a shared pool.
// Copies share the same pool.
class Backend {
 public:
  static Backend serial();
  static Backend parallel(std::size_t threads);

  bool is_parallel() const { return pool_ != nullptr; }
  std::size_t threads() const { return pool_ ? pool_->size() : 1; }
  std::string describe() const;

  // Splits [0, n) into contiguous chunks and calls body(begin, end) on each.
  // Chunks never overlap; the union is exactly [0, n).
  void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                    std::size_t min_chunk = 1) const;

 private:
  std::shared_ptr<ThreadPool> pool_;
};

}  // namespace mmpar
