#include "mmpar/backend.hpp"

#include <algorithm>

#include "mmpar/errors.hpp"

namespace mmpar {

namespace {
thread_local bool inside_pool_task = false;
}

ThreadPool::ThreadPool(std::size_t threads) {
  if (threads == 0) throw InputError("thread pool needs at least one thread");
  workers_.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) workers_.emplace_back([this] { worker_loop(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::drain() {
  std::unique_lock lock(mutex_);
  while (job_ != nullptr && next_task_ < job_tasks_) {
    const std::size_t k = next_task_++;
    const auto* job = job_;
    lock.unlock();
    try {
      inside_pool_task = true;
      (*job)(k);
      inside_pool_task = false;
    } catch (...) {
      inside_pool_task = false;
      lock.lock();
      if (!error_) error_ = std::current_exception();
      lock.unlock();
    }
    lock.lock();
    if (++finished_ == job_tasks_) done_.notify_all();
  }
}

void ThreadPool::worker_loop() {
  std::size_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) return;
      seen = generation_;
    }
    drain();
  }
}

void ThreadPool::run(std::size_t tasks, const std::function<void(std::size_t)>& task) {
  if (tasks == 0) return;
  if (inside_pool_task || workers_.empty() || tasks == 1) {
    for (std::size_t k = 0; k < tasks; ++k) task(k);
    return;
  }
  std::lock_guard run_lock(run_mutex_);
  {
    std::lock_guard lock(mutex_);
    job_ = &task;
    job_tasks_ = tasks;
    next_task_ = 0;
    finished_ = 0;
    error_ = nullptr;
    ++generation_;
  }
  wake_.notify_all();
  drain();
  std::exception_ptr error;
  {
    std::unique_lock lock(mutex_);
    done_.wait(lock, [&] { return finished_ == job_tasks_; });
    job_ = nullptr;
    error = error_;
  }
  if (error) std::rethrow_exception(error);
}

Backend Backend::serial() { return Backend{}; }

Backend Backend::parallel(std::size_t threads) {
  if (threads == 0) throw InputError("parallel backend needs at least one thread");
  Backend b;
  b.pool_ = std::make_shared<ThreadPool>(threads);
  return b;
}

std::string Backend::describe() const {
  return is_parallel() ? "parallel(" + std::to_string(threads()) + ")" : "serial";
}

void Backend::parallel_for(std::size_t n,
                           const std::function<void(std::size_t, std::size_t)>& body,
                           std::size_t min_chunk) const {
  if (n == 0) return;
  const std::size_t grain = std::max<std::size_t>(min_chunk, 1);
  const std::size_t chunks = pool_ ? std::min(pool_->size(), (n + grain - 1) / grain) : 1;
  if (chunks <= 1) {
    body(0, n);
    return;
  }
  const std::size_t base = n / chunks;
  const std::size_t extra = n % chunks;
  pool_->run(chunks, [&](std::size_t c) {
    const std::size_t begin = c * base + std::min(c, extra);
    const std::size_t end = begin + base + (c < extra ? 1 : 0);
    body(begin, end);
  });
}

}  // namespace mmpar
