#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <vector>

namespace streammark {

// Bounded multi-producer/single-consumer queue. Push blocks when full
// (backpressure); nothing is ever dropped. The consumer pops in batches to
// keep wakeups off the per-message path. High-water mark is tracked on push
// so saturation is observable after the run.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(size_t capacity) : capacity_(capacity ? capacity : 1) {}

  void push(T&& item) {
    std::unique_lock<std::mutex> lock(mutex_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    if (closed_) return;  // teardown: discard
    items_.push_back(std::move(item));
    size_t sz = items_.size();
    if (sz > high_water_) high_water_ = sz;
    depth_.store(sz, std::memory_order_relaxed);
    if (sz == 1) not_empty_.notify_one();
  }

  bool try_push(T&& item) {
    std::unique_lock<std::mutex> lock(mutex_);
    if (items_.size() >= capacity_ || closed_) return false;
    items_.push_back(std::move(item));
    size_t sz = items_.size();
    if (sz > high_water_) high_water_ = sz;
    depth_.store(sz, std::memory_order_relaxed);
    if (sz == 1) not_empty_.notify_one();
    return true;
  }

  // Moves all items in, blocking for space as needed; one lock per chunk
  // instead of one per item. `items` is left empty.
  void push_many(std::vector<T>& items) {
    size_t next = 0;
    std::unique_lock<std::mutex> lock(mutex_);
    while (next < items.size()) {
      not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
      if (closed_) break;  // teardown: discard the rest
      const bool was_empty = items_.empty();
      while (next < items.size() && items_.size() < capacity_)
        items_.push_back(std::move(items[next++]));
      size_t sz = items_.size();
      if (sz > high_water_) high_water_ = sz;
      depth_.store(sz, std::memory_order_relaxed);
      if (was_empty) not_empty_.notify_one();
    }
    items.clear();
  }

  // Blocks until at least one item is available (or the queue is closed and
  // empty). Moves up to `max` items into `out`; returns the count.
  size_t pop_batch(std::vector<T>& out, size_t max) {
    std::unique_lock<std::mutex> lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    const bool was_full = items_.size() >= capacity_;
    size_t n = std::min(max, items_.size());
    for (size_t i = 0; i < n; ++i) {
      out.push_back(std::move(items_.front()));
      items_.pop_front();
    }
    depth_.store(items_.size(), std::memory_order_relaxed);
    if (n > 0 && was_full) not_full_.notify_all();
    return n;
  }

  // Unblocks all waiters; pending pushes are discarded. Used only on abort
  // teardown (peak probes), never during measurement.
  void close() {
    std::lock_guard<std::mutex> lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  size_t depth() const { return depth_.load(std::memory_order_relaxed); }

  size_t high_water() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return high_water_;
  }

  size_t capacity() const { return capacity_; }

 private:
  const size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<T> items_;
  size_t high_water_ = 0;
  std::atomic<size_t> depth_{0};
  bool closed_ = false;
};

}  // namespace streammark
