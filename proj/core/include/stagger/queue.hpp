#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>

namespace stagger {

/// Bounded FIFO with a drop-oldest overflow policy, safe for one producer
/// and one consumer. The same queue backs both pipeline modes: the
/// deterministic loop uses the non-blocking accessors, the threaded
/// stages use the waiting ones.
template <typename T>
class BoundedQueue {
  public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw std::invalid_argument("BoundedQueue: capacity must be >= 1");
    }

    void enqueue(T item) {
        {
            std::lock_guard lock(mu_);
            items_.push_back(std::move(item));
            enqueued_ += 1;
            if (items_.size() > capacity_) {
                items_.pop_front();
                dropped_ += 1;
            }
        }
        cv_.notify_one();
    }

    /// Oldest retained item, FIFO order.
    std::optional<T> dequeue_fifo() {
        std::lock_guard lock(mu_);
        return pop_front_locked();
    }

    /// Newest item; everything older is discarded and counted as dropped.
    std::optional<T> dequeue_latest() {
        std::lock_guard lock(mu_);
        if (items_.empty()) return std::nullopt;
        while (items_.size() > 1) {
            items_.pop_front();
            dropped_ += 1;
        }
        return pop_front_locked();
    }

    /// Blocks until an item arrives, the queue closes, or the timeout
    /// elapses. latest=true applies freshest-wins semantics.
    std::optional<T> wait_dequeue(bool latest, std::chrono::microseconds timeout) {
        std::unique_lock lock(mu_);
        cv_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) return std::nullopt;
        if (latest) {
            while (items_.size() > 1) {
                items_.pop_front();
                dropped_ += 1;
            }
        }
        return pop_front_locked();
    }

    void close() {
        {
            std::lock_guard lock(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    bool closed() const {
        std::lock_guard lock(mu_);
        return closed_;
    }

    bool empty() const {
        std::lock_guard lock(mu_);
        return items_.empty();
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return items_.size();
    }

    std::size_t capacity() const { return capacity_; }

    std::uint64_t enqueued() const {
        std::lock_guard lock(mu_);
        return enqueued_;
    }

    std::uint64_t dropped() const {
        std::lock_guard lock(mu_);
        return dropped_;
    }

  private:
    std::optional<T> pop_front_locked() {
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        return item;
    }

    std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<T> items_;
    bool closed_ = false;
    std::uint64_t enqueued_ = 0;
    std::uint64_t dropped_ = 0;
};

}  // namespace stagger
