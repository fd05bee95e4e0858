#pragma once
// Class-balanced replay buffer with FIFO eviction by origin-group window.

#include "lifelong/stream.hpp"

#include <cstdint>
#include <deque>
#include <span>

namespace lifelong {

/// Target sample size round(rb_size / 100 * group_size).
std::size_t replay_sample_size(double rb_size, std::size_t group_size);

/// Draws a class-balanced sample from one group's training pool. The odd slot of an
/// odd target goes to the positive class for odd `group_index`, negative otherwise.
/// When a class cannot fill its share, both classes are capped at its count.
Points sample_balanced(std::span<const DataPoint> pool, double rb_size, std::size_t group_size,
                       std::uint64_t seed, std::size_t group_index);

class ReplayBuffer {
 public:
  struct Entry {
    DataPoint point;
    std::size_t origin_group = 0;
  };

  explicit ReplayBuffer(std::size_t window);

  /// Appends a sample tagged with its origin group.
  void push(Points sample, std::size_t origin_group);

  /// Moves the buffer to step `t`: evicts entries older than t - window and returns
  /// the remaining points (origins in [t - window, t)). `t` must not decrease and
  /// must exceed every stored origin.
  Points advance(std::size_t t);

  /// push(new_sample, t - 1) followed by advance(t).
  Points advance(Points new_sample, std::size_t t);

  const std::deque<Entry>& entries() const { return entries_; }
  std::size_t window() const { return window_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::size_t window_;
  std::size_t last_t_ = 0;
  std::deque<Entry> entries_;
};

}  // namespace lifelong
