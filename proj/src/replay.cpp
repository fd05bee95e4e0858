#include "lifelong/replay.hpp"

#include "lifelong/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace lifelong {

std::size_t replay_sample_size(double rb_size, std::size_t group_size) {
  if (rb_size < 0.0 || rb_size > 100.0) throw std::invalid_argument("RBSize must lie in [0, 100]");
  return static_cast<std::size_t>(std::llround(rb_size / 100.0 * static_cast<double>(group_size)));
}

Points sample_balanced(std::span<const DataPoint> pool, double rb_size, std::size_t group_size,
                       std::uint64_t seed, std::size_t group_index) {
  const std::size_t k = replay_sample_size(rb_size, group_size);
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < pool.size(); ++i) (pool[i].label ? pos : neg).push_back(i);

  const std::size_t big = (k + 1) / 2;
  const std::size_t small = k / 2;
  std::size_t share_pos = group_index % 2 == 1 ? big : small;
  std::size_t share_neg = k - share_pos;
  if (pos.size() < share_pos || neg.size() < share_neg) {
    const std::size_t cap = pos.size() < share_pos ? pos.size() : neg.size();
    share_pos = std::min(share_pos, cap);
    share_neg = std::min(share_neg, cap);
  }

  std::mt19937_64 rng(derive_seed(seed, {group_index, 0x5EED}));
  auto draw = [&](std::vector<std::size_t>& idx, std::size_t count) {
    // partial Fisher-Yates
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> dist(i, idx.size() - 1);
      std::swap(idx[i], idx[dist(rng)]);
    }
    idx.resize(count);
  };
  draw(pos, share_pos);
  draw(neg, share_neg);
  std::vector<std::size_t> chosen = pos;
  chosen.insert(chosen.end(), neg.begin(), neg.end());
  std::sort(chosen.begin(), chosen.end());

  Points out;
  out.reserve(chosen.size());
  for (auto i : chosen) out.push_back(pool[i]);
  return out;
}

ReplayBuffer::ReplayBuffer(std::size_t window) : window_(window) {
  if (window < 1) throw std::invalid_argument("RBWin must be >= 1");
}

void ReplayBuffer::push(Points sample, std::size_t origin_group) {
  if (origin_group < last_t_) {
    throw std::invalid_argument("replay buffer: origin group " + std::to_string(origin_group) +
                                " precedes current step " + std::to_string(last_t_));
  }
  if (!entries_.empty() && origin_group < entries_.back().origin_group) {
    throw std::invalid_argument("replay buffer: origin groups must be pushed in order");
  }
  for (auto& p : sample) entries_.push_back({std::move(p), origin_group});
}

Points ReplayBuffer::advance(std::size_t t) {
  if (t < last_t_) {
    throw std::invalid_argument("replay buffer: step " + std::to_string(t) + " after step " +
                                std::to_string(last_t_));
  }
  if (!entries_.empty() && entries_.back().origin_group >= t) {
    throw std::invalid_argument("replay buffer: holds samples from group >= step " + std::to_string(t));
  }
  last_t_ = t;
  while (!entries_.empty() && entries_.front().origin_group + window_ < t) entries_.pop_front();
  Points out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.point);
  return out;
}

Points ReplayBuffer::advance(Points new_sample, std::size_t t) {
  if (t < 1) throw std::invalid_argument("replay buffer: step must be >= 1");
  push(std::move(new_sample), t - 1);
  return advance(t);
}

}  // namespace lifelong
