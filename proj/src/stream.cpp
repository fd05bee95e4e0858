#include "lifelong/stream.hpp"

#include "lifelong/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace lifelong {

namespace {

std::string group_key(const DataPoint& p) { return p.cohort ? "c:" + *p.cohort : "o:" + std::to_string(p.order); }

}  // namespace

std::vector<TimeGroup> assign_groups(Points points, std::size_t group_size) {
  if (points.empty()) throw std::invalid_argument("assign_groups: empty stream");
  if (group_size < 1) throw std::invalid_argument("assign_groups: group size must be >= 1");
  const auto dim = points.front().features.size();
  for (const auto& p : points) {
    if (p.features.size() != dim) {
      throw std::invalid_argument("assign_groups: inconsistent feature dimension at point " + p.id);
    }
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const DataPoint& a, const DataPoint& b) { return a.order < b.order; });

  std::vector<TimeGroup> groups;
  std::unordered_set<std::string> open_keys;
  std::unordered_set<std::string> closed_keys;
  TimeGroup current{1, {}};
  for (auto& p : points) {
    auto key = group_key(p);
    if (closed_keys.count(key)) {
      throw std::invalid_argument("assign_groups: cohort of point " + p.id + " spans non-contiguous positions");
    }
    if (open_keys.size() >= group_size && !open_keys.count(key)) {
      closed_keys.insert(open_keys.begin(), open_keys.end());
      open_keys.clear();
      groups.push_back(std::move(current));
      current = TimeGroup{groups.size() + 1, {}};
    }
    open_keys.insert(std::move(key));
    current.points.push_back(std::move(p));
  }
  groups.push_back(std::move(current));
  return groups;
}

void PoolLedger::partition(const TimeGroup& group, double valid_fraction, std::uint64_t seed) {
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) {
    throw std::invalid_argument("partition: valid fraction must lie in (0, 1)");
  }
  if (groups_.count(group.index)) {
    throw std::invalid_argument("partition: group " + std::to_string(group.index) + " already ledgered");
  }
  for (const auto& p : group.points) {
    if (pools_.count(p.id)) throw std::invalid_argument("partition: point " + p.id + " already ledgered");
  }
  std::mt19937_64 rng(derive_seed(seed, {group.index}));
  for (int cls : {0, 1}) {
    std::vector<const DataPoint*> members;
    for (const auto& p : group.points) {
      if ((p.label != 0) == (cls == 1)) members.push_back(&p);
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_valid =
        static_cast<std::size_t>(std::ceil(valid_fraction * static_cast<double>(members.size()) - 1e-12));
    for (std::size_t i = 0; i < members.size(); ++i) {
      pools_.emplace(members[i]->id, i < n_valid ? Pool::valid : Pool::train);
    }
  }
  groups_.insert(group.index);
}

Pool PoolLedger::pool_of(const std::string& id) const {
  auto it = pools_.find(id);
  if (it == pools_.end()) throw std::out_of_range("no ledger entry for point " + id);
  return it->second;
}

Points pool_points(const TimeGroup& group, const PoolLedger& ledger, Pool pool) {
  if (!ledger.has_group(group.index)) {
    throw std::invalid_argument("group " + std::to_string(group.index) + " has no ledger entries");
  }
  Points out;
  for (const auto& p : group.points) {
    if (ledger.pool_of(p.id) == pool) out.push_back(p);
  }
  return out;
}

namespace {

void append(Points& dst, Points src) {
  dst.insert(dst.end(), std::make_move_iterator(src.begin()), std::make_move_iterator(src.end()));
}

}  // namespace

Points validation_window(std::span<const TimeGroup> groups, const PoolLedger& ledger, std::size_t t,
                         std::size_t v_win) {
  if (v_win < 1 || v_win > t || t > groups.size()) {
    throw std::invalid_argument("validation_window: window [t-VWin+1, t] outside the timeline");
  }
  Points valid;
  for (std::size_t i = t - v_win + 1; i <= t; ++i) append(valid, pool_points(groups[i - 1], ledger, Pool::valid));
  return valid;
}

StepSets build_init_sets(std::span<const TimeGroup> groups, const PoolLedger& ledger, std::size_t it_win,
                         std::size_t v_win) {
  if (it_win < 1 || v_win < 1) throw std::invalid_argument("build_init_sets: windows must be >= 1");
  if (v_win > it_win) throw std::invalid_argument("build_init_sets: VWin exceeds ITWin");
  if (groups.size() < it_win + 1) {
    throw std::invalid_argument("build_init_sets: need " + std::to_string(it_win + 1) + " groups, have " +
                                std::to_string(groups.size()));
  }
  StepSets sets;
  sets.step = it_win;
  for (std::size_t i = 1; i <= it_win; ++i) append(sets.train, pool_points(groups[i - 1], ledger, Pool::train));
  sets.valid = validation_window(groups, ledger, it_win, v_win);
  sets.test = groups[it_win].points;
  return sets;
}

StepSets build_update_sets(std::span<const TimeGroup> groups, const PoolLedger& ledger, std::size_t t,
                           std::size_t v_win, std::span<const DataPoint> buffer) {
  if (t < 1 || t + 1 > groups.size()) {
    throw std::invalid_argument("build_update_sets: groups " + std::to_string(t) + " and " +
                                std::to_string(t + 1) + " must exist");
  }
  if (v_win < 1 || v_win > t) throw std::invalid_argument("build_update_sets: VWin must lie in [1, t]");
  StepSets sets;
  sets.step = t;
  sets.train = pool_points(groups[t - 1], ledger, Pool::train);
  std::unordered_set<std::string> seen;
  for (const auto& p : sets.train) seen.insert(p.id);
  for (const auto& p : buffer) {
    if (seen.insert(p.id).second) sets.train.push_back(p);
  }
  sets.valid = validation_window(groups, ledger, t, v_win);
  sets.test = groups[t].points;
  return sets;
}

Timeline build_timeline(Points points, std::size_t group_size, double valid_fraction, std::uint64_t seed) {
  Timeline tl;
  tl.groups = assign_groups(std::move(points), group_size);
  for (const auto& g : tl.groups) tl.ledger.partition(g, valid_fraction, seed);
  return tl;
}

std::vector<CrossValSplit> crossval_splits(std::span<const DataPoint> points, std::size_t repeats,
                                           std::uint64_t seed) {
  constexpr std::size_t kFolds = 5;
  constexpr int kMaxRetries = 10;
  if (points.size() < 20 || !has_both_classes(points)) {
    throw std::invalid_argument("crossval_splits: need at least 20 points covering both classes");
  }
  std::vector<CrossValSplit> splits;
  for (std::size_t r = 0; r < repeats; ++r) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
      std::mt19937_64 rng(derive_seed(seed, {r, static_cast<std::uint64_t>(attempt)}));
      std::vector<std::size_t> pos;
      std::vector<std::size_t> neg;
      for (std::size_t i = 0; i < points.size(); ++i) (points[i].label ? pos : neg).push_back(i);
      std::shuffle(pos.begin(), pos.end(), rng);
      std::shuffle(neg.begin(), neg.end(), rng);
      // Deal positives then negatives round-robin: folds stay balanced in size and class mix.
      const std::size_t offset = rng() % kFolds;
      std::vector<std::vector<std::size_t>> folds(kFolds);
      std::size_t k = offset;
      for (auto i : pos) folds[k++ % kFolds].push_back(i);
      for (auto i : neg) folds[k++ % kFolds].push_back(i);

      ok = std::all_of(folds.begin(), folds.end(), [&](const auto& f) {
        const bool p = std::any_of(f.begin(), f.end(), [&](auto i) { return points[i].label != 0; });
        const bool n = std::any_of(f.begin(), f.end(), [&](auto i) { return points[i].label == 0; });
        return p && n;
      });
      if (!ok) continue;

      for (std::size_t f = 0; f < kFolds; ++f) {
        std::array<std::vector<std::size_t>, 2> sub;
        for (std::size_t j = 0; j < folds[f].size(); ++j) sub[j % 2].push_back(folds[f][j]);
        std::vector<std::size_t> rest;
        for (std::size_t g = 0; g < kFolds; ++g) {
          if (g != f) rest.insert(rest.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(rest.begin(), rest.end());
        for (int s = 0; s < 2; ++s) {
          CrossValSplit split{rest, sub[s], sub[1 - s]};
          std::sort(split.valid.begin(), split.valid.end());
          std::sort(split.test.begin(), split.test.end());
          splits.push_back(std::move(split));
        }
      }
    }
    if (!ok) throw std::invalid_argument("crossval_splits: a class is missing from some fold after retries");
  }
  return splits;
}

LabeledData<double> to_labeled(std::span<const DataPoint> points) {
  LabeledData<double> data;
  if (points.empty()) return data;
  const auto d = points.front().features.size();
  data.features.resize(static_cast<Eigen::Index>(points.size()), d);
  data.labels.resize(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].features.size() != d) throw std::invalid_argument("to_labeled: ragged feature vectors");
    data.features.row(static_cast<Eigen::Index>(i)) = points[i].features.transpose();
    data.labels(static_cast<Eigen::Index>(i)) = points[i].label ? 1.0 : 0.0;
  }
  return data;
}

bool has_both_classes(std::span<const DataPoint> points) {
  bool pos = false;
  bool neg = false;
  for (const auto& p : points) (p.label ? pos : neg) = true;
  return pos && neg;
}

}  // namespace lifelong
