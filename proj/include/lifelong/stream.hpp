#pragma once
// Chronological data model: time groups, persistent train/valid pools and the
// per-step training/validation/test set constructions.

#include "lifelong/fit.hpp"
#include "lifelong/mlp.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lifelong {

struct DataPoint {
  std::string id;
  std::uint64_t order = 0;              // commit sequence position
  std::optional<std::string> cohort;    // points sharing a cohort stay in one group
  std::optional<std::int64_t> timestamp;  // seconds since the Unix epoch
  int label = 0;                        // 1 = positive class
  VectorXd features;

  friend bool operator==(const DataPoint& a, const DataPoint& b) {
    return a.id == b.id && a.order == b.order && a.cohort == b.cohort && a.timestamp == b.timestamp &&
           a.label == b.label && a.features.size() == b.features.size() && a.features == b.features;
  }
};

using Points = std::vector<DataPoint>;

/// Groups are numbered from 1.
struct TimeGroup {
  std::size_t index = 0;
  Points points;
};

/// Greedy chronological grouping: a group closes once it holds at least `group_size`
/// distinct cohort keys (order keys for cohort-free points) and the next point opens
/// a new key. Throws when a cohort reappears after its group was closed.
std::vector<TimeGroup> assign_groups(Points points, std::size_t group_size);

enum class Pool { train, valid };

class PoolLedger {
 public:
  /// Stratified split of one group: per class, ceil(valid_fraction * n_class) points
  /// go to the validation pool. Rejects a group that was already ledgered.
  void partition(const TimeGroup& group, double valid_fraction, std::uint64_t seed);

  bool contains(const std::string& id) const { return pools_.count(id) != 0; }
  bool has_group(std::size_t index) const { return groups_.count(index) != 0; }
  Pool pool_of(const std::string& id) const;
  std::size_t size() const { return pools_.size(); }

 private:
  std::unordered_map<std::string, Pool> pools_;
  std::unordered_set<std::size_t> groups_;
};

Points pool_points(const TimeGroup& group, const PoolLedger& ledger, Pool pool);

/// Validation pools of groups t-v_win+1..t.
Points validation_window(std::span<const TimeGroup> groups, const PoolLedger& ledger, std::size_t t,
                         std::size_t v_win);

struct StepSets {
  std::size_t step = 0;
  Points train;
  Points valid;
  Points test;
};

/// train: train pools of groups 1..it_win; valid: valid pools of groups
/// it_win-v_win+1..it_win; test: all of group it_win+1.
StepSets build_init_sets(std::span<const TimeGroup> groups, const PoolLedger& ledger, std::size_t it_win,
                         std::size_t v_win);

/// train: train pool of group t plus `buffer` (deduplicated by id); valid: valid
/// pools of groups t-v_win+1..t; test: all of group t+1.
StepSets build_update_sets(std::span<const TimeGroup> groups, const PoolLedger& ledger, std::size_t t,
                           std::size_t v_win, std::span<const DataPoint> buffer);

/// Groups plus their pool ledger; every setup run over the same stream and seed
/// sees an identical timeline.
struct Timeline {
  std::vector<TimeGroup> groups;
  PoolLedger ledger;

  std::size_t size() const { return groups.size(); }
  const TimeGroup& group(std::size_t index) const { return groups.at(index - 1); }
};

Timeline build_timeline(Points points, std::size_t group_size, double valid_fraction, std::uint64_t seed);

struct CrossValSplit {
  std::vector<std::size_t> train;  // indices into the input points
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

/// Repeated stratified 5-fold x 2-sub-fold splitting: each sub-fold serves once as
/// validation and once as test, giving 10 splits (80/10/10) per repeat.
std::vector<CrossValSplit> crossval_splits(std::span<const DataPoint> points, std::size_t repeats,
                                           std::uint64_t seed);

LabeledData<double> to_labeled(std::span<const DataPoint> points);
bool has_both_classes(std::span<const DataPoint> points);

}  // namespace lifelong
