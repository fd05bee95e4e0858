#include "lifelong/replay.hpp"
#include "lifelong/stream.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace lifelong;

namespace {

DataPoint point(std::size_t i, int label, std::optional<std::string> cohort = std::nullopt) {
  DataPoint p;
  p.id = "p" + std::to_string(i);
  p.order = i;
  p.cohort = std::move(cohort);
  p.label = label;
  p.features = VectorXd::Constant(2, static_cast<double>(i));
  return p;
}

// Every third point positive.
Points stream_of(std::size_t n) {
  Points pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back(point(i, i % 3 == 0));
  return pts;
}

std::set<std::string> ids(const Points& pts) {
  std::set<std::string> s;
  for (const auto& p : pts) s.insert(p.id);
  return s;
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& x : a) {
    if (b.count(x)) return false;
  }
  return true;
}

}  // namespace

TEST(Groups, EqualSplitWithoutCohorts) {
  const auto g = assign_groups(stream_of(100), 50);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].index, 1u);
  EXPECT_EQ(g[1].index, 2u);
  EXPECT_EQ(g[0].points.size(), 50u);
  EXPECT_EQ(g[1].points.size(), 50u);
}

TEST(Groups, CohortsStayTogether) {
  Points pts;
  const char* keys = "AABBCC";
  for (std::size_t i = 0; i < 6; ++i) pts.push_back(point(i, i % 2, std::string(1, keys[i])));
  const auto g = assign_groups(pts, 1);
  ASSERT_EQ(g.size(), 3u);
  for (const auto& grp : g) {
    ASSERT_EQ(grp.points.size(), 2u);
    EXPECT_EQ(grp.points[0].cohort, grp.points[1].cohort);
  }
}

TEST(Groups, ConcatenationReproducesInput) {
  const auto pts = stream_of(10000);
  const auto g = assign_groups(pts, 500);
  ASSERT_EQ(g.size(), 20u);
  Points joined;
  for (const auto& grp : g) joined.insert(joined.end(), grp.points.begin(), grp.points.end());
  EXPECT_EQ(joined, pts);
}

TEST(Groups, SortsByOrderAndRejectsBadInput) {
  auto pts = stream_of(6);
  std::reverse(pts.begin(), pts.end());
  const auto g = assign_groups(pts, 3);
  EXPECT_EQ(g[0].points.front().id, "p0");
  EXPECT_THROW(assign_groups({}, 3), std::invalid_argument);
  EXPECT_THROW(assign_groups(stream_of(4), 0), std::invalid_argument);
  auto ragged = stream_of(4);
  ragged[2].features = VectorXd::Zero(3);
  EXPECT_THROW(assign_groups(ragged, 2), std::invalid_argument);
}

TEST(Groups, ReturningCohortAfterCloseThrows) {
  Points pts;
  const char* keys = "ABA";
  for (std::size_t i = 0; i < 3; ++i) pts.push_back(point(i, 0, std::string(1, keys[i])));
  EXPECT_THROW(assign_groups(pts, 1), std::invalid_argument);
}

TEST(Ledger, StratifiedCeilingSplit) {
  TimeGroup g{1, {}};
  for (std::size_t i = 0; i < 10; ++i) g.points.push_back(point(i, i < 5));
  PoolLedger ledger;
  ledger.partition(g, 0.2, 3);
  const auto valid = pool_points(g, ledger, Pool::valid);
  ASSERT_EQ(valid.size(), 2u);
  EXPECT_NE(valid[0].label, valid[1].label);
  EXPECT_THROW(ledger.partition(g, 0.2, 3), std::invalid_argument);
}

TEST(Ledger, SingletonClassGoesToValidation) {
  TimeGroup g{1, {}};
  g.points.push_back(point(0, 1));
  for (std::size_t i = 1; i < 10; ++i) g.points.push_back(point(i, 0));
  PoolLedger ledger;
  ledger.partition(g, 0.2, 0);
  EXPECT_EQ(ledger.pool_of("p0"), Pool::valid);
  EXPECT_EQ(pool_points(g, ledger, Pool::valid).size(), 3u);  // 1 + ceil(1.8)
}

TEST(Ledger, DeterministicUnderSeed) {
  const auto a = build_timeline(stream_of(200), 20, 0.2, 77);
  const auto b = build_timeline(stream_of(200), 20, 0.2, 77);
  for (const auto& g : a.groups) {
    for (const auto& p : g.points) EXPECT_EQ(a.ledger.pool_of(p.id), b.ledger.pool_of(p.id));
  }
  EXPECT_THROW(PoolLedger{}.partition(a.groups[0], 1.0, 0), std::invalid_argument);
}

TEST(Sets, MinimalInitialization) {
  const auto tl = build_timeline(stream_of(20), 10, 0.2, 1);
  const auto s = build_init_sets(tl.groups, tl.ledger, 1, 1);
  EXPECT_EQ(ids(s.train), ids(pool_points(tl.group(1), tl.ledger, Pool::train)));
  EXPECT_EQ(ids(s.valid), ids(pool_points(tl.group(1), tl.ledger, Pool::valid)));
  EXPECT_EQ(s.test, tl.group(2).points);
}

TEST(Sets, InitWindowsAndErrors) {
  const auto tl = build_timeline(stream_of(400), 20, 0.2, 1);
  const auto s = build_init_sets(tl.groups, tl.ledger, 15, 15);
  std::set<std::string> all_valid;
  for (std::size_t g = 1; g <= 15; ++g) {
    for (const auto& p : pool_points(tl.group(g), tl.ledger, Pool::valid)) all_valid.insert(p.id);
  }
  EXPECT_EQ(ids(s.valid), all_valid);
  EXPECT_TRUE(disjoint(ids(s.train), ids(s.valid)));
  EXPECT_EQ(s.train.size() + s.valid.size(), 15u * 20u);
  EXPECT_THROW(build_init_sets(tl.groups, tl.ledger, 5, 6), std::invalid_argument);
  EXPECT_THROW(build_init_sets(tl.groups, tl.ledger, 20, 5), std::invalid_argument);
}

TEST(Sets, UpdateSetsDeduplicateBuffer) {
  const auto tl = build_timeline(stream_of(200), 20, 0.2, 4);
  const auto own = pool_points(tl.group(5), tl.ledger, Pool::train);
  const auto empty = build_update_sets(tl.groups, tl.ledger, 5, 3, {});
  EXPECT_EQ(ids(empty.train), ids(own));
  Points buffer = pool_points(tl.group(4), tl.ledger, Pool::train);
  buffer.push_back(own.front());
  const auto s = build_update_sets(tl.groups, tl.ledger, 5, 3, buffer);
  EXPECT_EQ(s.train.size(), own.size() + buffer.size() - 1);
  EXPECT_EQ(s.test, tl.group(6).points);
  EXPECT_EQ(ids(s.valid), ids(validation_window(tl.groups, tl.ledger, 5, 3)));
  EXPECT_TRUE(disjoint(ids(s.train), ids(s.valid)));
}

TEST(CrossVal, FortySplitsPartitioningTheData) {
  const auto pts = stream_of(103);
  const auto splits = crossval_splits(pts, 4, 9);
  ASSERT_EQ(splits.size(), 40u);
  std::size_t min_sub = pts.size(), max_sub = 0;
  for (const auto& s : splits) {
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.valid.begin(), s.valid.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), pts.size());
    for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
    min_sub = std::min({min_sub, s.valid.size(), s.test.size()});
    max_sub = std::max({max_sub, s.valid.size(), s.test.size()});
    std::vector<DataPoint> v;
    for (auto i : s.valid) v.push_back(pts[i]);
    EXPECT_TRUE(has_both_classes(v));
  }
  EXPECT_LE(max_sub - min_sub, 1u);
}

TEST(CrossVal, FoldSizesDifferByAtMostOne) {
  const auto pts = stream_of(47);
  const auto splits = crossval_splits(pts, 1, 2);
  for (std::size_t f = 0; f < 5; ++f) {
    const auto fold = splits[2 * f].valid.size() + splits[2 * f].test.size();
    EXPECT_GE(fold, 9u);
    EXPECT_LE(fold, 10u);
  }
  EXPECT_THROW(crossval_splits(stream_of(10), 1, 0), std::invalid_argument);
}

TEST(Replay, SampleSizeAndBalance) {
  Points pool;
  for (std::size_t i = 0; i < 40; ++i) pool.push_back(point(i, i < 20));
  const auto odd = sample_balanced(pool, 10, 50, 1, 3);
  ASSERT_EQ(odd.size(), 5u);
  const auto pos = std::count_if(odd.begin(), odd.end(), [](const DataPoint& p) { return p.label == 1; });
  EXPECT_EQ(pos, 3);
  const auto even = sample_balanced(pool, 10, 50, 1, 4);
  EXPECT_EQ(std::count_if(even.begin(), even.end(), [](const DataPoint& p) { return p.label == 1; }), 2);
  EXPECT_TRUE(sample_balanced(pool, 0, 50, 1, 3).empty());
}

TEST(Replay, MinorityShortfallCapsBothClasses) {
  Points pool;
  for (std::size_t i = 0; i < 30; ++i) pool.push_back(point(i, i < 2));
  const auto s = sample_balanced(pool, 10, 50, 1, 1);
  EXPECT_EQ(s.size(), 4u);
  Points no_pos;
  for (std::size_t i = 0; i < 30; ++i) no_pos.push_back(point(i, 0));
  EXPECT_TRUE(sample_balanced(no_pos, 10, 50, 1, 1).empty());
  EXPECT_TRUE(sample_balanced({}, 10, 50, 1, 1).empty());
}

TEST(Replay, WindowOfOneHoldsPreviousGroup) {
  ReplayBuffer b(1);
  for (std::size_t t = 2; t < 8; ++t) {
    Points s{point(t - 1, 0)};
    const auto contents = b.advance(std::move(s), t);
    ASSERT_EQ(contents.size(), 1u);
    EXPECT_EQ(contents[0].id, "p" + std::to_string(t - 1));
  }
}

TEST(Replay, WarmBufferSizeAndWindow) {
  ReplayBuffer b(8);
  Points contents;
  for (std::size_t t = 2; t <= 21; ++t) {
    Points s;
    for (std::size_t k = 0; k < 5; ++k) s.push_back(point(100 * t + k, k % 2));
    contents = b.advance(std::move(s), t);
    for (const auto& e : b.entries()) {
      EXPECT_GE(e.origin_group + 8, t);
      EXPECT_LT(e.origin_group, t);
    }
  }
  EXPECT_EQ(contents.size(), 40u);
  // FIFO: the oldest surviving entry is the first one returned
  EXPECT_EQ(b.entries().front().origin_group, 13u);
  EXPECT_EQ(contents.front().id, "p1400");
}

TEST(Replay, RejectsNonmonotoneSteps) {
  ReplayBuffer b(3);
  b.advance(5);
  EXPECT_THROW(b.advance(4), std::invalid_argument);
  b.push({point(1, 0)}, 7);
  EXPECT_THROW(b.advance(7), std::invalid_argument);
  EXPECT_THROW(ReplayBuffer(0), std::invalid_argument);
}
