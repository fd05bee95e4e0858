// Acceptance suite: one PASS/FAIL line per criterion. Runs every criterion by
// default, or a single one with --criterion N. Exit status is nonzero when any
// selected criterion fails.

#include "lifelong/driftgen.hpp"
#include "lifelong/effort.hpp"
#include "lifelong/importance.hpp"
#include "lifelong/orchestrator.hpp"
#include "lifelong/replay.hpp"
#include "lifelong/stats.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace lifelong;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Every orchestrated run of the suite, kept for the prequential audit.
std::deque<RunRecord>& audited_runs() {
  static std::deque<RunRecord> runs;
  return runs;
}

const RunOptions kAudit{false, true};

const RunRecord& keep(RunRecord r) {
  audited_runs().push_back(std::move(r));
  return audited_runs().back();
}

double pooled_f1(const RunRecord& r) { return run_metric(r, RunMetric::f1); }

// ---------------------------------------------------------------- 1

Mlp<long double> widen(const Mlp<double>& m) {
  LayerStack<long double> layers;
  for (const auto& l : m.layers()) layers.push_back({l.weights.cast<long double>(), l.bias.cast<long double>()});
  return Mlp<long double>(m.layer_sizes(), std::move(layers), m.version());
}

// Analytic double-precision gradients against central differences evaluated in
// long double, so the oracle's own rounding stays far below the tolerance.
Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.4);
  std::uniform_int_distribution<int> dim(1, 8), depth(0, 3), width(1, 12), batch(1, 16);
  const long double h = 1e-6L;
  double worst = 0;
  std::size_t entries = 0;

  auto rel = [](double analytic, long double fd) {
    const long double a = analytic;
    const long double scale = std::max({std::fabs(a), std::fabs(fd), 1e-10L});
    return static_cast<double>(std::fabs(a - fd) / scale);
  };

  for (int c = 0; c < 100; ++c) {
    std::vector<Eigen::Index> sizes{dim(rng)};
    for (int l = depth(rng); l > 0; --l) sizes.push_back(width(rng));
    sizes.push_back(1);
    auto m = Mlp<double>::init(sizes, rng());
    for (auto& l : m.layers()) {
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * normal(rng);
    }
    const Eigen::Index n = batch(rng);
    MatrixXd x(n, sizes[0]);
    VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = normal(rng);
      y(i) = coin(rng) ? 1.0 : 0.0;
    }

    const auto lg = loss_and_grad(m, x, y, true);
    const auto wide = widen(m);
    const Matrix<long double> xw = x.cast<long double>();
    const Vector<long double> yw = y.cast<long double>();

    for (std::size_t l = 0; l < wide.layers().size(); ++l) {
      const auto nw = wide.layers()[l].weights.size();
      for (Eigen::Index k = 0; k < nw + wide.layers()[l].bias.size(); ++k) {
        auto plus = wide;
        auto minus = wide;
        auto& p = k < nw ? plus.layers()[l].weights(k) : plus.layers()[l].bias(k - nw);
        auto& q = k < nw ? minus.layers()[l].weights(k) : minus.layers()[l].bias(k - nw);
        p += h;
        q -= h;
        const long double fd = (bce_loss(plus, xw, yw) - bce_loss(minus, xw, yw)) / (2 * h);
        const double an = k < nw ? lg.grads[l].weights(k) : lg.grads[l].bias(k - nw);
        worst = std::max(worst, rel(an, fd));
        ++entries;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        Matrix<long double> xp = xw, xm = xw;
        xp(i, j) += h;
        xm(i, j) -= h;
        const long double fd = (forward(wide, xp).mean() - forward(wide, xm).mean()) / (2 * h);
        worst = std::max(worst, rel(lg.input_grad(i, j), fd));
        ++entries;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 30,
          format("max relative error %.2e over %zu parameter and input entries in 100 cases, %.2f s (limit 30 s)",
                 worst, entries, secs)};
}

// ---------------------------------------------------------------- 2, 4

struct ProjectConfig {
  const char* name;
  std::size_t gs, it_win, v_win;
  double rb_size;
  std::size_t rb_win;
};

constexpr ProjectConfig kProjects[] = {
    {"Brown_1", 50, 15, 15, 10, 8},   {"Brown_2", 50, 10, 10, 5, 10},  {"Brown_3", 50, 10, 10, 5, 5},
    {"Brown_OSS", 100, 10, 10, 20, 10}, {"Risk_1", 500, 15, 8, 10, 8}, {"Risk_2", 500, 15, 15, 10, 15},
    {"Risk_3", 1000, 15, 8, 10, 8},   {"Risk_4", 500, 15, 8, 10, 8},
};

Hyperparams project_hyper(const ProjectConfig& p) {
  Hyperparams h;
  h.group_size = p.gs;
  h.init_window = p.it_win;
  h.valid_window = p.v_win;
  h.rb_size = p.rb_size;
  h.rb_window = p.rb_win;
  return h;
}

const ProjectConfig& project(const std::string& name) {
  for (const auto& p : kProjects) {
    if (name == p.name) return p;
  }
  throw std::logic_error("unknown project " + name);
}

Outcome update_size_algebra() {
  struct Row {
    const char* name;
    double update_gs, speedup;
  };
  const Row table[] = {{"Brown_1", 1.8, 8.3}, {"Brown_2", 1.5, 6.7}, {"Brown_3", 1.25, 8.0}, {"Risk_1", 1.8, 8.3},
                       {"Risk_2", 2.5, 6.0},  {"Risk_3", 1.8, 8.3},  {"Risk_4", 1.8, 8.3}};
  bool ok = true;
  std::string bad;
  double worst_speedup = 0;
  for (const auto& row : table) {
    const auto th = theoretical_sizes(project_hyper(project(row.name)));
    const bool size_ok = std::abs(th.update_size_gs - row.update_gs) <= 1e-12;
    const double dev = std::abs(th.speedup - row.speedup);
    worst_speedup = std::max(worst_speedup, dev);
    if (!size_ok || dev > 0.05) {
      ok = false;
      bad += format(" %s(%.4g GS, %.3f)", row.name, th.update_size_gs, th.speedup);
    }
  }
  // Brown_OSS: RBSize 20, RBWin 10 gives 3 GS by the formula; its table row lists 2 GS.
  const auto oss = theoretical_sizes(project_hyper(project("Brown_OSS")));
  const bool oss_known = std::abs(oss.update_size_gs - 3.0) <= 1e-12 && std::abs(oss.update_size_gs - 2.0) > 0.5;
  ok = ok && oss_known;
  return {ok, format("7 update rows exact, speedups within %.3f of the table%s; Brown_OSS known discrepancy: "
                     "formula %.2f GS (speedup %.2f) vs table 2 GS (speedup 5)",
                     worst_speedup, bad.empty() ? "" : (", mismatches:" + bad).c_str(), oss.update_size_gs,
                     oss.speedup)};
}

// A recorded run with one fit at time 0 and one more after each gap (days).
RunRecord shaped_run(const std::string& setup, const Hyperparams& h, const std::vector<double>& gaps_days,
                     double train_gs) {
  RunRecord r;
  r.setup = setup;
  r.hyper = h;
  const std::int64_t t0 = 1577836800;
  double day = 0;
  auto fit_at = [&](std::size_t i, double size_gs) {
    StepRecord s;
    s.step = h.init_window + i;
    s.test_group = s.step + 1;
    s.updated = true;
    s.train_size = static_cast<std::size_t>(std::llround(size_gs * static_cast<double>(h.group_size)));
    s.position = s.step * h.group_size;
    s.time = t0 + static_cast<std::int64_t>(std::llround(day * 86400));
    r.steps.push_back(s);
  };
  fit_at(0, static_cast<double>(h.init_window));
  for (std::size_t i = 0; i < gaps_days.size(); ++i) {
    day += gaps_days[i];
    fit_at(i + 1, train_gs);
  }
  return r;
}

Outcome effort_ratio() {
  // Brown_1 headline: Heuri retrains on 24.6 GS every 42 days, LL on 1.8 GS every 9.
  const auto b1 = project_hyper(project("Brown_1"));
  const auto ll_b1 = shaped_run("ll", b1, {9, 9, 18}, theoretical_sizes(b1).update_size_gs);
  const auto heuri_b1 = shaped_run("decay", b1, {42, 42, 42}, 24.6);
  const auto head = effort_report(heuri_b1, ll_b1);
  const bool head_ok = head.defined && head.life_in_days && std::abs(head.coef_rel - 2.93) <= 0.01;

  // Baselines shaped on the life-expectation and training-size tables. LL gap lists
  // reproduce each project's median and mean life; record GS is 100 everywhere so
  // every size is a whole number of points (GS cancels in the ratio).
  struct Shape {
    const char* name;
    std::vector<double> ll_gaps;
    double heuri_days;
    double rfs_gs;
  };
  const Shape shapes[] = {{"Brown_1", {9, 9, 18}, 42, 24.6},
                          {"Brown_2", {4, 4, 28}, 35, 11.4},
                          {"Brown_3", {5, 5, 8}, 14, 10.5},
                          {"Brown_OSS", {18, 18, 219}, 7, 6.6}};
  struct RiskShape {
    const char* name;
    std::vector<double> ll_gaps;
  };
  const RiskShape risks[] = {{"Risk_1", {32, 32, 56}},
                             {"Risk_2", {22, 22, 52}},
                             {"Risk_3", {35, 35, 59}},
                             {"Risk_4", {36, 36, 24}}};

  std::size_t in_mean = 0, in_median = 0, total = 0;
  double lo = 1e9, hi = 0;
  std::string outside_median;
  auto tally = [&](const std::string& label, const EffortReport& e) {
    ++total;
    if (e.coef_rel_mean >= 2 && e.coef_rel_mean <= 40) ++in_mean;
    if (e.coef_rel >= 2 && e.coef_rel <= 40) {
      ++in_median;
    } else {
      outside_median += format(" %s %.2f", label.c_str(), e.coef_rel);
    }
    lo = std::min(lo, e.coef_rel_mean);
    hi = std::max(hi, e.coef_rel_mean);
  };
  for (const auto& s : shapes) {
    auto h = project_hyper(project(s.name));
    h.group_size = 100;
    const auto ll = shaped_run("ll", h, s.ll_gaps, theoretical_sizes(h).update_size_gs);
    tally(std::string(s.name) + " Weekly", effort_report(shaped_run("weekly", h, {7, 7, 7}, s.rfs_gs), ll));
    tally(std::string(s.name) + " Heuri",
          effort_report(shaped_run("decay", h, {s.heuri_days, s.heuri_days, s.heuri_days}, s.rfs_gs), ll));
  }
  // Risk baseline: the partner's retraining every 49 days, sized at the LL
  // initialization window (the lower bound for a from-scratch training set).
  for (const auto& s : risks) {
    auto h = project_hyper(project(s.name));
    h.group_size = 100;
    const auto ll = shaped_run("ll", h, s.ll_gaps, theoretical_sizes(h).update_size_gs);
    const auto real = shaped_run("real", h, {49, 49, 49}, static_cast<double>(h.init_window));
    tally(std::string(s.name) + " RealPred", effort_report(real, ll));
  }
  const bool band_ok = in_mean == total;
  return {head_ok && band_ok,
          format("Brown_1 Heuri coef_rel %.4f (target 2.93 +- 0.01); mean-life coef_rel of %zu/%zu baseline configs in "
                 "[2, 40] (range %.2f..%.2f); median-life coef_rel in band for %zu/%zu%s",
                 head.coef_rel, in_mean, total, lo, hi, in_median, total,
                 outside_median.empty() ? "" : (", outside:" + outside_median).c_str())};
}

// ---------------------------------------------------------------- 3

Outcome measured_sizes() {
  const auto h0 = project_hyper(project("Risk_1"));
  auto h = h0;
  h.epochs = 2;
  h.hidden = {8};
  h.minibatch = 50;
  h.lr = 1e-2;
  h.seed = 3;
  StreamSpec spec;
  spec.n = 30 * h.group_size;
  spec.dim = 10;
  spec.positive_rate = 0.3;
  spec.noise = 0.05;
  spec.seed = 31;
  const auto tl = make_timeline(generate_stream(spec), h);
  const auto& ll = keep(run_ll(tl, h, true, kAudit));
  const auto& rfs = keep(run_rfs(tl, h, kAudit));

  const auto k = replay_sample_size(h.rb_size, h.group_size);
  const auto nominal = h.group_size + h.rb_window * k;  // 500 + 8 * 50
  std::size_t warm = 0, exact = 0, adjusted = 0, shortfall_total = 0;
  std::size_t min_seen = SIZE_MAX, max_seen = 0;
  for (const auto& s : ll.steps) {
    if (s.step == h.init_window || !s.updated) continue;
    ++warm;
    // Minority shortfall: a group whose scarcer class cannot fill half the sample.
    std::size_t shortfall = 0;
    for (std::size_t g = s.step - h.rb_window; g < s.step; ++g) {
      const auto pool = pool_points(tl.group(g), tl.ledger, Pool::train);
      const auto pos = static_cast<std::size_t>(
          std::count_if(pool.begin(), pool.end(), [](const DataPoint& p) { return p.label == 1; }));
      const auto cap = 2 * std::min(pos, pool.size() - pos);
      shortfall += k - std::min(k, cap);
    }
    shortfall_total += shortfall;
    const auto own = pool_points(tl.group(s.step), tl.ledger, Pool::train).size();
    exact += s.train_size + shortfall == nominal;
    adjusted += s.train_size + shortfall == own + h.rb_window * k;
    min_seen = std::min(min_seen, s.train_size);
    max_seen = std::max(max_seen, s.train_size);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < rfs.steps.size(); ++i) monotone = monotone && rfs.steps[i].train_size >= rfs.steps[i - 1].train_size;

  return {warm > 0 && exact == warm && monotone,
          format("LL warm-buffer train sets %zu..%zu points (target %zu minus shortfall %zu) at %zu/%zu steps; "
                 "own train pool (%zu of GS, valid_fraction %.1f held out) + RBWin x k matches at %zu/%zu steps; "
                 "RFS train sizes %s",
                 min_seen, max_seen, nominal, shortfall_total, exact, warm,
                 static_cast<std::size_t>(std::lround((1 - h.valid_fraction) * static_cast<double>(h.group_size))),
                 h.valid_fraction, adjusted, warm, monotone ? "nondecreasing" : "NOT monotone")};
}

// ---------------------------------------------------------------- 5

Outcome replay_value() {
  const auto t0 = Clock::now();
  constexpr std::size_t kGs = 250, kPeriodGroups = 8, kSeeds = 10;
  StreamSpec spec;
  spec.n = 20000;
  spec.dim = 20;
  spec.positive_rate = 0.3;
  spec.noise = 0.05;
  spec.drift = drift::Recurrent{kPeriodGroups * kGs};

  Hyperparams h;
  h.group_size = kGs;
  h.init_window = kPeriodGroups;
  h.valid_window = kPeriodGroups;
  h.rb_size = 10;
  h.rb_window = kPeriodGroups;
  h.lr = 3e-3;
  h.epochs = 20;
  h.minibatch = 20;
  h.hidden = {32};

  auto short_valid = h;
  short_valid.valid_window = 2;

  std::vector<double> f1_ll, f1_norb, f1_ll_short, f1_norb_short;
  std::vector<RunRecord> stationary, drifted;
  for (std::size_t seed = 1; seed <= kSeeds; ++seed) {
    auto s = spec;
    s.seed = 500 + seed;
    h.seed = short_valid.seed = seed;
    const auto points = generate_stream(s);
    const auto tl = make_timeline(points, h);
    f1_ll.push_back(pooled_f1(keep(run_ll(tl, h, true, kAudit))));
    f1_norb.push_back(pooled_f1(keep(run_ll(tl, h, false, kAudit))));
    const auto tl_short = make_timeline(points, short_valid);
    f1_ll_short.push_back(pooled_f1(keep(run_ll(tl_short, short_valid, true, kAudit))));
    f1_norb_short.push_back(pooled_f1(keep(run_ll(tl_short, short_valid, false, kAudit))));

    // Frozen model, trained on the first concept's period only; steps split by the
    // concept active over the group it scores.
    const auto& frozen = keep(run_setup(tl, h, "frozen", kAudit));
    RunRecord same = frozen, other = frozen;
    same.steps.clear();
    other.steps.clear();
    for (const auto& st : frozen.steps) {
      const auto first = (st.test_group - 1) * kGs;
      (active_concept(s, first) == 0 ? same : other).steps.push_back(st);
    }
    same.audit.reset();
    other.audit.reset();
    stationary.push_back(std::move(same));
    drifted.push_back(std::move(other));
  }
  const double med_ll = median(f1_ll), med_norb = median(f1_norb);
  const auto cmp = compare_runs(stationary, drifted, RunMetric::f1);
  const double secs = seconds_since(t0);
  const bool ok = med_ll >= med_norb && cmp.significant && cmp.mean_a > cmp.mean_b && secs < 600;
  return {ok, format("median pooled F1 LL %.3f vs LL-noRB %.3f over %zu seeds (VWin = RBWin = period); frozen model "
                     "F1 stationary %.3f vs post-drift %.3f, KW p %.2g, Cliff's delta %.2f; %.1f s (limit 600 s). "
                     "Info: with VWin 2 the order flips, LL %.3f vs LL-noRB %.3f",
                     med_ll, med_norb, kSeeds, cmp.mean_a, cmp.mean_b, cmp.p, cmp.delta, secs,
                     median(f1_ll_short), median(f1_norb_short))};
}

// ---------------------------------------------------------------- 7

double naive_h(const std::vector<std::vector<double>>& groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  const double n = static_cast<double>(all.size());
  auto rank_of = [&](double v) {
    double less = 0, equal = 0;
    for (double x : all) {
      less += x < v;
      equal += x == v;
    }
    return less + (equal + 1) / 2;
  };
  double s = 0;
  for (const auto& g : groups) {
    double r = 0;
    for (double v : g) r += rank_of(v);
    s += r * r / static_cast<double>(g.size());
  }
  const double h = 12 / (n * (n + 1)) * s - 3 * (n + 1);
  std::map<double, double> counts;
  for (double v : all) counts[v] += 1;
  double ties = 0;
  for (const auto& [v, t] : counts) ties += t * t * t - t;
  const double corr = 1 - ties / (n * n * n - n);
  return corr > 0 ? h / corr : 0;
}

double permutation_p(const std::vector<std::vector<double>>& groups) {
  std::vector<double> all;
  std::vector<std::size_t> sizes;
  for (const auto& g : groups) {
    all.insert(all.end(), g.begin(), g.end());
    sizes.push_back(g.size());
  }
  const double observed = naive_h(groups);
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), 0);
  double hits = 0, total = 0;
  do {
    std::vector<std::vector<double>> g(sizes.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      for (std::size_t j = 0; j < sizes[i]; ++j) g[i].push_back(all[idx[k++]]);
    }
    hits += naive_h(g) >= observed - 1e-9;
    total += 1;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return hits / total;
}

Outcome statistics_oracles() {
  const std::vector<std::vector<double>> triples{{1, 2, 3}, {4, 5, 6}};
  const double h = kruskal_wallis(triples).h;
  const bool h_ok = std::abs(h - 3.857) <= 1e-3;

  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> value(0, 5);
  double worst_p = 0;
  const int designs = 30;
  for (int d = 0; d < designs; ++d) {
    const std::size_t k = d % 3 == 0 ? 3 : 2;
    const std::size_t total = 4 + static_cast<std::size_t>(d % 5);  // 4..8
    std::vector<std::vector<double>> g(k);
    for (std::size_t i = 0; i < total; ++i) g[i < k ? i : rng() % k].push_back(value(rng));
    worst_p = std::max(worst_p, std::abs(kruskal_wallis(g).p - permutation_p(g)));
  }

  std::uniform_int_distribution<int> len(1, 8);
  int cliff_equal = 0;
  for (int c = 0; c < 50; ++c) {
    std::vector<double> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
    for (auto& v : a) v = value(rng);
    for (auto& v : b) v = value(rng);
    long gt = 0, lt = 0;
    for (double x : a) {
      for (double y : b) {
        gt += x > y;
        lt += x < y;
      }
    }
    const double oracle = static_cast<double>(gt - lt) / static_cast<double>(a.size() * b.size());
    const auto d = cliffs_delta(a, b);
    const double m = std::abs(oracle);
    const auto mag = m < 0.147 ? EffectMagnitude::negligible
                     : m < 0.33 ? EffectMagnitude::small
                     : m < 0.474 ? EffectMagnitude::medium
                                 : EffectMagnitude::large;
    cliff_equal += d.delta == oracle && d.magnitude == mag;
  }
  return {h_ok && worst_p <= 0.02 && cliff_equal == 50,
          format("H([1,2,3],[4,5,6]) = %.4f; max |p - permutation p| %.4f over %d designs with n <= 8; Cliff's delta "
                 "equal to the pair oracle on %d/50",
                 h, worst_p, designs, cliff_equal)};
}

// ---------------------------------------------------------------- 8

Outcome metric_reproduction() {
  // Pre 64, Rec 83 with 1600 positives: TP 1328, FN 272, FP 747 (TP/(TP+FP) = 0.640).
  const Confusion c{1328, 747, 5000, 272};
  const auto m = evaluate(c);
  const bool row_ok = std::abs(100 * m.f1 - 72) <= 1 && std::abs(100 * m.precision - 64) <= 0.5 &&
                        std::abs(100 * m.recall - 83) <= 0.5;

  Hyperparams h;
  h.group_size = 100;
  h.init_window = 5;
  h.valid_window = 5;
  double worst = 0, max_gm = 0;
  std::string rows;
  for (double beta : {0.05, 0.13, 0.30, 0.37}) {
    StreamSpec spec;
    spec.n = 10000;
    spec.dim = 5;
    spec.positive_rate = beta;
    spec.seed = static_cast<std::uint64_t>(beta * 1000);
    const auto tl = make_timeline(generate_stream(spec), h);
    const auto& r = keep(run_naive_positive(tl, h, kAudit));
    const auto pooled = aggregate(r).pooled;
    worst = std::max(worst, std::abs(pooled.f1 - 2 * beta / (1 + beta)));
    max_gm = std::max(max_gm, pooled.gmean);
    rows += format(" b=%.2f:%.3f", beta, pooled.f1);
  }
  return {row_ok && max_gm == 0 && worst <= 0.02,
          format("reconstructed Brown_1 LL row: Pre %.1f Rec %.1f F1 %.2f; always-positive max GM %.1f, max |F1 - "
                 "2b/(1+b)| %.4f (F1%s)",
                 100 * m.precision, 100 * m.recall, 100 * m.f1, max_gm, worst, rows.c_str())};
}

// ---------------------------------------------------------------- 9

Hyperparams sanity_hyper(std::uint64_t seed) {
  Hyperparams h;
  h.group_size = 200;
  h.init_window = 5;
  h.valid_window = 3;
  h.rb_size = 20;
  h.rb_window = 4;
  h.lr = 1e-2;
  h.epochs = 20;
  h.minibatch = 20;
  h.hidden = {32};
  h.seed = seed;
  return h;
}

StreamSpec separable_stream(std::uint64_t seed) {
  StreamSpec spec;
  spec.n = 6000;
  spec.dim = 10;
  spec.positive_rate = 0.3;
  spec.seed = seed;
  return spec;
}

Outcome stationary_sanity() {
  double worst = 1;
  std::string rows;
  for (const std::string setup : {"ll", "ll_norb", "rfs"}) {
    double lowest = 1;
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto h = sanity_hyper(seed);
      const auto tl = make_timeline(generate_stream(separable_stream(100 + seed)), h);
      lowest = std::min(lowest, pooled_f1(keep(run_setup(tl, h, setup, kAudit))));
    }
    worst = std::min(worst, lowest);
    rows += format(" %s %.3f", setup.c_str(), lowest);
  }

  // Bit-for-bit: rebuild everything from the same seeds, importance and audit on.
  int identical = 0;
  for (const std::string setup : {"ll", "ll_norb", "rfs"}) {
    const auto h = sanity_hyper(7);
    const RunOptions full{true, true};
    auto a = run_setup(make_timeline(generate_stream(separable_stream(7)), h), h, setup, full);
    auto b = run_setup(make_timeline(generate_stream(separable_stream(7)), h), h, setup, full);
    bool same = same_outcome(a, b);
    for (auto* r : {&a, &b}) {
      for (auto& s : r->steps) s.fit_seconds = 0;
    }
    same = same && a == b;
    identical += same;
    keep(std::move(a));
  }
  return {worst >= 0.9 && identical == 3,
          format("lowest pooled F1 over 3 seeds:%s (need >= 0.9); identical reruns %d/3", rows.c_str(), identical)};
}

// ---------------------------------------------------------------- 10

VectorXd column(const Points& pts, Eigen::Index j) {
  VectorXd v(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) v(static_cast<Eigen::Index>(i)) = pts[i].features(j);
  return v;
}

double covariance(const VectorXd& a, const VectorXd& b) {
  return ((a.array() - a.mean()) * (b.array() - b.mean())).mean();
}

Outcome importance_pipeline() {
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> scale(0.01, 100);

  // Discretization is a function of each column's Max, so positive rescaling of any
  // column leaves it unchanged.
  int invariant = 0;
  for (int c = 0; c < 20; ++c) {
    MatrixXd a(7, 5);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = normal(rng);
    MatrixXd scaled = a;
    for (Eigen::Index j = 0; j < a.cols(); ++j) scaled.col(j) *= scale(rng);
    invariant += discretize_importance(a) == discretize_importance(scaled) &&
                 discretize_importance(a) == discretize_importance(a * scale(rng));
  }

  // Planted model: the label reads feature 0 positively and feature 1 negatively.
  constexpr Eigen::Index kDim = 6;
  VectorXd w = VectorXd::Zero(kDim);
  w(0) = 2.0;
  w(1) = -1.5;
  StreamSpec spec;
  spec.n = 4000;
  spec.dim = kDim;
  spec.positive_rate = 0.3;
  spec.seed = 99;
  spec.concepts = {Concept{"planted", w, 0}};
  const auto pts = generate_stream(spec);
  const Points train(pts.begin(), pts.begin() + 3000), valid(pts.begin() + 3000, pts.begin() + 3500),
      test(pts.begin() + 3500, pts.end());
  TrainOptions opts;
  opts.lr = 1e-2;
  opts.epochs = 30;
  opts.seed = 5;
  const auto model = fit(Mlp<double>::init({kDim, 16, 1}, 5), to_labeled(train), to_labeled(valid), opts).model;
  const auto attr = compute_importance(model, test);

  // Permutation oracle: shuffle one column; the signed score compares the column's
  // covariance with the output before and after, the unsigned one is the F1 drop.
  const auto data = to_labeled(test);
  std::vector<int> truth(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) truth[i] = test[i].label;
  const double base_f1 = f1_score(confusion_from(truth, predict_labels(model, data.features)));
  const VectorXd p = forward(model, data.features);
  VectorXd signed_score(kDim), drop(kDim);
  std::vector<Eigen::Index> perm(test.size());
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  for (Eigen::Index j = 0; j < kDim; ++j) {
    std::shuffle(perm.begin(), perm.end(), rng);
    MatrixXd x = data.features;
    x.col(j) = data.features.col(j)(perm);
    const VectorXd pp = forward(model, x);
    const VectorXd xj = column(test, j);
    signed_score(j) = covariance(xj, p) - covariance(xj, pp);
    drop(j) = base_f1 - f1_score(confusion_from(truth, predict_labels(model, x)));
  }
  auto top2 = [](const VectorXd& v) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v(a) > v(b); });
    return std::vector<Eigen::Index>{std::min(idx[0], idx[1]), std::max(idx[0], idx[1])};
  };
  const std::vector<Eigen::Index> planted{0, 1};
  const bool signs = attr(0) > 0 && signed_score(0) > 0 && attr(1) < 0 && signed_score(1) < 0;
  const bool ranked = top2(attr.cwiseAbs()) == planted && top2(drop) == planted;

  // Variance comparison over two real runs of the planted stream.
  Hyperparams h;
  h.group_size = 200;
  h.init_window = 5;
  h.valid_window = 3;
  h.rb_size = 20;
  h.rb_window = 4;
  h.lr = 1e-2;
  h.epochs = 10;
  h.hidden = {16};
  h.seed = 2;
  const auto tl = make_timeline(pts, h);
  const RunOptions full{true, true};
  const auto& ll = keep(run_ll(tl, h, true, full));
  const auto& rfs = keep(run_rfs(tl, h, full));
  const auto rep = variance_report(*ll.importance, *rfs.importance);
  const double raw_sum = rep.raw.higher_a + rep.raw.higher_b + rep.raw.same;
  const double disc_sum = rep.discretized.higher_a + rep.discretized.higher_b + rep.discretized.same;
  const bool sums = std::abs(raw_sum - 100) <= 1e-9 && std::abs(disc_sum - 100) <= 1e-9;
  const bool run_invariant = discretize_importance(*ll.importance) == discretize_importance(*ll.importance * 3.5);

  return {invariant == 20 && run_invariant && signs && ranked && sums,
          format("scaling invariance %d/20 random + run matrix %s; planted attributions %+.4f / %+.4f, permutation "
                 "signed scores %+.4f / %+.4f, F1 drops %.3f / %.3f (null max %.3f); LL vs RFS variance shares "
                 "%.1f+%.1f+%.1f = %.1f raw, %.1f discretized",
                 invariant, run_invariant ? "yes" : "no", attr(0), attr(1), signed_score(0), signed_score(1), drop(0),
                 drop(1), drop.tail(kDim - 2).maxCoeff(), rep.raw.higher_a, rep.raw.higher_b, rep.raw.same, raw_sum,
                 disc_sum)};
}

// ---------------------------------------------------------------- 6, driver

Outcome run_criterion(int n);

Outcome prequential_audit() {
  for (int dep : {3, 5, 8, 9, 10}) run_criterion(dep);
  std::size_t clean = 0, fits = 0;
  std::string first;
  for (const auto& r : audited_runs()) {
    const auto v = audit_violation(r);
    if (!v) {
      ++clean;
    } else if (first.empty()) {
      first = r.setup + ": " + *v;
    }
    if (r.audit) fits += r.audit->fits.size();
  }
  const auto total = audited_runs().size();
  return {total > 0 && clean == total,
          format("%zu/%zu audited runs clean (%zu fits checked for test leakage and train/valid overlap)%s", clean,
                 total, fits, first.empty() ? "" : (": first violation " + first).c_str())};
}

struct Criterion {
  const char* name;
  Outcome (*check)();
};

const std::map<int, Criterion> kCriteria{
    {1, {"gradient correctness", gradient_correctness}},
    {2, {"update-size algebra", update_size_algebra}},
    {3, {"measured update sizes", measured_sizes}},
    {4, {"effort ratio", effort_ratio}},
    {5, {"replay-buffer value", replay_value}},
    {6, {"prequential and disjointness audit", prequential_audit}},
    {7, {"statistics oracles", statistics_oracles}},
    {8, {"metric reproduction", metric_reproduction}},
    {9, {"stationary sanity", stationary_sanity}},
    {10, {"importance pipeline", importance_pipeline}},
};

Outcome run_criterion(int n) {
  static std::map<int, Outcome> done;
  if (auto it = done.find(n); it != done.end()) return it->second;
  Outcome o;
  try {
    o = kCriteria.at(n).check();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  return done[n] = o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria, one PASS/FAIL line each"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  int failed = 0;
  for (const auto& [n, c] : kCriteria) {
    if (only != 0 && n != only) continue;
    const auto o = run_criterion(n);
    std::printf("criterion %2d %s  %s: %s\n", n, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
