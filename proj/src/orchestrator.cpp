#include "lifelong/orchestrator.hpp"

#include "lifelong/effort.hpp"
#include "lifelong/importance.hpp"
#include "lifelong/random.hpp"
#include "lifelong/replay.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lifelong {

Timeline make_timeline(Points points, const Hyperparams& hyper) {
  hyper.validate();
  return build_timeline(std::move(points), hyper.group_size, hyper.valid_fraction, hyper.seed);
}

namespace {

constexpr std::uint64_t kInitTag = 0x1A17;

std::optional<std::int64_t> last_time(const TimeGroup& g) {
  std::optional<std::int64_t> t;
  for (const auto& p : g.points) {
    if (p.timestamp && (!t || *p.timestamp > *t)) t = p.timestamp;
  }
  return t;
}

std::optional<std::int64_t> first_time(const TimeGroup& g) {
  std::optional<std::int64_t> t;
  for (const auto& p : g.points) {
    if (p.timestamp && (!t || *p.timestamp < *t)) t = p.timestamp;
  }
  return t;
}

std::vector<std::string> ids_of(std::span<const DataPoint> pts) {
  std::vector<std::string> ids;
  ids.reserve(pts.size());
  for (const auto& p : pts) ids.push_back(p.id);
  return ids;
}

// Shared bookkeeping of one run over a timeline.
class Driver {
 public:
  Driver(const Timeline& tl, const Hyperparams& hyper, const RunOptions& opts, std::string setup)
      : tl_(tl), hyper_(hyper), opts_(opts) {
    hyper.validate();
    if (tl.size() < hyper.init_window + 1) {
      throw std::invalid_argument("timeline has " + std::to_string(tl.size()) + " groups, initialization needs " +
                                  std::to_string(hyper.init_window + 1));
    }
    dim_ = tl.groups.front().points.front().features.size();
    record_.setup = std::move(setup);
    record_.hyper = hyper;
    if (opts.audit) record_.audit = RunAudit{};
    std::uint64_t pos = 0;
    prefix_.push_back(0);
    for (const auto& g : tl.groups) prefix_.push_back(pos += g.points.size());
  }

  std::size_t last_step() const { return tl_.size() - 1; }
  const Hyperparams& hyper() const { return hyper_; }

  Mlp<double> fresh_model() const {
    return Mlp<double>::init(hyper_.layer_sizes(dim_), derive_seed(hyper_.seed, {kInitTag}));
  }

  StepRecord begin_step(std::size_t t) const {
    StepRecord s;
    s.step = t;
    s.test_group = t + 1;
    s.position = prefix_[t];
    s.time = last_time(tl_.group(t));
    s.test_begin = first_time(tl_.group(t + 1));
    s.test_end = last_time(tl_.group(t + 1));
    return s;
  }

  // Fits `start` on the sets and fills the step's training fields.
  Mlp<double> fit_step(const Mlp<double>& start, const StepSets& sets, StepRecord& s) {
    const auto train = to_labeled(sets.train);
    const auto valid = to_labeled(sets.valid);
    const auto t0 = std::chrono::steady_clock::now();
    auto result = fit(start, train, valid, hyper_.train_options());
    s.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    s.updated = true;
    s.train_size = sets.train.size();
    s.valid_size = sets.valid.size();
    s.valid_f1 = result.report.best_valid_f1();
    s.degenerate_validation = result.report.degenerate_validation;
    if (record_.audit) record_.audit->fits.push_back({s.step, ids_of(sets.train), ids_of(sets.valid)});
    return std::move(result.model);
  }

  // Scores group t+1 with `model` (or the always-positive rule) and appends the step.
  void score(StepRecord s, const Mlp<double>* model) {
    const auto& test = tl_.group(s.test_group).points;
    std::vector<int> truth;
    truth.reserve(test.size());
    for (const auto& p : test) truth.push_back(p.label);
    std::vector<int> pred;
    if (model) {
      pred = predict_labels<double>(*model, to_labeled(test).features, hyper_.threshold);
      s.model_version = model->version();
    } else {
      pred.assign(test.size(), 1);
    }
    s.confusion = confusion_from(truth, pred);
    if (record_.audit) record_.audit->test_ids.push_back(ids_of(test));
    if (opts_.track_importance && model) {
      const auto window = validation_window(tl_.groups, tl_.ledger, s.step, hyper_.valid_window);
      const auto imp = compute_importance(*model, window);
      importance_cols_.push_back(imp);
    }
    record_.steps.push_back(std::move(s));
  }

  RunRecord finish(std::string schedule) {
    record_.schedule = std::move(schedule);
    if (opts_.track_importance && !importance_cols_.empty()) {
      MatrixXd m(importance_cols_.front().size(), static_cast<Eigen::Index>(importance_cols_.size()));
      for (std::size_t c = 0; c < importance_cols_.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = importance_cols_[c];
      record_.importance = std::move(m);
    }
    return std::move(record_);
  }

  const Timeline& timeline() const { return tl_; }
  const RunRecord& record() const { return record_; }

 private:
  const Timeline& tl_;
  const Hyperparams& hyper_;
  const RunOptions& opts_;
  Eigen::Index dim_ = 0;
  RunRecord record_;
  std::vector<std::uint64_t> prefix_;
  std::vector<VectorXd> importance_cols_;
};

}  // namespace

RunRecord run_ll(const Timeline& tl, const Hyperparams& hyper, bool use_buffer, const RunOptions& opts) {
  Driver d(tl, hyper, opts, use_buffer ? "ll" : "ll_norb");
  const auto it_win = hyper.init_window;

  auto s = d.begin_step(it_win);
  auto model = d.fit_step(d.fresh_model(), build_init_sets(tl.groups, tl.ledger, it_win, hyper.valid_window), s);
  d.score(std::move(s), &model);

  ReplayBuffer buffer(hyper.rb_window);
  auto sample_group = [&](std::size_t g) {
    const auto pool = pool_points(tl.group(g), tl.ledger, Pool::train);
    buffer.push(sample_balanced(pool, hyper.rb_size, hyper.group_size, hyper.seed, g), g);
  };
  if (use_buffer) {
    for (std::size_t g = it_win >= hyper.rb_window ? it_win - hyper.rb_window + 1 : 1; g <= it_win; ++g) sample_group(g);
  }

  for (std::size_t t = it_win + 1; t <= d.last_step(); ++t) {
    const Points replay = use_buffer ? buffer.advance(t) : Points{};
    const auto sets = build_update_sets(tl.groups, tl.ledger, t, hyper.valid_window, replay);
    s = d.begin_step(t);
    if (has_both_classes(sets.valid)) {
      model = d.fit_step(model, sets, s);
    } else {
      s.skipped = true;
      s.degenerate_validation = true;
    }
    if (use_buffer) sample_group(t);
    d.score(std::move(s), &model);
  }
  std::ostringstream desc;
  if (use_buffer) desc << "every group, replay RBSize=" << hyper.rb_size << " RBWin=" << hyper.rb_window;
  else desc << "every group, no replay";
  return d.finish(desc.str());
}

Schedule Schedule::periodic(std::size_t groups) {
  Schedule s;
  s.kind = Kind::periodic_groups;
  s.period_groups = groups;
  return s;
}

Schedule Schedule::every_days(double days) {
  Schedule s;
  s.kind = Kind::periodic_days;
  s.period_days = days;
  return s;
}

Schedule Schedule::decay(double rho, std::size_t window) {
  Schedule s;
  s.kind = Kind::decay;
  s.rho = rho;
  s.window = window;
  return s;
}

Schedule Schedule::frozen() {
  Schedule s;
  s.kind = Kind::frozen;
  return s;
}

void Schedule::validate() const {
  switch (kind) {
    case Kind::periodic_groups:
      if (period_groups < 1) throw std::invalid_argument("schedule: period must be >= 1 group");
      break;
    case Kind::periodic_days:
      if (!(period_days > 0.0)) throw std::invalid_argument("schedule: period must be > 0 days");
      break;
    case Kind::decay:
      if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("schedule: decay rho must lie in (0, 1]");
      if (window < 1) throw std::invalid_argument("schedule: decay window must be >= 1");
      break;
    case Kind::frozen:
      break;
  }
}

std::string Schedule::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::periodic_groups: os << "periodic(groups=" << period_groups << ")"; break;
    case Kind::periodic_days: os << "periodic(days=" << period_days << ")"; break;
    case Kind::decay: os << "decay(rho=" << rho << ",k=" << window << ")"; break;
    case Kind::frozen: os << "frozen"; break;
  }
  return os.str();
}

RunRecord run_scheduled(const Timeline& tl, const Hyperparams& hyper, const Schedule& schedule,
                        const RunOptions& opts) {
  schedule.validate();
  std::string name;
  switch (schedule.kind) {
    case Schedule::Kind::periodic_groups: name = "periodic"; break;
    case Schedule::Kind::periodic_days: name = "periodic_days"; break;
    case Schedule::Kind::decay: name = "decay"; break;
    case Schedule::Kind::frozen: name = "frozen"; break;
  }
  Driver d(tl, hyper, opts, name);
  const auto it_win = hyper.init_window;

  std::optional<Mlp<double>> model;
  std::size_t last_fit = 0;
  double reference_f1 = 0;
  bool awaiting_reference = false;
  std::vector<double> scored_f1;  // F1 of groups scored by the current model

  for (std::size_t t = it_win; t <= d.last_step(); ++t) {
    bool fire = !model.has_value();
    if (!fire) {
      switch (schedule.kind) {
        case Schedule::Kind::periodic_groups:
          fire = (t - it_win) % schedule.period_groups == 0;
          break;
        case Schedule::Kind::periodic_days: {
          const auto now = last_time(tl.group(t));
          const auto then = last_time(tl.group(last_fit));
          if (!now || !then) throw std::invalid_argument("day-based schedule needs timestamps");
          fire = static_cast<double>(*now - *then) >= schedule.period_days * 86400.0;
          break;
        }
        case Schedule::Kind::decay: {
          if (!scored_f1.empty()) {
            const auto k = std::min(schedule.window, scored_f1.size());
            double m = 0;
            for (std::size_t i = scored_f1.size() - k; i < scored_f1.size(); ++i) m += scored_f1[i];
            fire = m / static_cast<double>(k) < schedule.rho * reference_f1;
          }
          break;
        }
        case Schedule::Kind::frozen:
          break;
      }
    }

    auto s = d.begin_step(t);
    if (fire) {
      const auto sets = build_init_sets(tl.groups, tl.ledger, t, hyper.valid_window);
      if (model && !has_both_classes(sets.valid)) {
        s.skipped = true;
        s.degenerate_validation = true;
      } else {
        model = d.fit_step(d.fresh_model(), sets, s);
        last_fit = t;
        scored_f1.clear();
        awaiting_reference = true;
      }
    }
    d.score(std::move(s), &*model);
    const double f1 = f1_score(d.record().steps.back().confusion);
    scored_f1.push_back(f1);
    if (awaiting_reference) {
      reference_f1 = f1;
      awaiting_reference = false;
    }
  }
  return d.finish(schedule.describe());
}

RunRecord run_rfs(const Timeline& tl, const Hyperparams& hyper, const RunOptions& opts) {
  auto rec = run_scheduled(tl, hyper, Schedule::periodic(1), opts);
  rec.setup = "rfs";
  rec.schedule = "every group, all train pools so far";
  return rec;
}

RunRecord run_naive_positive(const Timeline& tl, const Hyperparams& hyper, const RunOptions& opts) {
  RunOptions plain = opts;
  plain.track_importance = false;
  Driver d(tl, hyper, plain, "naive");
  for (std::size_t t = hyper.init_window; t <= d.last_step(); ++t) d.score(d.begin_step(t), nullptr);
  return d.finish("always positive");
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& setup) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("setup '" + setup + "': bad number '" + s + "'");
  }
}

std::optional<Schedule> parse_schedule(const std::string& setup) {
  const auto parts = split(setup, ':');
  if (parts.empty()) return std::nullopt;
  const auto& head = parts[0];
  if (head == "frozen" && parts.size() == 1) return Schedule::frozen();
  if (head == "weekly" && parts.size() == 1) return Schedule::every_days(7);
  if (head == "periodic" && parts.size() == 2) {
    const double g = parse_number(parts[1], setup);
    if (g < 1 || g != std::floor(g)) throw std::invalid_argument("setup '" + setup + "': period must be a positive integer");
    return Schedule::periodic(static_cast<std::size_t>(g));
  }
  if (head == "days" && parts.size() == 2) return Schedule::every_days(parse_number(parts[1], setup));
  if (head == "decay" && parts.size() == 1) return Schedule::decay();
  if (head == "decay" && parts.size() == 3) {
    const double k = parse_number(parts[2], setup);
    if (k < 1 || k != std::floor(k)) throw std::invalid_argument("setup '" + setup + "': window must be a positive integer");
    return Schedule::decay(parse_number(parts[1], setup), static_cast<std::size_t>(k));
  }
  return std::nullopt;
}

}  // namespace

void check_setup_name(const std::string& setup) {
  if (setup == "ll" || setup == "ll_norb" || setup == "rfs" || setup == "naive") return;
  const auto sched = parse_schedule(setup);
  if (!sched) throw std::invalid_argument("unknown setup '" + setup + "'");
  sched->validate();
}

RunRecord run_setup(const Timeline& tl, const Hyperparams& hyper, const std::string& setup, const RunOptions& opts) {
  if (setup == "ll") return run_ll(tl, hyper, true, opts);
  if (setup == "ll_norb") return run_ll(tl, hyper, false, opts);
  if (setup == "rfs") return run_rfs(tl, hyper, opts);
  if (setup == "naive") return run_naive_positive(tl, hyper, opts);
  const auto sched = parse_schedule(setup);
  if (!sched) throw std::invalid_argument("unknown setup '" + setup + "'");
  auto rec = run_scheduled(tl, hyper, *sched, opts);
  rec.setup = setup;
  return rec;
}

std::vector<SweepEntry> sweep(const Points& stream, std::span<const Hyperparams> grid, std::size_t runs_per_config,
                              bool use_buffer, unsigned threads) {
  if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
  if (runs_per_config < 1) throw std::invalid_argument("sweep: runs_per_config must be >= 1");
  for (const auto& h : grid) h.validate();

  std::vector<SweepEntry> entries(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    entries[i].hyper = grid[i];
    entries[i].update_size_gs = theoretical_sizes(grid[i]).update_size_gs;
    entries[i].runs.resize(runs_per_config);
  }

  const std::size_t jobs = grid.size() * runs_per_config;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      try {
        const auto c = j / runs_per_config;
        const auto r = j % runs_per_config;
        auto h = grid[c];
        h.seed = grid[c].seed + r;
        const auto tl = make_timeline(stream, h);
        entries[c].runs[r] = run_ll(tl, h, use_buffer);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  for (auto& e : entries) {
    double sum = 0;
    for (const auto& r : e.runs) sum += mean_validation_f1(r);
    e.mean_valid_f1 = sum / static_cast<double>(e.runs.size());
  }
  std::stable_sort(entries.begin(), entries.end(), [](const SweepEntry& a, const SweepEntry& b) {
    if (a.mean_valid_f1 != b.mean_valid_f1) return a.mean_valid_f1 > b.mean_valid_f1;
    return a.update_size_gs < b.update_size_gs;
  });
  return entries;
}

}  // namespace lifelong
