// Command-line front end: generate, run, compare, sweep, report.
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include "lifelong/config.hpp"
#include "lifelong/effort.hpp"
#include "lifelong/importance.hpp"
#include "lifelong/io.hpp"
#include "lifelong/orchestrator.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

using namespace lifelong;
using nlohmann::json;

namespace {

// Flag values collected by CLI11; only flags given on the command line are applied.
struct Overrides {
  std::string config;
  std::string dataset;
  std::string output_dir;
  std::vector<std::string> setups;
  std::vector<std::uint64_t> seeds;
  std::size_t runs_per_config = 0;
  double alpha = 0;
  unsigned threads = 0;
  bool track_importance = false;
  bool audit = false;

  std::size_t gs = 0, itwin = 0, vwin = 0, rbwin = 0;
  double rbsize = 0, lr = 0, valid_fraction = 0, threshold = 0;
  int epochs = 0, minibatch = 0;
  std::vector<Eigen::Index> hidden;
  std::uint64_t seed = 0;

  std::size_t n = 0, dim = 0;
  double positive_rate = 0, noise = 0, points_per_day = 0;
  std::string drift;
  std::size_t at = 0, start = 0, length = 0, period = 0;
  std::uint64_t stream_seed = 0;
};

void add_hyper_flags(CLI::App* app, Overrides& o) {
  app->add_option("--GS", o.gs, "Time-group size");
  app->add_option("--ITWin", o.itwin, "Initial training window (groups)");
  app->add_option("--VWin", o.vwin, "Validation window (groups)");
  app->add_option("--RBSize", o.rbsize, "Replay sample per group, percent of GS");
  app->add_option("--RBWin", o.rbwin, "Replay buffer window (groups)");
  app->add_option("--lr", o.lr, "Adam learning rate");
  app->add_option("--epochs", o.epochs, "Epochs per fit");
  app->add_option("--minibatch", o.minibatch, "Mini-batch size");
  app->add_option("--hidden", o.hidden, "Hidden layer widths");
  app->add_option("--valid-fraction", o.valid_fraction, "Share of each group kept for validation");
  app->add_option("--threshold", o.threshold, "Decision threshold");
  app->add_option("--seed", o.seed, "Base seed");
}

void add_stream_flags(CLI::App* app, Overrides& o) {
  app->add_option("--n", o.n, "Stream length");
  app->add_option("--dim", o.dim, "Feature count");
  app->add_option("--positive-rate", o.positive_rate, "Target positive rate");
  app->add_option("--noise", o.noise, "Label flip probability");
  app->add_option("--drift", o.drift, "none|sudden|gradual|incremental|recurrent")
      ->check(CLI::IsMember({"none", "sudden", "gradual", "incremental", "recurrent"}));
  app->add_option("--at", o.at, "Sudden drift position");
  app->add_option("--start", o.start, "Gradual/incremental drift start");
  app->add_option("--length", o.length, "Gradual/incremental drift length");
  app->add_option("--period", o.period, "Recurrent drift period (points)");
  app->add_option("--points-per-day", o.points_per_day, "Emit timestamps at this rate");
  app->add_option("--stream-seed", o.stream_seed, "Generator seed");
}

void add_experiment_flags(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--dataset", o.dataset, "Dataset CSV instead of a generated stream")->check(CLI::ExistingFile);
  app->add_option("-o,--output-dir", o.output_dir, "Output directory");
  app->add_option("--seeds", o.seeds, "Run seeds");
  app->add_option("--threads", o.threads, "Worker threads (0: all cores)");
  app->add_option("--alpha", o.alpha, "Significance level");
  app->add_flag("--track-importance", o.track_importance, "Record feature importance per step");
  app->add_flag("--audit", o.audit, "Record ids of every fit for the prequential audit");
  add_hyper_flags(app, o);
  add_stream_flags(app, o);
}

bool given(const CLI::App* app, const std::string& flag) {
  const auto* opt = app->get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

StreamSpec apply_stream(const CLI::App* app, const Overrides& o, StreamSpec s) {
  if (given(app, "--n")) s.n = o.n;
  if (given(app, "--dim")) s.dim = o.dim;
  if (given(app, "--positive-rate")) s.positive_rate = o.positive_rate;
  if (given(app, "--noise")) s.noise = o.noise;
  if (given(app, "--points-per-day")) s.points_per_day = o.points_per_day;
  if (given(app, "--stream-seed")) s.seed = o.stream_seed;
  if (given(app, "--drift")) {
    if (o.drift == "none") s.drift = drift::None{};
    else if (o.drift == "sudden") s.drift = drift::Sudden{o.at};
    else if (o.drift == "gradual") s.drift = drift::Gradual{o.start, std::max<std::size_t>(o.length, 1)};
    else if (o.drift == "incremental") s.drift = drift::Incremental{o.start, std::max<std::size_t>(o.length, 1)};
    else s.drift = drift::Recurrent{std::max<std::size_t>(o.period, 1)};
  }
  return s;
}

bool any_stream_flag(const CLI::App* app) {
  for (const char* f : {"--n", "--dim", "--positive-rate", "--noise", "--drift", "--points-per-day", "--stream-seed"}) {
    if (given(app, f)) return true;
  }
  return false;
}

// Precedence: built-in defaults < config file < command-line flags.
ExperimentConfig resolve(const CLI::App* app, const Overrides& o) {
  ExperimentConfig c;
  if (!o.config.empty()) c = load_config(o.config);
  auto& h = c.hyper;
  if (given(app, "--GS")) h.group_size = o.gs;
  if (given(app, "--ITWin")) h.init_window = o.itwin;
  if (given(app, "--VWin")) h.valid_window = o.vwin;
  if (given(app, "--RBSize")) h.rb_size = o.rbsize;
  if (given(app, "--RBWin")) h.rb_window = o.rbwin;
  if (given(app, "--lr")) h.lr = o.lr;
  if (given(app, "--epochs")) h.epochs = o.epochs;
  if (given(app, "--minibatch")) h.minibatch = o.minibatch;
  if (given(app, "--hidden")) h.hidden = o.hidden;
  if (given(app, "--valid-fraction")) h.valid_fraction = o.valid_fraction;
  if (given(app, "--threshold")) h.threshold = o.threshold;
  if (given(app, "--seed")) h.seed = o.seed;
  if (given(app, "--dataset")) {
    c.dataset = o.dataset;
    c.stream.reset();
  }
  if (any_stream_flag(app)) {
    c.stream = apply_stream(app, o, c.stream.value_or(StreamSpec{}));
    c.dataset.reset();
  }
  if (given(app, "--setup")) c.setups = o.setups;
  if (given(app, "--seeds")) c.seeds = o.seeds;
  if (given(app, "--output-dir")) c.output_dir = o.output_dir;
  if (given(app, "--runs-per-config")) c.runs_per_config = o.runs_per_config;
  if (given(app, "--alpha")) c.alpha = o.alpha;
  if (given(app, "--threads")) c.threads = o.threads;
  if (o.track_importance) c.track_importance = true;
  if (o.audit) c.audit = true;
  if (!c.stream && !c.dataset) c.stream = StreamSpec{};
  c.validate();
  return c;
}

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string safe_name(std::string s) {
  for (char& ch : s) {
    if (ch == ':' || ch == '/') ch = '_';
  }
  return s;
}

struct Job {
  std::string setup;
  std::uint64_t seed;
};

// Runs every (setup, seed) pair on a small worker pool; each run writes its own
// directory <output_dir>/<setup>/seed_<s>.
std::map<std::string, std::vector<RunRecord>> execute(const ExperimentConfig& cfg) {
  std::vector<Job> jobs;
  for (const auto& s : cfg.setups) {
    for (auto seed : cfg.seeds) jobs.push_back({s, seed});
  }
  std::vector<RunRecord> results(jobs.size());
  std::map<std::uint64_t, Points> sources;
  for (auto seed : cfg.seeds) {
    if (!sources.count(seed)) sources.emplace(seed, source_points(cfg, seed));
  }
  const json echo = config_to_json(cfg);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        auto hyper = cfg.hyper;
        hyper.seed = jobs[i].seed;
        const auto tl = make_timeline(sources.at(jobs[i].seed), hyper);
        results[i] = run_setup(tl, hyper, jobs[i].setup, {cfg.track_importance, cfg.audit});
        persist_run(results[i], cfg.output_dir / safe_name(jobs[i].setup) / ("seed_" + std::to_string(jobs[i].seed)),
                    echo);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned n = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::map<std::string, std::vector<RunRecord>> by_setup;
  for (std::size_t i = 0; i < jobs.size(); ++i) by_setup[jobs[i].setup].push_back(std::move(results[i]));
  return by_setup;
}

void check_audits(const std::map<std::string, std::vector<RunRecord>>& runs) {
  for (const auto& [setup, rs] : runs) {
    for (const auto& r : rs) {
      if (auto v = audit_violation(r)) throw std::runtime_error("audit failed for " + setup + ": " + *v);
    }
  }
}

int cmd_generate(const CLI::App* app, const Overrides& o, const std::string& out) {
  StreamSpec spec;
  if (!o.config.empty()) {
    const auto cfg = load_config(o.config);
    if (!cfg.stream) throw ValidationError("generate: config has no 'stream' section");
    spec = *cfg.stream;
  }
  spec = apply_stream(app, o, spec);
  const auto points = generate_stream(spec);
  if (out.empty() || out == "-") {
    write_dataset(std::cout, points);
  } else {
    save_dataset(out, points);
    const auto s = summarize(points);
    std::cerr << "wrote " << s.n << " points, d=" << s.dim << ", positive rate " << fmt(s.positive_rate) << ", drift "
              << drift_name(spec.drift) << " -> " << out << '\n';
  }
  return 0;
}

void print_run_line(const RunRecord& r) {
  const auto a = aggregate(r);
  std::cout << r.setup << "  seed " << r.hyper.seed << "  steps " << r.steps.size() << "  fits " << r.fit_count()
            << "  F1 " << fmt(a.pooled.f1) << "  G-mean " << fmt(a.pooled.gmean) << '\n';
}

int cmd_run(const ExperimentConfig& cfg) {
  const auto runs = execute(cfg);
  if (cfg.audit) check_audits(runs);
  for (const auto& [setup, rs] : runs) {
    for (const auto& r : rs) print_run_line(r);
  }
  std::cout << "records under " << cfg.output_dir.string() << '\n';
  return 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
  if (cfg.setups.size() < 2) throw ValidationError("compare: needs at least two setups");
  if (cfg.seeds.size() < 2) throw ValidationError("compare: needs at least two seeds");
  const auto runs = execute(cfg);
  if (cfg.audit) check_audits(runs);
  const auto& ref_name = cfg.setups.front();
  const auto& ref = runs.at(ref_name);
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream csv(cfg.output_dir / "compare.csv");
  csv << "setup,reference,metric,median,reference_median,h,p,exact,significant,delta,magnitude,mark\n";
  std::printf("%-16s %8s %8s   vs %s (alpha %.3g)\n", "setup", "F1", "G-mean", ref_name.c_str(), cfg.alpha);
  for (const auto& setup : cfg.setups) {
    const auto& rs = runs.at(setup);
    std::vector<double> f1, gm;
    for (const auto& r : rs) {
      f1.push_back(run_metric(r, RunMetric::f1));
      gm.push_back(run_metric(r, RunMetric::gmean));
    }
    std::string marks;
    if (setup != ref_name) {
      for (auto [metric, name] : {std::pair{RunMetric::f1, "f1"}, std::pair{RunMetric::gmean, "gmean"}}) {
        const auto s = compare_runs(rs, ref, metric, cfg.alpha);
        std::vector<double> mine, theirs;
        for (const auto& r : rs) mine.push_back(run_metric(r, metric));
        for (const auto& r : ref) theirs.push_back(run_metric(r, metric));
        csv << setup << ',' << ref_name << ',' << name << ',' << median(mine) << ',' << median(theirs) << ',' << s.h
            << ',' << s.p << ',' << s.exact << ',' << s.significant << ',' << s.delta << ','
            << to_string(s.magnitude) << ',' << s.mark() << '\n';
        marks += std::string(marks.empty() ? "" : " ") + s.mark();
      }
    }
    std::printf("%-16s %8.3f %8.3f   %s\n", setup.c_str(), median(f1), median(gm), marks.c_str());
  }
  std::cout << "\"/\" not significant, \"+\" significant with large effect; table in "
            << (cfg.output_dir / "compare.csv").string() << '\n';
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  const auto grid = expand_grid(cfg);
  const auto points = source_points(cfg, cfg.seeds.front());
  const auto ranked = sweep(points, grid, cfg.runs_per_config, true, cfg.threads);
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream csv(cfg.output_dir / "sweep.csv");
  csv << "rank,GS,ITWin,VWin,RBSize,RBWin,lr,epochs,minibatch,mean_valid_f1,update_size_gs\n";
  std::printf("%4s %6s %6s %5s %7s %6s %10s %8s\n", "rank", "GS", "ITWin", "VWin", "RBSize", "RBWin", "valid F1",
              "update");
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& e = ranked[i];
    const auto& h = e.hyper;
    csv << i + 1 << ',' << h.group_size << ',' << h.init_window << ',' << h.valid_window << ',' << h.rb_size << ','
        << h.rb_window << ',' << h.lr << ',' << h.epochs << ',' << h.minibatch << ',' << e.mean_valid_f1 << ','
        << e.update_size_gs << '\n';
    std::printf("%4zu %6zu %6zu %5zu %7.3g %6zu %10.4f %7.2fGS\n", i + 1, h.group_size, h.init_window, h.valid_window,
                h.rb_size, h.rb_window, e.mean_valid_f1, e.update_size_gs);
    for (std::size_t r = 0; r < e.runs.size(); ++r) {
      persist_run(e.runs[r], cfg.output_dir / ("config_" + std::to_string(i + 1)) / ("run_" + std::to_string(r)),
                  config_to_json(cfg));
    }
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& run_paths, const std::string& reference, std::size_t top_k,
               const std::string& out_dir) {
  std::vector<RunRecord> runs;
  for (const auto& p : run_paths) runs.push_back(load_run(p));
  std::optional<RunRecord> ref;
  if (!reference.empty()) ref = load_run(reference);

  std::ofstream effort_csv, imp_csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    effort_csv.open(std::filesystem::path(out_dir) / "effort.csv");
  }
  std::printf("%-14s %6s %10s %10s %10s %10s %10s %9s\n", "setup", "fits", "med life", "mean life", "med train",
              "coef", "coef_rel", "rel_mean");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    const auto e = ref ? effort_report(r, *ref) : effort_of(r);
    const char* unit = e.life_in_days ? "d" : "pt";
    std::printf("%-14s %6zu %9.2f%s %9.2f%s %10.1f %10.3f %10.3f %9.3f\n", r.setup.c_str(), r.fit_count(),
                e.median_life, unit, e.mean_life, unit, e.median_train, e.coef, e.coef_rel, e.coef_rel_mean);
    if (effort_csv.is_open()) {
      std::ostringstream row;
      write_effort_csv(row, r, ref ? &*ref : nullptr);
      auto text = row.str();
      if (i > 0) text = text.substr(text.find('\n') + 1);
      effort_csv << text;
    }
  }

  std::vector<const RunRecord*> with_imp;
  for (const auto& r : runs) {
    if (r.importance) with_imp.push_back(&r);
  }
  for (const auto* r : with_imp) {
    const auto top = top_features(*r->importance, top_k);
    const MatrixXd codes = discretize_importance(*r->importance);
    std::cout << "\nimportance of " << r->setup << " (" << kImportanceMethod << "), top " << top.size() << ":\n";
    for (auto f : top) {
      std::cout << "  f" << f << "  ";
      for (Eigen::Index c = 0; c < codes.cols(); ++c) {
        std::cout << (codes(f, c) > 0 ? '+' : codes(f, c) < 0 ? '-' : '.');
      }
      std::cout << '\n';
    }
    if (!out_dir.empty()) {
      std::ofstream o(std::filesystem::path(out_dir) / ("importance_" + safe_name(r->setup) + ".csv"));
      write_importance_csv(o, *r->importance);
    }
  }
  if (with_imp.size() >= 2 && with_imp[0]->importance->rows() == with_imp[1]->importance->rows()) {
    const auto v = variance_report(*with_imp[0]->importance, *with_imp[1]->importance);
    std::printf("\nvariance %s vs %s: raw %.1f%% / %.1f%% / %.1f%% same, discretized %.1f%% / %.1f%% / %.1f%% same\n",
                with_imp[0]->setup.c_str(), with_imp[1]->setup.c_str(), v.raw.higher_a, v.raw.higher_b, v.raw.same,
                v.discretized.higher_a, v.discretized.higher_b, v.discretized.same);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifelong learning versus retraining on drifting binary streams"};
  app.require_subcommand(1);

  Overrides o;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Write a synthetic drifting stream as dataset CSV");
  gen->add_option("-c,--config", o.config, "Config whose 'stream' section is used")->check(CLI::ExistingFile);
  gen->add_option("-o,--out", gen_out, "Output CSV ('-' for stdout)");
  add_stream_flags(gen, o);

  auto* run = app.add_subcommand("run", "Run setups for every seed and persist the records");
  add_experiment_flags(run, o);
  run->add_option("--setup", o.setups, "Setup names (ll, ll_norb, rfs, naive, frozen, periodic:N, weekly, days:N, decay)");

  auto* cmp = app.add_subcommand("compare", "Run several setups and test them against the first one");
  add_experiment_flags(cmp, o);
  cmp->add_option("--setup", o.setups, "Setup names; the first is the reference");

  auto* swp = app.add_subcommand("sweep", "Rank the hyperparameter grid of a config by validation F1");
  add_experiment_flags(swp, o);
  swp->add_option("--runs-per-config", o.runs_per_config, "Runs per grid point");

  std::vector<std::string> report_runs;
  std::string report_ref, report_out;
  std::size_t top_k = 10;
  auto* rep = app.add_subcommand("report", "Effort and importance tables of persisted runs");
  rep->add_option("runs", report_runs, "Run directories or run.json files")->required();
  rep->add_option("--reference", report_ref, "LL run used as effort reference");
  rep->add_option("--top", top_k, "Features listed per importance table");
  rep->add_option("-o,--output-dir", report_out, "Write effort.csv and importance CSVs here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(gen, o, gen_out);
    if (*run) return cmd_run(resolve(run, o));
    if (*cmp) return cmd_compare(resolve(cmp, o));
    if (*swp) return cmd_sweep(resolve(swp, o));
    if (*rep) return cmd_report(report_runs, report_ref, top_k, report_out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
