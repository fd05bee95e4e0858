#pragma once

#include "lifelong/fit.hpp"
#include "lifelong/metrics.hpp"
#include "lifelong/mlp.hpp"
#include "lifelong/stats.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lifelong {

/// Knobs of one experiment. Window sizes count time groups; rb_size is a
/// percentage of the group size.
struct Hyperparams {
  std::size_t group_size = 50;    // GS
  std::size_t init_window = 15;   // ITWin
  std::size_t valid_window = 15;  // VWin
  double rb_size = 10;            // RBSize
  std::size_t rb_window = 8;      // RBWin
  double lr = 1e-3;
  int epochs = 50;
  int minibatch = 20;
  std::vector<Eigen::Index> hidden{64, 64};
  double valid_fraction = 0.2;
  double threshold = 0.5;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
  std::vector<Eigen::Index> layer_sizes(Eigen::Index input_dim) const;
  TrainOptions train_options() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

struct StepRecord {
  std::size_t step = 0;        // last group available for training
  std::size_t test_group = 0;  // group scored at this step (step + 1)
  Confusion confusion;
  bool updated = false;                // a fit produced the scoring model at this step
  bool skipped = false;                // an update was due but skipped (degenerate validation)
  bool degenerate_validation = false;  // validation window held a single class
  std::size_t train_size = 0;
  std::size_t valid_size = 0;
  double valid_f1 = 0;  // best validation F1 of this step's fit
  std::uint64_t model_version = 0;
  double fit_seconds = 0;
  std::uint64_t position = 0;         // stream points in groups 1..step
  std::optional<std::int64_t> time;   // last timestamp in group `step`
  std::optional<std::int64_t> test_begin;
  std::optional<std::int64_t> test_end;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Ids that entered one fit, kept for prequential audits.
struct FitAudit {
  std::size_t step = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> valid_ids;

  friend bool operator==(const FitAudit&, const FitAudit&) = default;
};

struct RunAudit {
  std::vector<FitAudit> fits;
  std::vector<std::vector<std::string>> test_ids;  // parallel to RunRecord::steps

  friend bool operator==(const RunAudit&, const RunAudit&) = default;
};

struct RunRecord {
  std::string setup;
  std::string schedule;  // human-readable schedule parameters
  Hyperparams hyper;
  std::vector<StepRecord> steps;
  std::optional<MatrixXd> importance;  // features x steps
  std::optional<RunAudit> audit;

  std::vector<Confusion> confusions() const;
  std::size_t fit_count() const;

  friend bool operator==(const RunRecord& a, const RunRecord& b);
};

/// Equality on every deterministic field: wall-clock fit durations are ignored.
bool same_outcome(const RunRecord& a, const RunRecord& b);

AggregateMetrics aggregate(const RunRecord& run);

/// Mean of the best validation F1 over every fit of the run.
double mean_validation_f1(const RunRecord& run);

enum class RunMetric { f1, gmean };

/// Per-run pooled metric.
double run_metric(const RunRecord& run, RunMetric metric);

/// Kruskal-Wallis + Cliff's delta over per-run pooled metrics (a against b).
StatResult compare_runs(std::span<const RunRecord> a, std::span<const RunRecord> b, RunMetric metric,
                        double alpha = 0.05);

/// Trainsets only influence the scoring model if they precede the test group:
/// returns a description of the first violation, or nothing. Also checks that no
/// id is ever used both for training and for validation.
std::optional<std::string> audit_violation(const RunRecord& run);

}  // namespace lifelong
