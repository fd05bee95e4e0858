#pragma once
// Full timelines for each training setup: lifelong learning with and without a
// replay buffer, retraining from scratch on several schedules, and the naive
// always-positive predictor. All setups score group t+1 with a model trained on
// data from groups <= t only.

#include "lifelong/run_record.hpp"
#include "lifelong/stream.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lifelong {

struct RunOptions {
  bool track_importance = false;  // fills RunRecord::importance on the validation window
  bool audit = false;             // keeps per-fit ids for audit_violation()
};

/// Groups and pools for `points` under the grouping/sampling knobs of `hyper`.
Timeline make_timeline(Points points, const Hyperparams& hyper);

/// Initial fit on groups 1..ITWin, then one incremental fit per group starting from
/// the current weights. An update whose validation window holds a single class is
/// skipped and the previous model carries over.
RunRecord run_ll(const Timeline& timeline, const Hyperparams& hyper, bool use_buffer, const RunOptions& opts = {});

/// A fresh model at every step, trained on the train pools of all groups so far.
RunRecord run_rfs(const Timeline& timeline, const Hyperparams& hyper, const RunOptions& opts = {});

struct Schedule {
  enum class Kind { periodic_groups, periodic_days, decay, frozen };
  Kind kind = Kind::periodic_groups;
  std::size_t period_groups = 1;
  double period_days = 7;
  double rho = 0.9;
  std::size_t window = 3;

  static Schedule periodic(std::size_t groups);
  static Schedule every_days(double days);
  static Schedule decay(double rho = 0.9, std::size_t window = 3);
  static Schedule frozen();

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
  std::string describe() const;
};

/// Retrain-from-scratch only when `schedule` fires; the last model keeps scoring
/// in between. Decay fires when the mean F1 of the last `window` groups scored by
/// the current model drops below rho times the F1 on the first group it scored.
RunRecord run_scheduled(const Timeline& timeline, const Hyperparams& hyper, const Schedule& schedule,
                        const RunOptions& opts = {});

/// Predicts the positive class everywhere; no training.
RunRecord run_naive_positive(const Timeline& timeline, const Hyperparams& hyper, const RunOptions& opts = {});

/// Setup names accepted by run_setup: ll, ll_norb, rfs, naive, frozen,
/// periodic:<groups>, weekly (periodic:7d), days:<n>, decay[:rho:window].
RunRecord run_setup(const Timeline& timeline, const Hyperparams& hyper, const std::string& setup,
                    const RunOptions& opts = {});

/// Throws std::invalid_argument for an unknown setup name.
void check_setup_name(const std::string& setup);

struct SweepEntry {
  Hyperparams hyper;
  double mean_valid_f1 = 0;
  double update_size_gs = 0;
  std::vector<RunRecord> runs;
};

/// Runs every config `runs_per_config` times (seeds hyper.seed + r, each with its own
/// timeline) and ranks by mean validation F1, ties to the smaller update size.
std::vector<SweepEntry> sweep(const Points& stream, std::span<const Hyperparams> grid,
                              std::size_t runs_per_config = 4, bool use_buffer = true, unsigned threads = 0);

}  // namespace lifelong
