#pragma once
// Computational-effort accounting: model life expectation between updates,
// training-set sizes and the effort coefficient relative to an LL reference run.

#include "lifelong/run_record.hpp"

#include <vector>

namespace lifelong {

struct TheoreticalSizes {
  double update_size_gs = 1;  // 1 + RBSize/100 * RBWin
  double speedup = 1;         // ITWin / update_size_gs
};

TheoreticalSizes theoretical_sizes(const Hyperparams& hyper);

struct EffortReport {
  bool defined = false;       // false when a run has fewer than two fits
  bool life_in_days = false;  // otherwise in stream points
  std::vector<double> life_exp;     // gaps between consecutive fits
  std::vector<double> train_sizes;  // every fit after the first
  double median_life = 0;
  double mean_life = 0;
  double sd_life = 0;
  double median_train = 0;
  double mean_train = 0;
  double coef = 0;           // median_train / median_life
  double coef_rel = 0;       // coef / coef of the reference
  double coef_mean = 0;      // mean_train / mean_life
  double coef_rel_mean = 0;  // coef_mean / coef_mean of the reference
  double update_size_gs = 0;
  double speedup = 0;
};

/// Life expectation and training sizes of `run` alone (coef_rel left at 1).
EffortReport effort_of(const RunRecord& run);

/// Effort of `run` relative to `reference_ll`. Life expectation is measured in days
/// when every fit step of both runs carries a timestamp, else in stream points.
EffortReport effort_report(const RunRecord& run, const RunRecord& reference_ll);

double median(std::vector<double> values);

}  // namespace lifelong
