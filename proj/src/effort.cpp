#include "lifelong/effort.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lifelong {

TheoreticalSizes theoretical_sizes(const Hyperparams& hyper) {
  TheoreticalSizes s;
  s.update_size_gs = 1.0 + hyper.rb_size / 100.0 * static_cast<double>(hyper.rb_window);
  s.speedup = static_cast<double>(hyper.init_window) / s.update_size_gs;
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

double mean(const std::vector<double>& v) {
  return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                   : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool fits_have_time(const RunRecord& run) {
  bool any = false;
  for (const auto& s : run.steps) {
    if (!s.updated) continue;
    if (!s.time) return false;
    any = true;
  }
  return any;
}

EffortReport effort_in(const RunRecord& run, bool days) {
  EffortReport r;
  r.life_in_days = days;
  const auto th = theoretical_sizes(run.hyper);
  r.update_size_gs = th.update_size_gs;
  r.speedup = th.speedup;

  std::vector<const StepRecord*> fits;
  for (const auto& s : run.steps) {
    if (s.updated) fits.push_back(&s);
  }
  if (fits.size() < 2) {
    r.coef = r.coef_rel = r.coef_mean = r.coef_rel_mean = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  for (std::size_t i = 1; i < fits.size(); ++i) {
    const double gap = days ? static_cast<double>(*fits[i]->time - *fits[i - 1]->time) / 86400.0
                            : static_cast<double>(fits[i]->position - fits[i - 1]->position);
    r.life_exp.push_back(gap);
    r.train_sizes.push_back(static_cast<double>(fits[i]->train_size));
  }
  r.defined = true;
  r.median_life = median(r.life_exp);
  r.mean_life = mean(r.life_exp);
  double ss = 0;
  for (double v : r.life_exp) ss += (v - r.mean_life) * (v - r.mean_life);
  r.sd_life = std::sqrt(ss / static_cast<double>(r.life_exp.size()));
  r.median_train = median(r.train_sizes);
  r.mean_train = mean(r.train_sizes);
  r.coef = r.median_train / r.median_life;
  r.coef_mean = r.mean_train / r.mean_life;
  r.coef_rel = 1;
  r.coef_rel_mean = 1;
  return r;
}

}  // namespace

EffortReport effort_of(const RunRecord& run) { return effort_in(run, fits_have_time(run)); }

EffortReport effort_report(const RunRecord& run, const RunRecord& reference_ll) {
  const bool days = fits_have_time(run) && fits_have_time(reference_ll);
  auto r = effort_in(run, days);
  const auto ref = effort_in(reference_ll, days);
  if (!r.defined || !ref.defined) {
    r.defined = false;
    r.coef_rel = r.coef_rel_mean = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.coef_rel = r.coef / ref.coef;
  r.coef_rel_mean = r.coef_mean / ref.coef_mean;
  return r;
}

}  // namespace lifelong
