#include "lifelong/run_record.hpp"

#include <stdexcept>
#include <string>
#include <unordered_set>

namespace lifelong {

void Hyperparams::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("hyperparameters: " + msg); };
  if (group_size < 1) fail("GS must be >= 1");
  if (init_window < 1) fail("ITWin must be >= 1");
  if (valid_window < 1) fail("VWin must be >= 1");
  if (valid_window > init_window) fail("VWin must not exceed ITWin");
  if (!(rb_size >= 0.0 && rb_size <= 100.0)) fail("RBSize must lie in [0, 100]");
  if (rb_window < 1) fail("RBWin must be >= 1");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (epochs < 0) fail("epochs must be >= 0");
  if (minibatch < 1) fail("minibatch must be >= 1");
  for (auto h : hidden) {
    if (h < 1) fail("hidden layer widths must be positive");
  }
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) fail("valid_fraction must lie in (0, 1)");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must lie in (0, 1)");
}

std::vector<Eigen::Index> Hyperparams::layer_sizes(Eigen::Index input_dim) const {
  std::vector<Eigen::Index> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

TrainOptions Hyperparams::train_options() const {
  return TrainOptions{lr, epochs, minibatch, threshold, seed};
}

std::vector<Confusion> RunRecord::confusions() const {
  std::vector<Confusion> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.confusion);
  return out;
}

std::size_t RunRecord::fit_count() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.updated ? 1 : 0;
  return n;
}

namespace {

bool same_importance(const std::optional<MatrixXd>& a, const std::optional<MatrixXd>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return a->rows() == b->rows() && a->cols() == b->cols() && *a == *b;
}

bool same_header(const RunRecord& a, const RunRecord& b) {
  return a.setup == b.setup && a.schedule == b.schedule && a.hyper == b.hyper && a.audit == b.audit &&
         same_importance(a.importance, b.importance) && a.steps.size() == b.steps.size();
}

}  // namespace

bool operator==(const RunRecord& a, const RunRecord& b) { return same_header(a, b) && a.steps == b.steps; }

bool same_outcome(const RunRecord& a, const RunRecord& b) {
  if (!same_header(a, b)) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    auto x = a.steps[i];
    auto y = b.steps[i];
    x.fit_seconds = y.fit_seconds = 0;
    if (!(x == y)) return false;
  }
  return true;
}

AggregateMetrics aggregate(const RunRecord& run) {
  const auto c = run.confusions();
  return aggregate(std::span<const Confusion>(c));
}

double mean_validation_f1(const RunRecord& run) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& s : run.steps) {
    if (!s.updated) continue;
    sum += s.valid_f1;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double run_metric(const RunRecord& run, RunMetric metric) {
  const auto pooled = aggregate(run).pooled;
  return metric == RunMetric::f1 ? pooled.f1 : pooled.gmean;
}

StatResult compare_runs(std::span<const RunRecord> a, std::span<const RunRecord> b, RunMetric metric,
                        double alpha) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("compare_runs: need at least two runs per side");
  std::vector<double> xa;
  std::vector<double> xb;
  for (const auto& r : a) xa.push_back(run_metric(r, metric));
  for (const auto& r : b) xb.push_back(run_metric(r, metric));
  return compare_samples(xa, xb, alpha);
}

std::optional<std::string> audit_violation(const RunRecord& run) {
  if (!run.audit) return "run carries no audit trail";
  const auto& audit = *run.audit;
  if (audit.test_ids.size() != run.steps.size()) return "audit test sets do not match the step count";

  std::unordered_set<std::string> seen_train;
  std::unordered_set<std::string> seen_valid;
  std::unordered_set<std::string> influence;  // every id that entered any fit so far
  std::size_t next_fit = 0;
  for (std::size_t i = 0; i < run.steps.size(); ++i) {
    const auto step = run.steps[i].step;
    while (next_fit < audit.fits.size() && audit.fits[next_fit].step <= step) {
      const auto& f = audit.fits[next_fit];
      for (const auto& id : f.train_ids) {
        if (seen_valid.count(id)) return "point " + id + " used for training after validation";
        seen_train.insert(id);
        influence.insert(id);
      }
      for (const auto& id : f.valid_ids) {
        if (seen_train.count(id)) return "point " + id + " used for validation after training";
        seen_valid.insert(id);
        influence.insert(id);
      }
      ++next_fit;
    }
    for (const auto& id : audit.test_ids[i]) {
      if (influence.count(id)) {
        return "test point " + id + " of group " + std::to_string(run.steps[i].test_group) +
               " influenced the model scoring it";
      }
    }
  }
  if (next_fit != audit.fits.size()) return "audit holds fits after the last scored step";
  return std::nullopt;
}

}  // namespace lifelong
