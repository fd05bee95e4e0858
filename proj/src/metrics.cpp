#include "lifelong/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace lifelong {

Confusion confusion_from(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("confusion_from: label and prediction counts differ");
  }
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] != 0;
    const bool p = predicted[i] != 0;
    if (t && p) ++c.tp;
    else if (!t && p) ++c.fp;
    else if (!t && !p) ++c.tn;
    else ++c.fn;
  }
  return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& undefined) {
  undefined = den == 0;
  return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double pre, double rec) { return pre + rec > 0 ? 2.0 * pre * rec / (pre + rec) : 0.0; }

}  // namespace

StepMetrics evaluate(const Confusion& c) {
  if (c.total() == 0) throw std::invalid_argument("evaluate: empty confusion matrix");
  StepMetrics m;
  m.precision = ratio(c.tp, c.tp + c.fp, m.precision_undefined);
  m.recall = ratio(c.tp, c.tp + c.fn, m.recall_undefined);
  m.specificity = ratio(c.tn, c.tn + c.fp, m.specificity_undefined);
  m.f1 = harmonic(m.precision, m.recall);
  m.gmean = std::sqrt(m.recall * m.specificity);
  m.prevalence = static_cast<double>(c.positives()) / static_cast<double>(c.total());
  return m;
}

double f1_score(const Confusion& c) {
  const auto den = 2 * c.tp + c.fp + c.fn;
  return den == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(den);
}

AggregateMetrics aggregate(std::span<const Confusion> steps) {
  if (steps.empty()) throw std::invalid_argument("aggregate: no scored steps");
  AggregateMetrics out;
  Confusion pooled;
  StepMetrics mean;
  for (const auto& c : steps) {
    pooled += c;
    const auto m = evaluate(c);
    mean.precision += m.precision;
    mean.recall += m.recall;
    mean.specificity += m.specificity;
    mean.f1 += m.f1;
    mean.gmean += m.gmean;
    mean.prevalence += m.prevalence;
    mean.precision_undefined = mean.precision_undefined || m.precision_undefined;
    mean.recall_undefined = mean.recall_undefined || m.recall_undefined;
    mean.specificity_undefined = mean.specificity_undefined || m.specificity_undefined;
    out.series.push_back(m);
  }
  const double n = static_cast<double>(steps.size());
  mean.precision /= n;
  mean.recall /= n;
  mean.specificity /= n;
  mean.f1 /= n;
  mean.gmean /= n;
  mean.prevalence /= n;
  out.per_step_mean = mean;
  out.pooled = evaluate(pooled);
  return out;
}

}  // namespace lifelong
