#pragma once
// Confusion-matrix metrics for the positive class.

#include <cstdint>
#include <span>
#include <vector>

namespace lifelong {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  std::uint64_t positives() const { return tp + fn; }
  std::uint64_t negatives() const { return tn + fp; }

  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

Confusion confusion_from(std::span<const int> truth, std::span<const int> predicted);

struct StepMetrics {
  double precision = 0;
  double recall = 0;
  double specificity = 0;  // recall of the negative class
  double f1 = 0;
  double gmean = 0;
  double prevalence = 0;
  // Set when the corresponding ratio had a zero denominator and was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool specificity_undefined = false;

  friend bool operator==(const StepMetrics&, const StepMetrics&) = default;
};

/// Throws std::invalid_argument on an all-zero confusion.
StepMetrics evaluate(const Confusion& c);

/// Positive-class F1 with the zero-denominator convention; never throws.
double f1_score(const Confusion& c);

struct AggregateMetrics {
  StepMetrics pooled;         // metrics of the summed confusion
  StepMetrics per_step_mean;  // unweighted mean of the per-step metrics
  std::vector<StepMetrics> series;
};

AggregateMetrics aggregate(std::span<const Confusion> steps);

}  // namespace lifelong
