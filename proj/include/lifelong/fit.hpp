#pragma once
// Mini-batch Adam training with best-epoch checkpointing on validation F1.

#include "lifelong/adam.hpp"
#include "lifelong/metrics.hpp"
#include "lifelong/mlp.hpp"
#include "lifelong/random.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lifelong {

template <typename Scalar>
struct LabeledData {
  Matrix<Scalar> features;  // rows = samples
  Vector<Scalar> labels;    // 0 / 1

  Eigen::Index rows() const { return features.rows(); }
  bool empty() const { return features.rows() == 0; }
  bool has_both_classes() const {
    bool pos = false;
    bool neg = false;
    for (Eigen::Index i = 0; i < labels.size(); ++i) (labels(i) != Scalar(0) ? pos : neg) = true;
    return pos && neg;
  }
};

struct TrainOptions {
  double lr = 1e-3;
  int epochs = 50;
  int minibatch = 20;
  double threshold = 0.5;
  std::uint64_t seed = 0;
};

struct FitReport {
  std::vector<double> train_loss;  // full training-set loss at the end of each epoch
  std::vector<double> valid_loss;
  std::vector<double> valid_f1;
  std::optional<std::size_t> best_epoch;  // 0-based; empty when no epoch ran
  std::uint64_t version = 0;               // version of the returned model
  bool degenerate_validation = false;      // single-class validation, selection by loss

  double best_valid_f1() const { return best_epoch ? valid_f1[*best_epoch] : 0.0; }
  friend bool operator==(const FitReport&, const FitReport&) = default;
};

template <typename Scalar>
struct FitResult {
  Mlp<Scalar> model;
  FitReport report;
};

/// Trains a copy of `model` for `opts.epochs` epochs and returns the epoch
/// checkpoint with the highest validation F1 (earliest on ties). A single-class
/// validation set selects by lowest validation loss instead and is flagged.
/// The shuffle stream is derived from `opts.seed` and the input model version.
template <typename Scalar>
FitResult<Scalar> fit(const Mlp<Scalar>& model, const LabeledData<Scalar>& train, const LabeledData<Scalar>& valid,
                      const TrainOptions& opts) {
  if (opts.epochs < 0) throw std::invalid_argument("fit: negative epoch count");
  if (opts.epochs == 0) {
    FitResult<Scalar> same{model, {}};
    same.report.version = model.version();
    return same;
  }
  if (opts.minibatch < 1) throw std::invalid_argument("fit: minibatch must be >= 1");
  if (train.empty() || valid.empty()) throw std::invalid_argument("fit: empty training or validation set");
  if (train.features.cols() != model.input_dim() || valid.features.cols() != model.input_dim()) {
    throw std::invalid_argument("fit: feature dimension does not match the model");
  }

  FitReport report;
  report.degenerate_validation = !valid.has_both_classes();

  Mlp<Scalar> work = model;
  auto state = make_adam_state(work, static_cast<Scalar>(opts.lr));
  std::mt19937_64 rng(derive_seed(opts.seed, {model.version()}));

  const auto n = train.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  std::vector<int> valid_truth(static_cast<std::size_t>(valid.rows()));
  for (Eigen::Index i = 0; i < valid.rows(); ++i) valid_truth[static_cast<std::size_t>(i)] = valid.labels(i) != 0;

  Mlp<Scalar> best = work;
  double best_score = -std::numeric_limits<double>::infinity();
  const auto batch = static_cast<Eigen::Index>(opts.minibatch);

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const auto len = std::min(batch, n - start);
      std::vector<Eigen::Index> idx(order.begin() + start, order.begin() + start + len);
      const Matrix<Scalar> xb = train.features(idx, Eigen::all);
      const Vector<Scalar> yb = train.labels(idx);
      const auto lg = loss_and_grad<Scalar>(work, xb, yb, false);
      adam_step(work, lg.grads, state);
    }
    if (!all_finite(work.layers())) throw std::runtime_error("fit: parameters diverged to non-finite values");

    report.train_loss.push_back(static_cast<double>(bce_loss<Scalar>(work, train.features, train.labels)));
    const auto prob = forward<Scalar>(work, valid.features);
    double vloss = 0;
    std::vector<int> pred(valid_truth.size());
    for (Eigen::Index i = 0; i < prob.size(); ++i) {
      const double p = static_cast<double>(prob(i));
      const double y = static_cast<double>(valid.labels(i));
      vloss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
      pred[static_cast<std::size_t>(i)] = p >= opts.threshold ? 1 : 0;
    }
    vloss /= static_cast<double>(prob.size());
    const double vf1 = f1_score(confusion_from(valid_truth, pred));
    report.valid_loss.push_back(vloss);
    report.valid_f1.push_back(vf1);

    const double score = report.degenerate_validation ? -vloss : vf1;
    if (score > best_score) {
      best_score = score;
      best = work;
      report.best_epoch = static_cast<std::size_t>(epoch);
    }
  }
  best.set_version(model.version() + 1);
  report.version = best.version();
  return {std::move(best), std::move(report)};
}

}  // namespace lifelong
