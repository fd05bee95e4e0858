#include "lifelong/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lifelong {

VectorXd compute_importance(const Mlp<double>& model, const MatrixXd& features) {
  if (features.rows() == 0) throw std::invalid_argument("compute_importance: empty sample");
  // Labels do not enter the input gradient; any valid vector will do.
  const VectorXd labels = VectorXd::Zero(features.rows());
  const auto lg = loss_and_grad<double>(model, features, labels, true);
  // input_grad already carries the 1/n of the mean output.
  return lg.input_grad.colwise().sum().transpose();
}

VectorXd compute_importance(const Mlp<double>& model, std::span<const DataPoint> points) {
  if (points.empty()) throw std::invalid_argument("compute_importance: empty sample");
  return compute_importance(model, to_labeled(points).features);
}

MatrixXd discretize_importance(const MatrixXd& importance) {
  MatrixXd codes = MatrixXd::Zero(importance.rows(), importance.cols());
  for (Eigen::Index c = 0; c < importance.cols(); ++c) {
    const double max_abs = importance.col(c).cwiseAbs().maxCoeff();
    if (!(max_abs > 0.0)) continue;
    const double cut = kImportanceCut * max_abs;
    for (Eigen::Index r = 0; r < importance.rows(); ++r) {
      const double v = importance(r, c);
      codes(r, c) = v > cut ? kImportancePos : v < -cut ? kImportanceNeg : kImportanceMid;
    }
  }
  return codes;
}

VectorXd feature_variance(const MatrixXd& importance) {
  if (importance.cols() == 0) throw std::invalid_argument("feature_variance: no steps");
  const VectorXd mean = importance.rowwise().mean();
  return (importance.colwise() - mean).rowwise().squaredNorm() / static_cast<double>(importance.cols());
}

namespace {

VarianceShares shares(const VectorXd& va, const VectorXd& vb, double tol) {
  VarianceShares s;
  for (Eigen::Index i = 0; i < va.size(); ++i) {
    if (std::abs(va(i) - vb(i)) <= tol) s.same += 1;
    else if (va(i) > vb(i)) s.higher_a += 1;
    else s.higher_b += 1;
  }
  const double n = static_cast<double>(va.size());
  s.higher_a *= 100.0 / n;
  s.higher_b *= 100.0 / n;
  s.same *= 100.0 / n;
  return s;
}

}  // namespace

VarianceReport variance_report(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("variance_report: feature counts differ");
  if (a.cols() != b.cols()) throw std::invalid_argument("variance_report: step counts differ");
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("variance_report: empty matrices");
  VarianceReport r;
  r.variance_a = feature_variance(a);
  r.variance_b = feature_variance(b);
  r.discretized_variance_a = feature_variance(discretize_importance(a));
  r.discretized_variance_b = feature_variance(discretize_importance(b));
  r.raw = shares(r.variance_a, r.variance_b, 1e-9);
  r.discretized = shares(r.discretized_variance_a, r.discretized_variance_b, 0.0);
  return r;
}

std::vector<Eigen::Index> top_features(const MatrixXd& importance, std::size_t k) {
  MatrixXd normalized = importance;
  for (Eigen::Index c = 0; c < normalized.cols(); ++c) {
    const double max_abs = normalized.col(c).cwiseAbs().maxCoeff();
    if (max_abs > 0.0) normalized.col(c) /= max_abs;
  }
  const VectorXd score = normalized.rowwise().mean().cwiseAbs() + feature_variance(normalized);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(importance.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return score(x) > score(y); });
  if (idx.size() > k) idx.resize(k);
  return idx;
}

}  // namespace lifelong
