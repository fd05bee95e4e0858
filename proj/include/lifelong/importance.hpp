#pragma once
// Feature-importance evolution: signed input-gradient attributions per step,
// Pos/Mid/Neg discretization and variance comparison between two setups.

#include "lifelong/mlp.hpp"
#include "lifelong/stream.hpp"

#include <span>
#include <string>
#include <vector>

namespace lifelong {

inline constexpr const char* kImportanceMethod = "mean_input_gradient";

/// importance_j = mean over points of d(output)/d(x_j).
VectorXd compute_importance(const Mlp<double>& model, std::span<const DataPoint> points);
VectorXd compute_importance(const Mlp<double>& model, const MatrixXd& features);

inline constexpr double kImportancePos = 0.5;
inline constexpr double kImportanceMid = 0.0;
inline constexpr double kImportanceNeg = -0.5;
inline constexpr double kImportanceCut = 0.1;

/// Per column (time step): > 0.1 Max -> +0.5, < -0.1 Max -> -0.5, else 0, where Max
/// is the column's largest absolute value. All-zero columns map to 0.
MatrixXd discretize_importance(const MatrixXd& importance);

/// Population variance of each row (feature) across columns (steps).
VectorXd feature_variance(const MatrixXd& importance);

struct VarianceShares {
  double higher_a = 0;  // percent of features varying more under A
  double higher_b = 0;
  double same = 0;
};

struct VarianceReport {
  VarianceShares raw;
  VarianceShares discretized;
  VectorXd variance_a;
  VectorXd variance_b;
  VectorXd discretized_variance_a;
  VectorXd discretized_variance_b;
};

/// Raw variances count as equal within 1e-9; discretized ones compare exactly.
VarianceReport variance_report(const MatrixXd& a, const MatrixXd& b);

/// Features ranked by |mean| + variance of their Max-normalized importances.
std::vector<Eigen::Index> top_features(const MatrixXd& importance, std::size_t k);

}  // namespace lifelong
