#pragma once
// Rank-based comparison of run samples: Kruskal-Wallis H and Cliff's delta.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lifelong {

/// Regularized upper incomplete gamma Q(a, x).
double regularized_gamma_q(double a, double x);

/// P(X >= x) for X ~ chi-square(df).
double chi_square_survival(double x, double df);

/// Mid-ranks (1-based) of the values, ties averaged.
std::vector<double> midranks(std::span<const double> values);

struct KruskalWallisResult {
  double h = 0;
  double p = 1;
  std::size_t df = 0;
  bool exact = false;  // p from the full permutation distribution
};

/// Arrangement counts up to this bound get an exact permutation p-value; larger
/// designs use the chi-square approximation.
inline constexpr double kExactPermutationLimit = 50000;

/// Tie-corrected H. Throws on fewer than two groups or an empty group.
KruskalWallisResult kruskal_wallis(std::span<const std::vector<double>> groups);

enum class EffectMagnitude { negligible, small, medium, large };

const char* to_string(EffectMagnitude m);

/// |d| < 0.147 negligible, < 0.33 small, < 0.474 medium, else large.
EffectMagnitude cliffs_magnitude(double delta);

struct CliffsDelta {
  double delta = 0;
  EffectMagnitude magnitude = EffectMagnitude::negligible;
};

/// (#(a_i > b_j) - #(a_i < b_j)) / (|a| |b|).
CliffsDelta cliffs_delta(std::span<const double> a, std::span<const double> b);

struct StatResult {
  double h = 0;
  double p = 1;
  double alpha = 0.05;
  bool exact = false;
  bool significant = false;
  double delta = 0;
  EffectMagnitude magnitude = EffectMagnitude::negligible;
  double mean_a = 0;
  double mean_b = 0;

  /// "/" when not significant, "+" for a significant large effect, otherwise the
  /// magnitude name.
  std::string mark() const;
};

/// Two-sample Kruskal-Wallis at `alpha` plus Cliff's delta of `a` against `b`.
StatResult compare_samples(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

}  // namespace lifelong
