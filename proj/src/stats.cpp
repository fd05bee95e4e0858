#include "lifelong/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lifelong {

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double rank_sum_score(std::span<const double> ranks, std::span<const std::size_t> group_of,
                      std::span<const std::size_t> sizes) {
  std::vector<double> sums(sizes.size(), 0.0);
  for (std::size_t i = 0; i < ranks.size(); ++i) sums[group_of[i]] += ranks[i];
  double s = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) s += sums[g] * sums[g] / static_cast<double>(sizes[g]);
  return s;
}

double arrangement_count(std::span<const std::size_t> sizes) {
  double total = 0;
  double log_count = 0;
  for (auto n : sizes) {
    total += static_cast<double>(n);
    log_count -= std::lgamma(static_cast<double>(n) + 1.0);
  }
  log_count += std::lgamma(total + 1.0);
  return std::exp(log_count);
}

// Enumerates every assignment of the pooled positions to groups of the observed sizes.
struct ExactEnumerator {
  std::span<const double> ranks;
  std::vector<std::size_t> capacity;
  std::vector<double> sums;
  std::vector<std::size_t> sizes;
  double threshold = 0;
  std::uint64_t hits = 0;
  std::uint64_t total = 0;

  void run(std::size_t pos) {
    if (pos == ranks.size()) {
      double s = 0;
      for (std::size_t g = 0; g < sums.size(); ++g) s += sums[g] * sums[g] / static_cast<double>(sizes[g]);
      ++total;
      if (s >= threshold) ++hits;
      return;
    }
    for (std::size_t g = 0; g < capacity.size(); ++g) {
      if (capacity[g] == 0) continue;
      --capacity[g];
      sums[g] += ranks[pos];
      run(pos + 1);
      sums[g] -= ranks[pos];
      ++capacity[g];
    }
  }
};

}  // namespace

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0)) throw std::invalid_argument("regularized_gamma_q: a must be positive");
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi_square_survival(double x, double df) { return regularized_gamma_q(df / 2.0, x / 2.0); }

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

KruskalWallisResult kruskal_wallis(std::span<const std::vector<double>> groups) {
  if (groups.size() < 2) throw std::invalid_argument("kruskal_wallis: need at least two groups");
  std::vector<double> pooled;
  std::vector<std::size_t> group_of;
  std::vector<std::size_t> sizes;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw std::invalid_argument("kruskal_wallis: empty group");
    for (double v : groups[g]) {
      if (!std::isfinite(v)) throw std::invalid_argument("kruskal_wallis: non-finite value");
      pooled.push_back(v);
      group_of.push_back(g);
    }
    sizes.push_back(groups[g].size());
  }
  KruskalWallisResult res;
  res.df = groups.size() - 1;
  const double n = static_cast<double>(pooled.size());
  const auto ranks = midranks(pooled);

  // tie correction 1 - sum(t^3 - t) / (n^3 - n)
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_sum = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_sum += t * t * t - t;
    i = j;
  }
  const double correction = 1.0 - tie_sum / (n * n * n - n);
  if (correction <= 0.0) return res;  // every value identical

  const double score = rank_sum_score(ranks, group_of, sizes);
  res.h = std::max(0.0, (12.0 / (n * (n + 1.0)) * score - 3.0 * (n + 1.0)) / correction);

  if (arrangement_count(sizes) <= kExactPermutationLimit) {
    ExactEnumerator e{ranks, sizes, std::vector<double>(sizes.size(), 0.0), sizes, score - 1e-9 * std::abs(score)};
    e.run(0);
    res.p = static_cast<double>(e.hits) / static_cast<double>(e.total);
    res.exact = true;
  } else {
    res.p = std::clamp(chi_square_survival(res.h, static_cast<double>(res.df)), 0.0, 1.0);
  }
  return res;
}

const char* to_string(EffectMagnitude m) {
  switch (m) {
    case EffectMagnitude::negligible: return "negligible";
    case EffectMagnitude::small: return "small";
    case EffectMagnitude::medium: return "medium";
    case EffectMagnitude::large: return "large";
  }
  return "unknown";
}

EffectMagnitude cliffs_magnitude(double delta) {
  const double d = std::abs(delta);
  if (d < 0.147) return EffectMagnitude::negligible;
  if (d < 0.33) return EffectMagnitude::small;
  if (d < 0.474) return EffectMagnitude::medium;
  return EffectMagnitude::large;
}

CliffsDelta cliffs_delta(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("cliffs_delta: empty sample");
  std::vector<double> sorted_b(b.begin(), b.end());
  std::sort(sorted_b.begin(), sorted_b.end());
  std::int64_t balance = 0;
  for (double x : a) {
    const auto below = std::lower_bound(sorted_b.begin(), sorted_b.end(), x) - sorted_b.begin();
    const auto above = sorted_b.end() - std::upper_bound(sorted_b.begin(), sorted_b.end(), x);
    balance += below - above;
  }
  CliffsDelta out;
  out.delta = static_cast<double>(balance) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  out.magnitude = cliffs_magnitude(out.delta);
  return out;
}

std::string StatResult::mark() const {
  if (!significant) return "/";
  if (magnitude == EffectMagnitude::large) return "+";
  return to_string(magnitude);
}

StatResult compare_samples(std::span<const double> a, std::span<const double> b, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("compare_samples: alpha must lie in (0, 1)");
  const std::vector<std::vector<double>> groups{{a.begin(), a.end()}, {b.begin(), b.end()}};
  const auto kw = kruskal_wallis(groups);
  const auto cd = cliffs_delta(a, b);
  StatResult r;
  r.h = kw.h;
  r.p = kw.p;
  r.exact = kw.exact;
  r.alpha = alpha;
  r.significant = kw.p < alpha;
  r.delta = cd.delta;
  r.magnitude = cd.magnitude;
  r.mean_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  r.mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
  return r;
}

}  // namespace lifelong
