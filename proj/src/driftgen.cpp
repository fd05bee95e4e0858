#include "lifelong/driftgen.hpp"

#include "lifelong/random.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace lifelong {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::vector<Concept> orthogonal_concepts(std::size_t count, std::size_t dim, std::uint64_t seed) {
  if (count > dim) throw std::invalid_argument("generate_stream: more concepts than feature dimensions");
  std::mt19937_64 rng(derive_seed(seed, {0xC0C0}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Concept> out;
  for (std::size_t c = 0; c < count; ++c) {
    VectorXd w(static_cast<Eigen::Index>(dim));
    for (auto& v : w) v = gauss(rng);
    for (const auto& prev : out) w -= prev.weights.dot(w) * prev.weights;
    w.normalize();
    out.push_back({"concept" + std::to_string(c), w, 0.0});
  }
  return out;
}

void validate(const StreamSpec& spec, double raw_rate) {
  if (spec.n == 0) throw std::invalid_argument("generate_stream: n must be positive");
  if (spec.dim == 0) throw std::invalid_argument("generate_stream: dim must be positive");
  if (!(spec.positive_rate > 0.0 && spec.positive_rate < 1.0)) {
    throw std::invalid_argument("generate_stream: positive rate must lie in (0, 1)");
  }
  if (!(spec.noise >= 0.0 && spec.noise < 0.5)) throw std::invalid_argument("generate_stream: noise must lie in [0, 0.5)");
  if (!(raw_rate > 0.0 && raw_rate < 1.0)) {
    throw std::invalid_argument("generate_stream: positive rate unreachable under this noise level");
  }
  std::visit(overloaded{[](const drift::None&) {},
                        [&](const drift::Sudden& s) {
                          if (s.at < 1 || s.at > spec.n) throw std::invalid_argument("sudden drift index outside [1, n]");
                        },
                        [&](const drift::Gradual& g) {
                          if (g.length < 1 || g.start + g.length > spec.n) {
                            throw std::invalid_argument("gradual drift window outside the stream");
                          }
                        },
                        [&](const drift::Incremental& g) {
                          if (g.length < 1 || g.start + g.length > spec.n) {
                            throw std::invalid_argument("incremental drift window outside the stream");
                          }
                        },
                        [&](const drift::Recurrent& r) {
                          if (r.period < 1 || r.period > spec.n) throw std::invalid_argument("recurrent period outside [1, n]");
                        }},
             spec.drift);
  if (spec.cohorts && (spec.cohorts->min_size < 1 || spec.cohorts->max_size < spec.cohorts->min_size)) {
    throw std::invalid_argument("generate_stream: invalid cohort size range");
  }
  if (spec.points_per_day && !(*spec.points_per_day > 0.0)) {
    throw std::invalid_argument("generate_stream: points_per_day must be positive");
  }
}

}  // namespace

std::size_t concepts_required(const DriftKind& kind) { return std::holds_alternative<drift::None>(kind) ? 1 : 2; }

double calibrate_offset(const VectorXd& weights, double rate) {
  const double norm = weights.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw std::invalid_argument("calibrate_offset: degenerate weight vector");
  if (!(rate > 0.0 && rate < 1.0)) throw std::invalid_argument("calibrate_offset: rate must lie in (0, 1)");
  // P(w.x + b > 0) = Phi(b / |w|), increasing in b.
  double lo = -40.0 * norm;
  double hi = 40.0 * norm;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid / norm) < rate ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::size_t active_concept(const StreamSpec& spec, std::size_t i) {
  return std::visit(overloaded{[](const drift::None&) -> std::size_t { return 0; },
                               [&](const drift::Sudden& s) -> std::size_t { return i >= s.at ? 1 : 0; },
                               [&](const drift::Gradual& g) -> std::size_t {
                                 return i >= g.start + g.length / 2 ? 1 : 0;
                               },
                               [&](const drift::Incremental& g) -> std::size_t {
                                 return i >= g.start + g.length / 2 ? 1 : 0;
                               },
                               [&](const drift::Recurrent& r) -> std::size_t {
                                 const auto count = spec.concepts.empty() ? 2 : spec.concepts.size();
                                 return (i / r.period) % count;
                               }},
                    spec.drift);
}

std::string drift_name(const DriftKind& kind) {
  return std::visit(overloaded{[](const drift::None&) { return std::string("none"); },
                               [](const drift::Sudden&) { return std::string("sudden"); },
                               [](const drift::Gradual&) { return std::string("gradual"); },
                               [](const drift::Incremental&) { return std::string("incremental"); },
                               [](const drift::Recurrent&) { return std::string("recurrent"); }},
                    kind);
}

Points generate_stream(const StreamSpec& spec) {
  // Flips move the rate toward 1/2: raw * (1 - 2 noise) + noise = target.
  const double raw_rate = (spec.positive_rate - spec.noise) / (1.0 - 2.0 * spec.noise);
  validate(spec, raw_rate);

  auto concepts = spec.concepts;
  if (concepts.empty()) concepts = orthogonal_concepts(concepts_required(spec.drift), spec.dim, spec.seed);
  if (concepts.size() < concepts_required(spec.drift)) {
    throw std::invalid_argument("generate_stream: drift kind needs more concepts");
  }
  for (auto& c : concepts) {
    if (c.weights.size() != static_cast<Eigen::Index>(spec.dim)) {
      throw std::invalid_argument("generate_stream: concept " + c.id + " has wrong dimension");
    }
    c.offset = calibrate_offset(c.weights, raw_rate);
  }

  std::mt19937_64 feat_rng(derive_seed(spec.seed, {1}));
  std::mt19937_64 label_rng(derive_seed(spec.seed, {2}));
  std::mt19937_64 cohort_rng(derive_seed(spec.seed, {3}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Points out;
  out.reserve(spec.n);
  std::size_t cohort_index = 0;
  std::size_t cohort_left = 0;
  std::uint64_t order = 0;
  for (std::size_t i = 0; i < spec.n; ++i) {
    DataPoint p;
    p.id = "p" + std::to_string(i);
    p.features.resize(static_cast<Eigen::Index>(spec.dim));
    for (auto& v : p.features) v = gauss(feat_rng);

    const double u = unit(label_rng);
    const double flip = unit(label_rng);
    double score = 0;
    std::visit(overloaded{[&](const drift::None&) { score = concepts[0].weights.dot(p.features) + concepts[0].offset; },
                          [&](const drift::Sudden& s) {
                            const auto& c = concepts[i >= s.at ? 1 : 0];
                            score = c.weights.dot(p.features) + c.offset;
                          },
                          [&](const drift::Gradual& g) {
                            double prob_new = 0;
                            if (i >= g.start + g.length) prob_new = 1;
                            else if (i >= g.start) prob_new = static_cast<double>(i - g.start + 1) / static_cast<double>(g.length);
                            const auto& c = concepts[u < prob_new ? 1 : 0];
                            score = c.weights.dot(p.features) + c.offset;
                          },
                          [&](const drift::Incremental& g) {
                            double lambda = 0;
                            if (i >= g.start + g.length) lambda = 1;
                            else if (i >= g.start) lambda = static_cast<double>(i - g.start + 1) / static_cast<double>(g.length);
                            const VectorXd w = (1.0 - lambda) * concepts[0].weights + lambda * concepts[1].weights;
                            const double b = lambda == 0.0 ? concepts[0].offset
                                             : lambda == 1.0 ? concepts[1].offset
                                                             : calibrate_offset(w, raw_rate);
                            score = w.dot(p.features) + b;
                          },
                          [&](const drift::Recurrent& r) {
                            const auto& c = concepts[(i / r.period) % concepts.size()];
                            score = c.weights.dot(p.features) + c.offset;
                          }},
               spec.drift);
    p.label = score > 0.0 ? 1 : 0;
    if (flip < spec.noise) p.label = 1 - p.label;

    if (spec.cohorts) {
      if (cohort_left == 0) {
        std::uniform_int_distribution<std::size_t> size(spec.cohorts->min_size, spec.cohorts->max_size);
        cohort_left = size(cohort_rng);
        ++cohort_index;
        ++order;
      }
      --cohort_left;
      p.cohort = "c" + std::to_string(cohort_index);
      p.order = order - 1;
    } else {
      p.order = i;
    }
    if (spec.points_per_day) {
      p.timestamp = spec.start_time + static_cast<std::int64_t>(std::floor(static_cast<double>(i) / *spec.points_per_day * 86400.0));
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace lifelong
