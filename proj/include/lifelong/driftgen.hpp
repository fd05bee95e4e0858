#pragma once
// Synthetic labeled streams over Gaussian features with linear concepts and
// controlled drift (sudden, gradual, incremental, recurrent).

#include "lifelong/stream.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lifelong {

struct Concept {
  std::string id;
  VectorXd weights;
  double offset = 0;  // recalibrated by the generator to hit the target rate
};

namespace drift {
struct None {};
struct Sudden {
  std::size_t at = 0;  // first point (0-based) under the second concept
};
struct Gradual {
  std::size_t start = 0;
  std::size_t length = 1;  // P(new concept) ramps 0 -> 1 over this many points
};
struct Incremental {
  std::size_t start = 0;
  std::size_t length = 1;  // weights interpolate linearly over this many points
};
struct Recurrent {
  std::size_t period = 1;  // concepts alternate every `period` points
};
}  // namespace drift

using DriftKind = std::variant<drift::None, drift::Sudden, drift::Gradual, drift::Incremental, drift::Recurrent>;

struct CohortSpec {
  std::size_t min_size = 1;
  std::size_t max_size = 1;
};

struct StreamSpec {
  std::size_t n = 1000;
  std::size_t dim = 10;
  double positive_rate = 0.3;  // target rate of emitted labels, after noise
  DriftKind drift = drift::None{};
  std::vector<Concept> concepts;  // empty: mutually orthogonal random unit concepts
  double noise = 0.0;             // label flip probability, in [0, 0.5)
  std::uint64_t seed = 0;
  std::optional<CohortSpec> cohorts;
  std::optional<double> points_per_day;  // emits timestamps when set
  std::int64_t start_time = 1577836800;  // 2020-01-01T00:00:00Z
};

/// Number of concepts the drift kind needs.
std::size_t concepts_required(const DriftKind& kind);

/// Offset b with P(w.x + b > 0) = rate for x ~ N(0, I), by bisection on the normal CDF.
double calibrate_offset(const VectorXd& weights, double rate);

/// Throws std::invalid_argument on an invalid spec or unreachable rate.
Points generate_stream(const StreamSpec& spec);

/// Index of the concept active at `position` (mixture draws for gradual drift are
/// not reflected; returns the dominant concept).
std::size_t active_concept(const StreamSpec& spec, std::size_t position);

std::string drift_name(const DriftKind& kind);

}  // namespace lifelong
