#pragma once
// Experiment configuration files (JSON). Every key is checked; unknown keys are
// rejected so that typos never fall back to defaults silently.

#include "lifelong/driftgen.hpp"
#include "lifelong/io.hpp"
#include "lifelong/run_record.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lifelong {

struct ExperimentConfig {
  std::optional<StreamSpec> stream;             // synthetic source, or
  std::optional<std::filesystem::path> dataset; // a dataset CSV
  Hyperparams hyper;
  std::vector<std::string> setups{"ll"};
  std::vector<std::uint64_t> seeds{0};
  std::size_t runs_per_config = 4;
  std::filesystem::path output_dir = "runs";
  bool track_importance = false;
  bool audit = false;
  double alpha = 0.05;
  unsigned threads = 0;  // 0: hardware concurrency
  std::vector<nlohmann::json> grid;  // partial "hyper" objects for sweep

  /// Throws ValidationError on inconsistent settings.
  void validate() const;
};

nlohmann::json stream_to_json(const StreamSpec& spec);
StreamSpec stream_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Hyperparams of every grid entry, each applied on top of cfg.hyper.
std::vector<Hyperparams> expand_grid(const ExperimentConfig& cfg);

/// Stream points for one seed. Generated streams use stream.seed + seed; datasets
/// are the same for every seed.
Points source_points(const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace lifelong
