#pragma once
// File formats: dataset CSV, model JSON, run records (JSON + flat CSVs).

#include "lifelong/effort.hpp"
#include "lifelong/mlp.hpp"
#include "lifelong/run_record.hpp"
#include "lifelong/stream.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

namespace lifelong {

inline constexpr const char* kCodeVersion = "1.0.0";
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kRunFormatVersion = 1;

/// Parse problems in user-supplied files; maps to exit code 1 in the CLI.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SS" with optional fraction and "Z" / "+HH:MM".
std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t seconds);

struct DatasetSummary {
  std::size_t n = 0;
  std::size_t dim = 0;
  double positive_rate = 0;
  bool has_cohorts = false;
  bool has_timestamps = false;
  std::size_t distinct_orders = 0;
};

struct Dataset {
  Points points;  // sorted by order (stable)
  DatasetSummary summary;
};

/// Header: id,order,cohort,timestamp,label,f0,...,f{d-1}. Throws ValidationError
/// with "<source>:<line>: ..." diagnostics.
Dataset parse_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, std::span<const DataPoint> points);
void save_dataset(const std::filesystem::path& path, std::span<const DataPoint> points);
DatasetSummary summarize(std::span<const DataPoint> points);

nlohmann::json model_to_json(const Mlp<double>& model);
Mlp<double> model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const Mlp<double>& model);
Mlp<double> load_model(const std::filesystem::path& path);

nlohmann::json hyper_to_json(const Hyperparams& h);
/// Unknown keys are errors; missing keys keep the defaults of `base`.
Hyperparams hyper_from_json(const nlohmann::json& j, Hyperparams base = {});

nlohmann::json run_to_json(const RunRecord& run, const nlohmann::json& config_echo = nullptr);
RunRecord run_from_json(const nlohmann::json& j);

/// Per-step metrics, one row per scored step.
void write_steps_csv(std::ostream& out, const RunRecord& run);
/// Effort row(s) of `run`, optionally relative to an LL reference.
void write_effort_csv(std::ostream& out, const RunRecord& run, const RunRecord* reference = nullptr);
/// Long form feature,step,value,code of the importance matrix.
void write_importance_csv(std::ostream& out, const MatrixXd& importance);

struct RunFiles {
  std::filesystem::path record;  // run.json
  std::filesystem::path steps;   // steps.csv
  std::filesystem::path effort;  // effort.csv
};

/// Writes run.json, steps.csv and effort.csv (plus importance.csv when present)
/// into `dir`, creating it if needed.
RunFiles persist_run(const RunRecord& run, const std::filesystem::path& dir,
                     const nlohmann::json& config_echo = nullptr);
/// Accepts a run.json path or the directory holding it.
RunRecord load_run(const std::filesystem::path& path);
nlohmann::json load_run_config(const std::filesystem::path& path);

}  // namespace lifelong
