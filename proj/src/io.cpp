#include "lifelong/io.hpp"

#include "lifelong/importance.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

namespace lifelong {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

template <typename T>
bool parse_full(const std::string& s, T& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int parse_fixed(const std::string& s, std::size_t pos, std::size_t len, const std::string& text) {
  if (pos + len > s.size()) throw ValidationError("bad timestamp '" + text + "'");
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') throw ValidationError("bad timestamp '" + text + "'");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text) {
  using namespace std::chrono;
  const auto& s = text;
  const int year = parse_fixed(s, 0, 4, text);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw ValidationError("bad timestamp '" + text + "'");
  const int month = parse_fixed(s, 5, 2, text);
  const int day = parse_fixed(s, 8, 2, text);
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw ValidationError("bad calendar date in '" + text + "'");
  std::int64_t secs = sys_days{ymd}.time_since_epoch() / std::chrono::seconds(1);
  if (s.size() == 10) return secs;
  if (s[10] != 'T' && s[10] != ' ') throw ValidationError("bad timestamp '" + text + "'");
  const int hh = parse_fixed(s, 11, 2, text);
  if (s.size() < 19 || s[13] != ':' || s[16] != ':') throw ValidationError("bad timestamp '" + text + "'");
  const int mm = parse_fixed(s, 14, 2, text);
  const int ss = parse_fixed(s, 17, 2, text);
  if (hh > 23 || mm > 59 || ss > 60) throw ValidationError("bad time of day in '" + text + "'");
  secs += hh * 3600 + mm * 60 + ss;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;  // sub-second part dropped
  }
  if (pos == s.size()) return secs;
  if (s[pos] == 'Z' && pos + 1 == s.size()) return secs;
  if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
    const int oh = parse_fixed(s, pos + 1, 2, text);
    const int om = parse_fixed(s, pos + 4, 2, text);
    const std::int64_t offset = oh * 3600 + om * 60;
    return s[pos] == '+' ? secs - offset : secs + offset;
  }
  throw ValidationError("bad timestamp '" + text + "'");
}

std::string format_timestamp(std::int64_t seconds) {
  using namespace std::chrono;
  const sys_seconds tp{std::chrono::seconds{seconds}};
  const auto dp = floor<days>(tp);
  const year_month_day ymd{dp};
  const hh_mm_ss hms{tp - dp};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

DatasetSummary summarize(std::span<const DataPoint> points) {
  DatasetSummary s;
  s.n = points.size();
  if (points.empty()) return s;
  s.dim = static_cast<std::size_t>(points.front().features.size());
  std::size_t pos = 0;
  std::unordered_set<std::uint64_t> orders;
  for (const auto& p : points) {
    pos += p.label ? 1 : 0;
    s.has_cohorts = s.has_cohorts || p.cohort.has_value();
    s.has_timestamps = s.has_timestamps || p.timestamp.has_value();
    orders.insert(p.order);
  }
  s.positive_rate = static_cast<double>(pos) / static_cast<double>(points.size());
  s.distinct_orders = orders.size();
  return s;
}

Dataset parse_dataset(std::istream& in, const std::string& source) {
  auto fail = [&](std::size_t line, const std::string& msg) {
    throw ValidationError(source + ":" + std::to_string(line) + ": " + msg);
  };
  std::string line;
  if (!std::getline(in, line)) fail(1, "missing header");
  const auto header = split_csv_line(line);
  const std::vector<std::string> fixed{"id", "order", "cohort", "timestamp", "label"};
  if (header.size() < fixed.size() + 1) fail(1, "header needs id,order,cohort,timestamp,label and at least f0");
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (header[i] != fixed[i]) fail(1, "expected column '" + fixed[i] + "', found '" + header[i] + "'");
  }
  const std::size_t dim = header.size() - fixed.size();
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[fixed.size() + j] != "f" + std::to_string(j)) {
      fail(1, "expected column 'f" + std::to_string(j) + "', found '" + header[fixed.size() + j] + "'");
    }
  }

  Dataset ds;
  std::unordered_set<std::string> ids;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      fail(lineno, "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    DataPoint p;
    p.id = cells[0];
    if (p.id.empty()) fail(lineno, "empty id");
    if (!ids.insert(p.id).second) fail(lineno, "duplicate id '" + p.id + "'");
    if (!parse_full(cells[1], p.order)) fail(lineno, "order '" + cells[1] + "' is not a nonnegative integer");
    if (!cells[2].empty()) p.cohort = cells[2];
    if (!cells[3].empty()) {
      try {
        p.timestamp = parse_timestamp(cells[3]);
      } catch (const ValidationError& e) {
        fail(lineno, e.what());
      }
    }
    if (cells[4] == "0") p.label = 0;
    else if (cells[4] == "1") p.label = 1;
    else fail(lineno, "label '" + cells[4] + "' is not 0 or 1");
    p.features.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) {
      double v = 0;
      if (!parse_full(cells[fixed.size() + j], v) || !std::isfinite(v)) {
        fail(lineno, "feature f" + std::to_string(j) + " '" + cells[fixed.size() + j] + "' is not a finite number");
      }
      p.features(static_cast<Eigen::Index>(j)) = v;
    }
    ds.points.push_back(std::move(p));
  }
  std::stable_sort(ds.points.begin(), ds.points.end(),
                   [](const DataPoint& a, const DataPoint& b) { return a.order < b.order; });
  ds.summary = summarize(ds.points);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  return parse_dataset(in, path.string());
}

void write_dataset(std::ostream& out, std::span<const DataPoint> points) {
  const auto dim = points.empty() ? 0 : points.front().features.size();
  out << "id,order,cohort,timestamp,label";
  for (Eigen::Index j = 0; j < dim; ++j) out << ",f" << j;
  out << '\n';
  for (const auto& p : points) {
    out << p.id << ',' << p.order << ',' << p.cohort.value_or("") << ','
        << (p.timestamp ? format_timestamp(*p.timestamp) : "") << ',' << p.label;
    for (Eigen::Index j = 0; j < p.features.size(); ++j) out << ',' << fmt_double(p.features(j));
    out << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, std::span<const DataPoint> points) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  write_dataset(out, points);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---- models -------------------------------------------------------------

json model_to_json(const Mlp<double>& model) {
  json layers = json::array();
  for (const auto& l : model.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    }
    layers.push_back({{"weights", w}, {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  std::vector<std::int64_t> sizes(model.layer_sizes().begin(), model.layer_sizes().end());
  return {{"format", "lifelong-mlp"},
          {"format_version", kModelFormatVersion},
          {"version", model.version()},
          {"layer_sizes", sizes},
          {"layers", layers}};
}

Mlp<double> model_from_json(const json& j) {
  try {
    if (j.at("format") != "lifelong-mlp") throw ValidationError("not a lifelong-mlp document");
    if (j.at("format_version").get<int>() != kModelFormatVersion) throw ValidationError("unsupported model format version");
    const auto sizes64 = j.at("layer_sizes").get<std::vector<std::int64_t>>();
    std::vector<Eigen::Index> sizes(sizes64.begin(), sizes64.end());
    check_layer_sizes(sizes);
    const auto& layers_j = j.at("layers");
    if (layers_j.size() + 1 != sizes.size()) throw ValidationError("layer count does not match layer_sizes");
    LayerStack<double> layers;
    for (std::size_t i = 0; i < layers_j.size(); ++i) {
      const auto w = layers_j[i].at("weights").get<std::vector<double>>();
      const auto b = layers_j[i].at("bias").get<std::vector<double>>();
      const auto rows = sizes[i];
      const auto cols = sizes[i + 1];
      if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != cols) {
        throw ValidationError("parameter array sizes do not match layer_sizes at layer " + std::to_string(i));
      }
      DenseLayer<double> layer{MatrixXd(rows, cols), VectorXd(cols)};
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      }
      for (Eigen::Index c = 0; c < cols; ++c) layer.bias(c) = b[static_cast<std::size_t>(c)];
      layers.push_back(std::move(layer));
    }
    return Mlp<double>(sizes, std::move(layers), j.at("version").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model document: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Mlp<double>& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model " + path.string());
  out << model_to_json(model).dump(1) << '\n';
}

Mlp<double> load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  try {
    return model_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

// ---- hyperparameters ----------------------------------------------------

json hyper_to_json(const Hyperparams& h) {
  std::vector<std::int64_t> hidden(h.hidden.begin(), h.hidden.end());
  return {{"GS", h.group_size},   {"ITWin", h.init_window},
          {"VWin", h.valid_window}, {"RBSize", h.rb_size},
          {"RBWin", h.rb_window},   {"lr", h.lr},
          {"epochs", h.epochs},     {"minibatch", h.minibatch},
          {"hidden", hidden},       {"valid_fraction", h.valid_fraction},
          {"threshold", h.threshold}, {"seed", h.seed}};
}

Hyperparams hyper_from_json(const json& j, Hyperparams h) {
  if (!j.is_object()) throw ValidationError("hyper: expected an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "GS") h.group_size = v.get<std::size_t>();
      else if (key == "ITWin") h.init_window = v.get<std::size_t>();
      else if (key == "VWin") h.valid_window = v.get<std::size_t>();
      else if (key == "RBSize") h.rb_size = v.get<double>();
      else if (key == "RBWin") h.rb_window = v.get<std::size_t>();
      else if (key == "lr") h.lr = v.get<double>();
      else if (key == "epochs") h.epochs = v.get<int>();
      else if (key == "minibatch") h.minibatch = v.get<int>();
      else if (key == "hidden") {
        const auto hidden = v.get<std::vector<std::int64_t>>();
        h.hidden.assign(hidden.begin(), hidden.end());
      } else if (key == "valid_fraction") h.valid_fraction = v.get<double>();
      else if (key == "threshold") h.threshold = v.get<double>();
      else if (key == "seed") h.seed = v.get<std::uint64_t>();
      else throw ValidationError("hyper: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("hyper: ") + e.what());
  }
  try {
    h.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  return h;
}

// ---- runs ---------------------------------------------------------------

namespace {

json opt_json(const std::optional<std::int64_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::int64_t> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::int64_t>();
}

json step_to_json(const StepRecord& s) {
  return {{"step", s.step},
          {"test_group", s.test_group},
          {"tp", s.confusion.tp},
          {"fp", s.confusion.fp},
          {"tn", s.confusion.tn},
          {"fn", s.confusion.fn},
          {"updated", s.updated},
          {"skipped", s.skipped},
          {"degenerate_validation", s.degenerate_validation},
          {"train_size", s.train_size},
          {"valid_size", s.valid_size},
          {"valid_f1", s.valid_f1},
          {"model_version", s.model_version},
          {"fit_seconds", s.fit_seconds},
          {"position", s.position},
          {"time", opt_json(s.time)},
          {"test_begin", opt_json(s.test_begin)},
          {"test_end", opt_json(s.test_end)}};
}

StepRecord step_from_json(const json& j) {
  StepRecord s;
  s.step = j.at("step").get<std::size_t>();
  s.test_group = j.at("test_group").get<std::size_t>();
  s.confusion = {j.at("tp").get<std::uint64_t>(), j.at("fp").get<std::uint64_t>(), j.at("tn").get<std::uint64_t>(),
                 j.at("fn").get<std::uint64_t>()};
  s.updated = j.at("updated").get<bool>();
  s.skipped = j.at("skipped").get<bool>();
  s.degenerate_validation = j.at("degenerate_validation").get<bool>();
  s.train_size = j.at("train_size").get<std::size_t>();
  s.valid_size = j.at("valid_size").get<std::size_t>();
  s.valid_f1 = j.at("valid_f1").get<double>();
  s.model_version = j.at("model_version").get<std::uint64_t>();
  s.fit_seconds = j.at("fit_seconds").get<double>();
  s.position = j.at("position").get<std::uint64_t>();
  s.time = opt_from(j.at("time"));
  s.test_begin = opt_from(j.at("test_begin"));
  s.test_end = opt_from(j.at("test_end"));
  return s;
}

json matrix_to_json(const MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ValidationError("matrix data size mismatch");
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

}  // namespace

json run_to_json(const RunRecord& run, const json& config_echo) {
  json steps = json::array();
  for (const auto& s : run.steps) steps.push_back(step_to_json(s));
  json j{{"format", "lifelong-run"},
         {"format_version", kRunFormatVersion},
         {"code_version", kCodeVersion},
         {"setup", run.setup},
         {"schedule", run.schedule},
         {"hyper", hyper_to_json(run.hyper)},
         {"config", config_echo},
         {"steps", steps},
         {"importance", run.importance ? matrix_to_json(*run.importance) : json(nullptr)},
         {"importance_method", kImportanceMethod}};
  if (run.audit) {
    json fits = json::array();
    for (const auto& f : run.audit->fits) {
      fits.push_back({{"step", f.step}, {"train_ids", f.train_ids}, {"valid_ids", f.valid_ids}});
    }
    j["audit"] = {{"fits", fits}, {"test_ids", run.audit->test_ids}};
  } else {
    j["audit"] = nullptr;
  }
  return j;
}

RunRecord run_from_json(const json& j) {
  try {
    if (j.at("format") != "lifelong-run") throw ValidationError("not a lifelong-run document");
    if (j.at("format_version").get<int>() != kRunFormatVersion) throw ValidationError("unsupported run format version");
    RunRecord r;
    r.setup = j.at("setup").get<std::string>();
    r.schedule = j.at("schedule").get<std::string>();
    r.hyper = hyper_from_json(j.at("hyper"));
    for (const auto& s : j.at("steps")) r.steps.push_back(step_from_json(s));
    if (!j.at("importance").is_null()) r.importance = matrix_from_json(j.at("importance"));
    if (!j.at("audit").is_null()) {
      RunAudit a;
      for (const auto& f : j.at("audit").at("fits")) {
        a.fits.push_back({f.at("step").get<std::size_t>(), f.at("train_ids").get<std::vector<std::string>>(),
                          f.at("valid_ids").get<std::vector<std::string>>()});
      }
      a.test_ids = j.at("audit").at("test_ids").get<std::vector<std::vector<std::string>>>();
      r.audit = std::move(a);
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run document: ") + e.what());
  }
}

void write_steps_csv(std::ostream& out, const RunRecord& run) {
  out << "setup,step,test_group,tp,fp,tn,fn,precision,recall,specificity,f1,gmean,prevalence,updated,skipped,"
         "degenerate_validation,train_size,valid_size,valid_f1,model_version,fit_seconds,position,time,test_begin,"
         "test_end\n";
  auto ts = [](const std::optional<std::int64_t>& t) { return t ? format_timestamp(*t) : std::string(); };
  for (const auto& s : run.steps) {
    const auto m = evaluate(s.confusion);
    out << run.setup << ',' << s.step << ',' << s.test_group << ',' << s.confusion.tp << ',' << s.confusion.fp << ','
        << s.confusion.tn << ',' << s.confusion.fn << ',' << fmt_double(m.precision) << ',' << fmt_double(m.recall)
        << ',' << fmt_double(m.specificity) << ',' << fmt_double(m.f1) << ',' << fmt_double(m.gmean) << ','
        << fmt_double(m.prevalence) << ',' << s.updated << ',' << s.skipped << ',' << s.degenerate_validation << ','
        << s.train_size << ',' << s.valid_size << ',' << fmt_double(s.valid_f1) << ',' << s.model_version << ','
        << fmt_double(s.fit_seconds) << ',' << s.position << ',' << ts(s.time) << ',' << ts(s.test_begin) << ','
        << ts(s.test_end) << '\n';
  }
}

void write_effort_csv(std::ostream& out, const RunRecord& run, const RunRecord* reference) {
  const auto e = reference ? effort_report(run, *reference) : effort_of(run);
  out << "setup,reference,defined,life_unit,fits,median_life,mean_life,sd_life,median_train,mean_train,coef,"
         "coef_rel,coef_mean,coef_rel_mean,update_size_gs,speedup\n";
  out << run.setup << ',' << (reference ? reference->setup : run.setup) << ',' << e.defined << ','
      << (e.life_in_days ? "days" : "points") << ',' << run.fit_count() << ',' << fmt_double(e.median_life) << ','
      << fmt_double(e.mean_life) << ',' << fmt_double(e.sd_life) << ',' << fmt_double(e.median_train) << ','
      << fmt_double(e.mean_train) << ',' << fmt_double(e.coef) << ',' << fmt_double(e.coef_rel) << ','
      << fmt_double(e.coef_mean) << ',' << fmt_double(e.coef_rel_mean) << ',' << fmt_double(e.update_size_gs) << ','
      << fmt_double(e.speedup) << '\n';
}

void write_importance_csv(std::ostream& out, const MatrixXd& importance) {
  const MatrixXd codes = discretize_importance(importance);
  out << "feature,step,value,code\n";
  for (Eigen::Index r = 0; r < importance.rows(); ++r) {
    for (Eigen::Index c = 0; c < importance.cols(); ++c) {
      out << 'f' << r << ',' << c << ',' << fmt_double(importance(r, c)) << ',' << fmt_double(codes(r, c)) << '\n';
    }
  }
}

namespace {

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::filesystem::path record_path(const std::filesystem::path& p) {
  return std::filesystem::is_directory(p) ? p / "run.json" : p;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run record " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace

RunFiles persist_run(const RunRecord& run, const std::filesystem::path& dir, const json& config_echo) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  RunFiles files{dir / "run.json", dir / "steps.csv", dir / "effort.csv"};
  write_file(files.record, [&](std::ostream& o) { o << run_to_json(run, config_echo).dump(1) << '\n'; });
  write_file(files.steps, [&](std::ostream& o) { write_steps_csv(o, run); });
  write_file(files.effort, [&](std::ostream& o) { write_effort_csv(o, run); });
  if (run.importance) {
    write_file(dir / "importance.csv", [&](std::ostream& o) { write_importance_csv(o, *run.importance); });
  }
  return files;
}

RunRecord load_run(const std::filesystem::path& path) { return run_from_json(read_json(record_path(path))); }

json load_run_config(const std::filesystem::path& path) { return read_json(record_path(path)).at("config"); }

}  // namespace lifelong
