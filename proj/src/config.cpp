#include "lifelong/config.hpp"

#include "lifelong/orchestrator.hpp"

#include <fstream>

namespace lifelong {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
}

json drift_to_json(const DriftKind& kind) {
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, drift::None>) return {{"kind", "none"}};
        else if constexpr (std::is_same_v<T, drift::Sudden>) return {{"kind", "sudden"}, {"at", d.at}};
        else if constexpr (std::is_same_v<T, drift::Gradual>)
          return {{"kind", "gradual"}, {"start", d.start}, {"length", d.length}};
        else if constexpr (std::is_same_v<T, drift::Incremental>)
          return {{"kind", "incremental"}, {"start", d.start}, {"length", d.length}};
        else return {{"kind", "recurrent"}, {"period", d.period}};
      },
      kind);
}

DriftKind drift_from_json(const json& j) {
  expect_object(j, "stream.drift");
  const auto kind = j.at("kind").get<std::string>();
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : j.items()) {
      bool ok = k == "kind";
      for (const char* a : keys) ok = ok || k == a;
      if (!ok) bad("stream.drift", "unknown key '" + k + "' for kind " + kind);
    }
  };
  if (kind == "none") {
    allow({});
    return drift::None{};
  }
  if (kind == "sudden") {
    allow({"at"});
    return drift::Sudden{j.at("at").get<std::size_t>()};
  }
  if (kind == "gradual") {
    allow({"start", "length"});
    return drift::Gradual{j.at("start").get<std::size_t>(), j.at("length").get<std::size_t>()};
  }
  if (kind == "incremental") {
    allow({"start", "length"});
    return drift::Incremental{j.at("start").get<std::size_t>(), j.at("length").get<std::size_t>()};
  }
  if (kind == "recurrent") {
    allow({"period"});
    return drift::Recurrent{j.at("period").get<std::size_t>()};
  }
  bad("stream.drift", "unknown kind '" + kind + "'");
}

}  // namespace

json stream_to_json(const StreamSpec& s) {
  json j{{"n", s.n},
         {"dim", s.dim},
         {"positive_rate", s.positive_rate},
         {"drift", drift_to_json(s.drift)},
         {"noise", s.noise},
         {"seed", s.seed},
         {"start_time", s.start_time}};
  if (s.cohorts) j["cohorts"] = {{"min_size", s.cohorts->min_size}, {"max_size", s.cohorts->max_size}};
  if (s.points_per_day) j["points_per_day"] = *s.points_per_day;
  if (!s.concepts.empty()) {
    json cs = json::array();
    for (const auto& c : s.concepts) {
      cs.push_back({{"id", c.id},
                    {"weights", std::vector<double>(c.weights.data(), c.weights.data() + c.weights.size())},
                    {"offset", c.offset}});
    }
    j["concepts"] = cs;
  }
  return j;
}

StreamSpec stream_from_json(const json& j) {
  expect_object(j, "stream");
  StreamSpec s;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "n") s.n = v.get<std::size_t>();
      else if (k == "dim") s.dim = v.get<std::size_t>();
      else if (k == "positive_rate") s.positive_rate = v.get<double>();
      else if (k == "drift") s.drift = drift_from_json(v);
      else if (k == "noise") s.noise = v.get<double>();
      else if (k == "seed") s.seed = v.get<std::uint64_t>();
      else if (k == "start_time") s.start_time = v.get<std::int64_t>();
      else if (k == "points_per_day") s.points_per_day = v.get<double>();
      else if (k == "cohorts") {
        expect_object(v, "stream.cohorts");
        CohortSpec c;
        for (const auto& [ck, cv] : v.items()) {
          if (ck == "min_size") c.min_size = cv.get<std::size_t>();
          else if (ck == "max_size") c.max_size = cv.get<std::size_t>();
          else bad("stream.cohorts", "unknown key '" + ck + "'");
        }
        s.cohorts = c;
      } else if (k == "concepts") {
        for (const auto& c : v) {
          const auto w = c.at("weights").get<std::vector<double>>();
          s.concepts.push_back({c.value("id", std::string{}), Eigen::Map<const VectorXd>(w.data(), std::ssize(w)),
                                c.value("offset", 0.0)});
        }
      } else {
        bad("stream", "unknown key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    bad("stream", e.what());
  }
  return s;
}

void ExperimentConfig::validate() const {
  if (stream.has_value() == dataset.has_value()) bad("config", "exactly one of 'stream' and 'dataset' is required");
  try {
    hyper.validate();
    for (const auto& s : setups) check_setup_name(s);
  } catch (const std::invalid_argument& e) {
    bad("config", e.what());
  }
  if (setups.empty()) bad("config", "'setups' is empty");
  if (seeds.empty()) bad("config", "'seeds' is empty");
  if (runs_per_config == 0) bad("config", "'runs_per_config' must be positive");
  if (!(alpha > 0 && alpha < 1)) bad("config", "'alpha' must lie in (0, 1)");
  if (output_dir.empty()) bad("config", "'output_dir' is empty");
  expand_grid(*this);
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"hyper", hyper_to_json(c.hyper)},
         {"setups", c.setups},
         {"seeds", c.seeds},
         {"runs_per_config", c.runs_per_config},
         {"output_dir", c.output_dir.string()},
         {"track_importance", c.track_importance},
         {"audit", c.audit},
         {"alpha", c.alpha},
         {"threads", c.threads},
         {"grid", c.grid}};
  if (c.stream) j["stream"] = stream_to_json(*c.stream);
  if (c.dataset) j["dataset"] = c.dataset->string();
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  expect_object(j, "config");
  ExperimentConfig c;
  const json* hyper = nullptr;
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "stream") c.stream = stream_from_json(v);
      else if (k == "dataset") c.dataset = v.get<std::string>();
      else if (k == "hyper") hyper = &v;
      else if (k == "setups") c.setups = v.get<std::vector<std::string>>();
      else if (k == "seeds") c.seeds = v.get<std::vector<std::uint64_t>>();
      else if (k == "runs_per_config") c.runs_per_config = v.get<std::size_t>();
      else if (k == "output_dir") c.output_dir = v.get<std::string>();
      else if (k == "track_importance") c.track_importance = v.get<bool>();
      else if (k == "audit") c.audit = v.get<bool>();
      else if (k == "alpha") c.alpha = v.get<double>();
      else if (k == "threads") c.threads = v.get<unsigned>();
      else if (k == "grid") {
        if (!v.is_array()) bad("config.grid", "expected an array of hyper objects");
        c.grid = v.get<std::vector<json>>();
      } else {
        bad("config", "unknown key '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    bad("config", e.what());
  }
  if (hyper) c.hyper = hyper_from_json(*hyper);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    bad(path.string(), e.what());
  }
  return config_from_json(j);
}

std::vector<Hyperparams> expand_grid(const ExperimentConfig& cfg) {
  if (cfg.grid.empty()) return {cfg.hyper};
  std::vector<Hyperparams> out;
  for (const auto& g : cfg.grid) out.push_back(hyper_from_json(g, cfg.hyper));
  return out;
}

Points source_points(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.dataset) return load_dataset(*cfg.dataset).points;
  auto spec = *cfg.stream;
  spec.seed += seed;
  return generate_stream(spec);
}

}  // namespace lifelong
