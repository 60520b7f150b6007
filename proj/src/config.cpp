// Copyright 2026 The superpol Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "superpol/config.hpp"

#include <cstdlib>
#include <set>

#include <json.hpp>

#include "superpol/error.hpp"
#include "superpol/io.hpp"

#ifndef SUPERPOL_CONFIG_DIR
#define SUPERPOL_CONFIG_DIR "configs"
#endif

namespace superpol {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  if (!obj.is_object()) fail(ErrorCode::kData, where + " must be a JSON object");
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) {
      fail(ErrorCode::kData, "unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kData, std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
void read_optional(const json& obj, const char* key, std::optional<T>& out) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return;
  T v{};
  read(obj, key, v);
  out = v;
}

EstimatorConfig parse_estimator(const json& obj) {
  reject_unknown(obj, {"lambda", "mu", "U", "Delta", "mu_proj", "cv"}, "estimator");
  EstimatorConfig e;
  read_optional(obj, "lambda", e.lambda);
  read_optional(obj, "mu", e.mu);
  read_optional(obj, "U", e.u);
  read_optional(obj, "Delta", e.delta);
  read_optional(obj, "mu_proj", e.mu_proj);
  if (auto it = obj.find("cv"); it != obj.end() && !it->is_null()) {
    reject_unknown(*it, {"folds", "bridge_grid", "projection_grid"}, "estimator.cv");
    CvSpec cv;
    read(*it, "folds", cv.folds);
    read(*it, "bridge_grid", cv.bridge_grid);
    read(*it, "projection_grid", cv.projection_grid);
    e.cv = cv;
  }
  return e;
}

json estimator_json(const EstimatorConfig& e) {
  json out = json::object();
  if (e.lambda) out["lambda"] = *e.lambda;
  if (e.mu) out["mu"] = *e.mu;
  if (e.u) out["U"] = *e.u;
  if (e.delta) out["Delta"] = *e.delta;
  if (e.mu_proj) out["mu_proj"] = *e.mu_proj;
  if (e.cv) {
    out["cv"] = {{"folds", e.cv->folds},
                 {"bridge_grid", e.cv->bridge_grid},
                 {"projection_grid", e.cv->projection_grid}};
  }
  return out;
}

std::string format_setting(double v) { return format_double(v); }

}  // namespace

void TableConfig::check() const {
  require(spec == "toy" || spec == "discrete" || spec == "continuous" ||
              spec == "sequential",
          "unknown spec '" + spec + "'");
  require(!settings.empty(), "config lists no settings");
  for (double s : settings) require(s >= 0.0 && s <= 1.0, "settings must lie in [0, 1]");
  require(n >= 10, "sample size must be >= 10");
  require(reps >= 1, "replications must be >= 1");
  require(decimals >= 0 && decimals <= 17, "decimals must lie in 0..17");
  require(horizon >= 1, "horizon must be >= 1");
  parse_backends(bridge, projection);
  estimator.check();
}

TableConfig parse_table_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kData, std::string("config is not valid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("config") && doc.contains("config_hash")) {
    doc = doc["config"];
  }
  reject_unknown(doc,
                 {"table", "spec", "settings", "n", "reps", "seed", "kinds", "bridge",
                  "projection", "estimator", "oracle", "noise_sd", "reward_scale",
                  "horizon", "u_noise", "decimals", "show_sd", "banner"},
                 "config");
  TableConfig cfg;
  read(doc, "table", cfg.table);
  read(doc, "spec", cfg.spec);
  read(doc, "settings", cfg.settings);
  read(doc, "n", cfg.n);
  read(doc, "reps", cfg.reps);
  read(doc, "seed", cfg.seed);
  if (auto it = doc.find("kinds"); it != doc.end()) {
    cfg.kinds.clear();
    for (const std::string& k : it->get<std::vector<std::string>>()) {
      cfg.kinds.push_back(parse_policy_class(k));
    }
  }
  read(doc, "bridge", cfg.bridge);
  read(doc, "projection", cfg.projection);
  if (auto it = doc.find("estimator"); it != doc.end()) cfg.estimator = parse_estimator(*it);
  if (auto it = doc.find("oracle"); it != doc.end()) {
    reject_unknown(*it, {"mode", "episodes", "reference_samples", "seed"}, "oracle");
    std::string mode = std::string(to_string(cfg.oracle.mode));
    read(*it, "mode", mode);
    cfg.oracle.mode = parse_oracle_mode(mode);
    read(*it, "episodes", cfg.oracle.episodes);
    read(*it, "reference_samples", cfg.oracle.reference_samples);
    read(*it, "seed", cfg.oracle.seed);
  }
  read(doc, "noise_sd", cfg.noise_sd);
  read(doc, "reward_scale", cfg.reward_scale);
  read(doc, "horizon", cfg.horizon);
  read(doc, "u_noise", cfg.u_noise);
  read(doc, "decimals", cfg.decimals);
  read(doc, "show_sd", cfg.show_sd);
  read(doc, "banner", cfg.banner);
  cfg.check();
  return cfg;
}

TableConfig load_table_config(const std::string& path) {
  return parse_table_config(read_text_file(path));
}

std::string to_json(const TableConfig& cfg) {
  json kinds = json::array();
  for (PolicyClass k : cfg.kinds) kinds.push_back(std::string(to_string(k)));
  json out = {
      {"table", cfg.table},
      {"spec", cfg.spec},
      {"settings", cfg.settings},
      {"n", cfg.n},
      {"reps", cfg.reps},
      {"seed", cfg.seed},
      {"kinds", kinds},
      {"bridge", cfg.bridge},
      {"projection", cfg.projection},
      {"estimator", estimator_json(cfg.estimator)},
      {"oracle",
       {{"mode", std::string(to_string(cfg.oracle.mode))},
        {"episodes", cfg.oracle.episodes},
        {"reference_samples", cfg.oracle.reference_samples},
        {"seed", cfg.oracle.seed}}},
      {"noise_sd", cfg.noise_sd},
      {"reward_scale", cfg.reward_scale},
      {"horizon", cfg.horizon},
      {"u_noise", cfg.u_noise},
      {"decimals", cfg.decimals},
      {"show_sd", cfg.show_sd},
      {"banner", cfg.banner},
  };
  return out.dump(2) + "\n";
}

Backends parse_backends(std::string_view bridge, std::string_view projection) {
  Backends b;
  if (bridge == "tabular") {
    b.bridge = BridgeKind::kTabular;
  } else if (bridge == "gaussian_minimax") {
    b.bridge = BridgeKind::kMinimax;
    b.bridge_family = KernelFamily::kGaussian;
  } else if (bridge == "delta_minimax") {
    b.bridge = BridgeKind::kMinimax;
    b.bridge_family = KernelFamily::kDelta;
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown bridge backend '" + std::string(bridge) + "'");
  }
  if (projection == "linear") {
    b.projection = {ProjectionKind::kLinear, KernelFamily::kGaussian};
  } else if (projection == "gaussian_ridge") {
    b.projection = {ProjectionKind::kKernelRidge, KernelFamily::kGaussian};
  } else if (projection == "delta_ridge") {
    b.projection = {ProjectionKind::kKernelRidge, KernelFamily::kDelta};
  } else {
    fail(ErrorCode::kInvalidArgument,
         "unknown projection backend '" + std::string(projection) + "'");
  }
  return b;
}

std::string_view bridge_name(const Backends& b) {
  if (b.bridge == BridgeKind::kTabular) return "tabular";
  return b.bridge_family == KernelFamily::kDelta ? "delta_minimax" : "gaussian_minimax";
}

std::string_view projection_name(const Backends& b) {
  if (b.projection.kind == ProjectionKind::kLinear) return "linear";
  return b.projection.family == KernelFamily::kDelta ? "delta_ridge" : "gaussian_ridge";
}

Backends make_backends(const TableConfig& cfg) {
  return parse_backends(cfg.bridge, cfg.projection);
}

EnvSpec make_spec(const TableConfig& cfg, double setting) {
  if (cfg.spec == "toy") return toy_spec(setting);
  if (cfg.spec == "discrete") return discrete_spec(setting);
  if (cfg.spec == "continuous") {
    ContinuousBanditSpec s;
    s.epsilon = setting;
    s.noise_sd = cfg.noise_sd;
    s.reward_scale = cfg.reward_scale;
    return s;
  }
  if (cfg.spec == "sequential") {
    SequentialSpec s;
    s.horizon = cfg.horizon;
    s.delta = setting;
    s.u_noise = cfg.u_noise;
    s.reward_scale = cfg.reward_scale;
    return s;
  }
  fail(ErrorCode::kInvalidArgument, "unknown spec '" + cfg.spec + "'");
}

std::string setting_label(const TableConfig& cfg, double setting) {
  return (cfg.spec == "sequential" ? "delta=" : "eps=") + format_setting(setting);
}

ExperimentConfig make_experiment(const TableConfig& cfg, std::size_t setting_index,
                                 int jobs) {
  require(setting_index < cfg.settings.size(), "setting index out of range");
  const double setting = cfg.settings[setting_index];
  ExperimentConfig e;
  e.setting = setting_label(cfg, setting);
  e.spec = make_spec(cfg, setting);
  e.n = cfg.n;
  e.replications = cfg.reps;
  e.seed = cfg.seed;
  e.kinds = cfg.kinds;
  e.estimator = cfg.estimator;
  e.backends = make_backends(cfg);
  e.oracle = cfg.oracle;
  e.jobs = jobs;
  return e;
}

std::string config_dir() {
  if (const char* env = std::getenv("SUPERPOL_CONFIG_DIR"); env && *env) return env;
  return SUPERPOL_CONFIG_DIR;
}

std::string shipped_config_path(std::string_view table) {
  return config_dir() + "/" + std::string(table) + ".json";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace superpol
