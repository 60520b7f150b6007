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

#include "superpol/superpol.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "superpol/bandit.hpp"
#include "superpol/config.hpp"
#include "superpol/envs.hpp"
#include "superpol/error.hpp"
#include "superpol/eval.hpp"
#include "superpol/io.hpp"
#include "superpol/repro.hpp"
#include "superpol/selfcheck.hpp"
#include "superpol/sequential.hpp"
#include "superpol/version.hpp"

using namespace superpol;

struct superpol_options {
  std::map<std::string, std::string> values;
};

struct superpol_dataset {
  std::variant<BanditDataset, SequentialDataset> data;
};

struct superpol_model {
  std::variant<BanditFit, SequentialFit> fit;
  std::variant<BanditDataset, SequentialDataset> data;
};

namespace {

thread_local std::string g_last_error;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "spec",       "eps",          "n",          "seed",        "horizon",
      "u_noise",    "reward_scale", "noise_sd",   "kind",        "bridge",
      "projection", "lambda",       "mu",         "U",           "Delta",
      "mu_proj",    "cv_folds",     "bridge_grid", "projection_grid", "reps",
      "jobs",       "oracle",       "episodes",   "reference_samples", "oracle_seed",
      "train_fraction", "splits",   "config",     "out"};
  return keys;
}

template <class F>
superpol_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return SUPERPOL_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<superpol_status>(static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SUPERPOL_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SUPERPOL_INTERNAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

class Options {
 public:
  explicit Options(const superpol_options* o) : o_(o) {}

  bool has(const std::string& key) const {
    return o_ && o_->values.count(key) > 0;
  }
  std::string str(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    return o_->values.at(key);
  }
  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    try {
      return parse_double(o_->values.at(key));
    } catch (const Error&) {
      fail(ErrorCode::kInvalidArgument, "option " + key + ": not a number");
    }
  }
  std::optional<double> optional_real(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return real(key, 0.0);
  }
  std::uint64_t uint(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = o_->values.at(key);
    char* end = nullptr;
    errno = 0;
    const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0' || errno != 0 || v[0] == '-') {
      fail(ErrorCode::kInvalidArgument, "option " + key + ": not a non-negative integer");
    }
    return parsed;
  }
  int integer(const std::string& key, int fallback) const {
    const std::uint64_t v = uint(key, static_cast<std::uint64_t>(fallback));
    require(v <= 1000000000ULL, "option " + key + ": too large");
    return static_cast<int>(v);
  }
  std::vector<double> grid(const std::string& key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    std::istringstream in(o_->values.at(key));
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) out.push_back(parse_double(item));
    }
    return out;
  }
  std::vector<PolicyClass> kinds(std::vector<PolicyClass> fallback) const {
    if (!has("kind")) return fallback;
    std::vector<PolicyClass> out;
    std::istringstream in(o_->values.at("kind"));
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) out.push_back(parse_policy_class(item));
    }
    require(!out.empty(), "option kind is empty");
    return out;
  }

 private:
  const superpol_options* o_;
};

EstimatorConfig estimator_from(const Options& o) {
  EstimatorConfig e;
  e.lambda = o.optional_real("lambda");
  e.mu = o.optional_real("mu");
  e.u = o.optional_real("U");
  e.delta = o.optional_real("Delta");
  e.mu_proj = o.optional_real("mu_proj");
  if (o.has("cv_folds") || o.has("bridge_grid") || o.has("projection_grid")) {
    CvSpec cv;
    cv.folds = o.integer("cv_folds", 5);
    cv.bridge_grid = o.grid("bridge_grid");
    cv.projection_grid = o.grid("projection_grid");
    e.cv = cv;
  }
  e.seed = o.uint("seed", 1);
  e.check();
  return e;
}

std::pair<std::string, std::string> default_backends(const std::string& spec) {
  if (spec == "toy" || spec == "discrete") return {"tabular", "delta_ridge"};
  return {"gaussian_minimax", "linear"};
}

Backends backends_from(const Options& o, const std::string& spec) {
  const auto [bridge, projection] = default_backends(spec);
  return parse_backends(o.str("bridge", bridge), o.str("projection", projection));
}

// Spec name implied by a dataset: binary-coded features read as discrete.
std::string implied_spec(const BanditDataset& d) {
  const auto binary = [](const Matrix& m) {
    return (m.array() == 0.0 || m.array() == 1.0).all();
  };
  return binary(d.s) && binary(d.z) && binary(d.w) ? "discrete" : "continuous";
}

bool is_sequential_spec(const std::string& spec) { return spec == "sequential"; }

std::vector<PolicyClass> default_kinds(bool sequential) {
  if (sequential) return {PolicyClass::kCommon, PolicyClass::kSuperSeq};
  return {PolicyClass::kSOnly, PolicyClass::kSZ, PolicyClass::kSuper};
}

TableConfig table_from(const Options& o) {
  TableConfig t;
  t.table = "custom";
  t.spec = o.str("spec", "discrete");
  const bool sequential = is_sequential_spec(t.spec);
  t.settings = {o.real("eps", sequential ? 0.1 : 0.5)};
  t.n = o.uint("n", 1000);
  t.reps = o.integer("reps", 10);
  t.seed = o.uint("seed", 1);
  t.kinds = o.kinds(default_kinds(sequential));
  const auto [bridge, projection] = default_backends(t.spec);
  t.bridge = o.str("bridge", bridge);
  t.projection = o.str("projection", projection);
  t.estimator = estimator_from(o);
  const bool finite = t.spec == "toy" || t.spec == "discrete";
  t.oracle.mode = parse_oracle_mode(o.str("oracle", finite ? "exact" : "mc"));
  t.oracle.episodes = o.uint("episodes", t.oracle.episodes);
  t.oracle.reference_samples = o.uint("reference_samples", t.oracle.reference_samples);
  t.oracle.seed = o.uint("oracle_seed", t.oracle.seed);
  t.noise_sd = o.real("noise_sd", t.noise_sd);
  t.reward_scale = o.real("reward_scale", t.reward_scale);
  t.horizon = o.integer("horizon", t.horizon);
  t.u_noise = o.real("u_noise", t.u_noise);
  t.decimals = 4;
  t.check();
  return t;
}

std::string csv_of(const BanditDataset& d) {
  std::ostringstream out;
  write_bandit_csv(out, d);
  return out.str();
}

std::string csv_of(const SequentialDataset& d) {
  std::ostringstream out;
  write_sequential_csv(out, d);
  return out.str();
}

void check_out(const void* p) {
  if (!p) fail(ErrorCode::kInvalidArgument, "null output pointer");
}

}  // namespace

extern "C" {

const char* superpol_version(void) { return kVersion; }

const char* superpol_last_error(void) { return g_last_error.c_str(); }

const char* superpol_status_name(superpol_status status) {
  switch (status) {
    case SUPERPOL_OK: return "ok";
    case SUPERPOL_INVALID_ARGUMENT: return "invalid argument";
    case SUPERPOL_IO: return "i/o error";
    case SUPERPOL_NUMERIC: return "numerical failure";
    case SUPERPOL_DATA: return "invalid data";
    case SUPERPOL_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void superpol_string_free(char* text) { std::free(text); }

superpol_status superpol_options_create(superpol_options** out) {
  return guarded([&] {
    check_out(out);
    *out = new superpol_options();
  });
}

void superpol_options_free(superpol_options* options) { delete options; }

superpol_status superpol_options_set(superpol_options* options, const char* key,
                                     const char* value) {
  return guarded([&] {
    require(options && key && value, "null argument");
    require(known_keys().count(key) > 0, std::string("unknown option '") + key + "'");
    options->values[key] = value;
  });
}

const char* superpol_options_get(const superpol_options* options, const char* key) {
  if (!options || !key) return nullptr;
  auto it = options->values.find(key);
  return it == options->values.end() ? nullptr : it->second.c_str();
}

superpol_status superpol_generate(const superpol_options* options,
                                  superpol_dataset** out) {
  return guarded([&] {
    check_out(out);
    const Options o(options);
    const TableConfig t = table_from(o);
    const EnvSpec spec = make_spec(t, t.settings[0]);
    auto handle = std::make_unique<superpol_dataset>();
    if (const auto* seq = std::get_if<SequentialSpec>(&spec)) {
      handle->data = sample(*seq, t.n, t.seed);
    } else if (const auto* c = std::get_if<ContinuousBanditSpec>(&spec)) {
      handle->data = sample(*c, t.n, t.seed);
    } else {
      handle->data = sample(std::get<FiniteBanditSpec>(spec), t.n, t.seed);
    }
    *out = handle.release();
  });
}

superpol_status superpol_describe_spec(const superpol_options* options, char** json) {
  return guarded([&] {
    check_out(json);
    const Options o(options);
    const TableConfig t = table_from(o);
    nlohmann::json doc = {{"tool", std::string("superpol ") + kVersion},
                          {"spec", t.spec},
                          {t.spec == "sequential" ? "delta" : "eps", t.settings[0]},
                          {"n", t.n},
                          {"seed", t.seed}};
    if (t.spec == "continuous") {
      doc["noise_sd"] = t.noise_sd;
      doc["reward_scale"] = t.reward_scale;
    } else if (t.spec == "sequential") {
      doc["horizon"] = t.horizon;
      doc["u_noise"] = t.u_noise;
      doc["reward_scale"] = t.reward_scale;
      doc["reward_bound"] = 1.1 * std::abs(t.reward_scale);
    }
    *json = copy_string(doc.dump(2) + "\n");
  });
}

superpol_status superpol_dataset_load(const char* path, superpol_dataset** out) {
  return guarded([&] {
    require(path != nullptr, "null path");
    check_out(out);
    auto handle = std::make_unique<superpol_dataset>();
    if (is_sequential_csv(path)) {
      handle->data = load_sequential(path);
    } else {
      handle->data = load_bandit(path);
    }
    *out = handle.release();
  });
}

superpol_status superpol_dataset_save(const superpol_dataset* data, const char* path) {
  return guarded([&] {
    require(data && path, "null argument");
    std::visit([&](const auto& d) { write_file_atomic(path, csv_of(d)); }, data->data);
  });
}

superpol_status superpol_dataset_info_get(const superpol_dataset* data,
                                          superpol_dataset_info* info) {
  return guarded([&] {
    require(data && info, "null argument");
    *info = superpol_dataset_info{};
    if (const auto* b = std::get_if<BanditDataset>(&data->data)) {
      info->sequential = 0;
      info->rows = b->rows();
      info->horizon = 1;
      info->num_actions = b->num_actions;
      info->s_cols = static_cast<size_t>(b->s.cols());
      info->z_cols = static_cast<size_t>(b->z.cols());
      info->w_cols = static_cast<size_t>(b->w.cols());
    } else {
      const auto& s = std::get<SequentialDataset>(data->data);
      info->sequential = 1;
      info->rows = s.rows();
      info->horizon = s.horizon();
      info->num_actions = s.num_actions;
      info->s_cols = static_cast<size_t>(s.steps[0].o.cols());
      info->z_cols = static_cast<size_t>(s.o0.cols());
      info->w_cols = static_cast<size_t>(s.steps[0].w.cols());
    }
  });
}

void superpol_dataset_free(superpol_dataset* data) { delete data; }

superpol_status superpol_fit(const superpol_dataset* data,
                             const superpol_options* options, superpol_model** out) {
  return guarded([&] {
    require(data != nullptr, "null dataset");
    check_out(out);
    const Options o(options);
    const EstimatorConfig est = estimator_from(o);
    auto model = std::make_unique<superpol_model>();
    model->data = data->data;
    if (const auto* b = std::get_if<BanditDataset>(&data->data)) {
      const std::vector<PolicyClass> kinds = o.kinds({PolicyClass::kSuper});
      require(kinds.size() == 1, "fit takes a single policy class");
      model->fit = learn(*b, kinds[0], est, backends_from(o, o.str("spec", implied_spec(*b))));
    } else {
      const auto& s = std::get<SequentialDataset>(data->data);
      const std::vector<PolicyClass> kinds = o.kinds({PolicyClass::kSuperSeq});
      require(kinds.size() == 1, "fit takes a single policy class");
      model->fit = learn_seq(s, kinds[0], est, backends_from(o, "sequential"));
    }
    *out = model.release();
  });
}

superpol_status superpol_model_act(const superpol_model* model, const double* s,
                                   size_t s_len, const double* z, size_t z_len,
                                   int recommended, int* action) {
  return guarded([&] {
    require(model != nullptr, "null model");
    check_out(action);
    const auto* fit = std::get_if<BanditFit>(&model->fit);
    require(fit != nullptr, "model is sequential; use superpol_model_act_seq");
    require((s || s_len == 0) && (z || z_len == 0), "null input array");
    *action = fit->act(std::span<const double>(s, s_len), std::span<const double>(z, z_len),
                       recommended);
  });
}

superpol_status superpol_model_act_seq(const superpol_model* model, int t,
                                       const double* observations,
                                       size_t observations_len, const int* own_actions,
                                       const int* behavior_actions, int* action) {
  return guarded([&] {
    require(model != nullptr, "null model");
    check_out(action);
    const auto* fit = std::get_if<SequentialFit>(&model->fit);
    require(fit != nullptr, "model is a bandit policy; use superpol_model_act");
    require(t >= 1, "step must be >= 1");
    require(observations || observations_len == 0, "null observations");
    require(own_actions || t == 1, "null own actions");
    require(behavior_actions != nullptr, "null behavior actions");
    const auto steps = static_cast<std::size_t>(t);
    *action = fit->act(t, std::span<const double>(observations, observations_len),
                       std::span<const int>(own_actions, steps - 1),
                       std::span<const int>(behavior_actions, steps));
  });
}

superpol_status superpol_model_value(const superpol_model* model,
                                     const superpol_dataset* data, double* value) {
  return guarded([&] {
    require(model && data, "null argument");
    check_out(value);
    if (const auto* fit = std::get_if<BanditFit>(&model->fit)) {
      const auto* b = std::get_if<BanditDataset>(&data->data);
      require(b != nullptr, "a bandit model needs bandit data");
      *value = estimate_value(fit->rule(), fit->bridge.q, *b);
    } else {
      const auto* s = std::get_if<SequentialDataset>(&data->data);
      require(s != nullptr, "a sequential model needs episodic data");
      *value = estimate_value_seq(std::get<SequentialFit>(model->fit), *s);
    }
  });
}

superpol_status superpol_model_dump(const superpol_model* model, char** text) {
  return guarded([&] {
    require(model != nullptr, "null model");
    check_out(text);
    std::ostringstream out;
    if (const auto* fit = std::get_if<BanditFit>(&model->fit)) {
      const Penalties& p = fit->bridge.penalties;
      out << "superpol-model 1 bandit kind=" << to_string(fit->kind)
          << " actions=" << fit->num_actions << "\n";
      out << "penalties lambda=" << format_double(p.lambda) << " mu=" << format_double(p.mu)
          << " U=" << format_double(p.u) << " Delta=" << format_double(p.delta)
          << " rcond=" << format_double(fit->bridge.diagnostics.rcond) << "\n";
      out << dump(fit->bridge.q);
      for (const auto& [cls, set] : fit->projections) {
        out << "projection class=" << to_string(cls)
            << " mu_proj=" << format_double(set.mu_proj) << "\n";
        for (std::size_t a = 0; a < set.models.size(); ++a) {
          out << "action " << a << "\n" << dump(set.models[a]);
        }
      }
    } else {
      const auto& sf = std::get<SequentialFit>(model->fit);
      out << "superpol-model 1 sequential kind=" << to_string(sf.kind)
          << " horizon=" << sf.horizon << " actions=" << sf.num_actions << "\n";
      for (int t = 1; t <= sf.horizon; ++t) {
        const StageDiagnostics& d = sf.diagnostics[static_cast<std::size_t>(t - 1)];
        out << "step " << t << " components=" << d.components
            << " lambda_mu=" << format_double(d.penalties.lambda_mu())
            << " mu_proj=" << format_double(d.mu_proj) << " clipped=" << d.clipped << "\n";
        const auto& comps = sf.bridges[static_cast<std::size_t>(t - 1)];
        for (std::size_t c = 0; c < comps.size(); ++c) {
          out << "bridge step=" << t << " component=" << c << "\n" << dump(comps[c]);
        }
        const auto& sets = sf.projections[static_cast<std::size_t>(t - 1)];
        for (std::size_t k = 0; k < sets.size(); ++k) {
          for (std::size_t a = 0; a < sets[k].models.size(); ++a) {
            out << "projection step=" << t << " set=" << k << " action=" << a << "\n"
                << dump(sets[k].models[a]);
          }
        }
      }
    }
    *text = copy_string(out.str());
  });
}

superpol_status superpol_model_preview(const superpol_model* model, size_t rows,
                                       char** csv) {
  return guarded([&] {
    require(model != nullptr, "null model");
    check_out(csv);
    std::ostringstream out;
    if (const auto* fit = std::get_if<BanditFit>(&model->fit)) {
      const auto& d = std::get<BanditDataset>(model->data);
      out << "row";
      for (Eigen::Index j = 0; j < d.s.cols(); ++j) out << ",s_" << j;
      for (Eigen::Index j = 0; j < d.z.cols(); ++j) out << ",z_" << j;
      out << ",recommended,action\n";
      const std::size_t m = std::min(rows, d.rows());
      for (std::size_t i = 0; i < m; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const LevelKey s = row_key(d.s, r);
        const LevelKey z = row_key(d.z, r);
        out << i;
        for (double v : s) out << ',' << format_double(v);
        for (double v : z) out << ',' << format_double(v);
        out << ',' << d.a[i] << ',' << fit->act(s, z, d.a[i]) << '\n';
      }
    } else {
      const auto& sf = std::get<SequentialFit>(model->fit);
      const auto& d = std::get<SequentialDataset>(model->data);
      out << "row";
      for (Eigen::Index j = 0; j < d.steps[0].o.cols(); ++j) out << ",o1_" << j;
      out << ",recommended1,action1\n";
      const std::size_t m = std::min(rows, d.rows());
      for (std::size_t i = 0; i < m; ++i) {
        const LevelKey o = row_key(d.steps[0].o, static_cast<Eigen::Index>(i));
        const int rec = d.steps[0].a[i];
        out << i;
        for (double v : o) out << ',' << format_double(v);
        out << ',' << rec << ',' << sf.act(1, o, {}, std::span<const int>(&rec, 1)) << '\n';
      }
    }
    *csv = copy_string(out.str());
  });
}

void superpol_model_free(superpol_model* model) { delete model; }

superpol_status superpol_split_evaluate(const superpol_dataset* data,
                                        const superpol_options* options, char** csv,
                                        char** markdown) {
  return guarded([&] {
    require(data != nullptr, "null dataset");
    check_out(csv);
    check_out(markdown);
    const auto* b = std::get_if<BanditDataset>(&data->data);
    require(b != nullptr, "split evaluation needs bandit data");
    const Options o(options);
    SplitConfig cfg;
    cfg.train_fraction = o.real("train_fraction", 0.6);
    cfg.splits = o.integer("splits", 20);
    cfg.seed = o.uint("seed", 1);
    cfg.kinds = o.kinds({PolicyClass::kSOnly, PolicyClass::kSZ, PolicyClass::kSuper,
                         PolicyClass::kBehavior});
    cfg.estimator = estimator_from(o);
    cfg.backends = backends_from(o, o.str("spec", implied_spec(*b)));
    cfg.jobs = o.integer("jobs", 1);
    const ExperimentReport report = split_evaluate(*b, cfg);
    RenderOptions ro;
    ro.decimals = 4;
    const std::string c = render(report, ReportFormat::kCsv);
    const std::string m = render(report, ReportFormat::kMarkdown, ro);
    *csv = copy_string(c);
    *markdown = copy_string(m);
  });
}

superpol_status superpol_regret(const superpol_options* options, char** csv,
                                char** markdown) {
  return guarded([&] {
    check_out(csv);
    check_out(markdown);
    const Options o(options);
    const TableConfig t = table_from(o);
    const ExperimentReport report =
        run_replications(make_experiment(t, 0, o.integer("jobs", 1)));
    RenderOptions ro;
    ro.decimals = 4;
    const std::string c = render(report, ReportFormat::kCsv);
    const std::string m = render(report, ReportFormat::kMarkdown, ro);
    *csv = copy_string(c);
    *markdown = copy_string(m);
  });
}

superpol_status superpol_repro(const char* table, const superpol_options* options,
                               void (*progress)(const char* line, void* user), void* user,
                               char** summary) {
  return guarded([&] {
    require(table != nullptr, "null table name");
    const Options o(options);
    ReproOptions ro;
    if (o.has("reps")) ro.reps = o.integer("reps", 1);
    if (o.has("seed")) ro.seed = o.uint("seed", 1);
    ro.jobs = o.integer("jobs", 1);
    ro.config_path = o.str("config", "");
    ro.out_dir = o.str("out", "results");
    if (progress) {
      ro.progress = [progress, user](const std::string& line) {
        progress(line.c_str(), user);
      };
    }
    const ReproResult r = repro(table, ro);
    if (summary) {
      std::string text = r.summary;
      for (const std::string& f : r.files) text += "wrote " + f + "\n";
      *summary = copy_string(text);
    }
  });
}

superpol_status superpol_selfcheck(void (*line)(const char* text, void* user), void* user,
                                   int* failures) {
  return guarded([&] {
    check_out(failures);
    std::function<void(const std::string&)> sink;
    if (line) sink = [line, user](const std::string& s) { line(s.c_str(), user); };
    int failed = 0;
    for (const CheckResult& r : run_selfcheck(sink)) failed += r.passed ? 0 : 1;
    *failures = failed;
  });
}

}  // extern "C"
