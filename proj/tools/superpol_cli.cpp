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

// superpol command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "superpol/superpol.h"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageExit = 2;
constexpr int kFailureExit = 1;

// Raised for failures reported by the library; carries the status so the exit
// code can distinguish usage problems from runtime failures.
struct Failure {
  superpol_status status;
  std::string message;
};

void check(superpol_status status) {
  if (status != SUPERPOL_OK) throw Failure{status, superpol_last_error()};
}

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { superpol_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct OptionsHandle {
  superpol_options* p = nullptr;
  OptionsHandle() { check(superpol_options_create(&p)); }
  ~OptionsHandle() { superpol_options_free(p); }
  OptionsHandle(const OptionsHandle&) = delete;
  OptionsHandle& operator=(const OptionsHandle&) = delete;
  void set(const std::string& key, const std::string& value) {
    check(superpol_options_set(p, key.c_str(), value.c_str()));
  }
};

struct DatasetHandle {
  superpol_dataset* p = nullptr;
  ~DatasetHandle() { superpol_dataset_free(p); }
};

struct ModelHandle {
  superpol_model* p = nullptr;
  ~ModelHandle() { superpol_model_free(p); }
};

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw Failure{SUPERPOL_IO, "cannot write " + tmp.string()};
  }
  fs::rename(tmp, path);
}

struct Flag {
  const char* name;
  const char* key;
  const char* fallback;
  const char* help;
};

// Every flag that maps onto a library option.
const std::vector<Flag>& all_flags() {
  static const std::vector<Flag> flags{
      {"--spec", "spec", "discrete (inferred from the data with --data)",
       "environment: toy | discrete | continuous | sequential"},
      {"--eps", "eps", "0.5 (0.1 for sequential)",
       "behavior quality (confounding strength for sequential)"},
      {"--n", "n", "1000", "sample size"},
      {"--seed", "seed", "1 or $SUPERPOL_SEED", "random seed"},
      {"--horizon", "horizon", "2", "episode length for the sequential environment"},
      {"--u-noise", "u_noise", "0.2", "latent noise for the sequential environment"},
      {"--reward-scale", "reward_scale", "1", "reward multiplier"},
      {"--noise-sd", "noise_sd", "0.5", "reward noise for the continuous environment"},
      {"--kind", "kind", "super (superseq for episodic data)",
       "policy class: sonly | sz | super | common | superseq | behavior; comma list for eval"},
      {"--bridge", "bridge", "tabular for finite specs, else gaussian_minimax",
       "bridge backend: tabular | gaussian_minimax | delta_minimax"},
      {"--projection", "projection", "delta_ridge for finite specs, else linear",
       "projection backend: linear | gaussian_ridge | delta_ridge"},
      {"--lambda", "lambda", "n^-1/2", "bridge function-class penalty"},
      {"--mu", "mu", "1", "bridge norm penalty multiplier"},
      {"--U", "U", "1", "bound on the critic norm"},
      {"--Delta", "Delta", "n^-1/4", "critic tolerance"},
      {"--mu-proj", "mu_proj", "n^-1/2", "projection ridge penalty"},
      {"--cv-folds", "cv_folds", "5", "folds for penalty cross-validation"},
      {"--bridge-grid", "bridge_grid", "none", "comma list of lambda*mu values to cross-validate"},
      {"--projection-grid", "projection_grid", "none",
       "comma list of projection penalties to cross-validate"},
      {"--reps", "reps", "10 (table config for repro)", "replications"},
      {"--jobs", "jobs", "1", "parallel replications"},
      {"--oracle", "oracle", "exact for finite specs, else mc", "oracle: exact | mc"},
      {"--episodes", "episodes", "100000", "Monte Carlo episodes per policy value"},
      {"--reference-samples", "reference_samples", "100000",
       "samples for the latent reference fit"},
      {"--oracle-seed", "oracle_seed", "20240601", "seed of the Monte Carlo oracle"},
      {"--train-fraction", "train_fraction", "0.6", "training share in split evaluation"},
      {"--splits", "splits", "20", "random splits in split evaluation"},
  };
  return flags;
}

const Flag& flag_for(const std::string& key) {
  for (const Flag& f : all_flags()) {
    if (key == f.key) return f;
  }
  throw std::logic_error("no flag for " + key);
}

// Option values collected from the command line and an optional config file.
class Invocation {
 public:
  Invocation(CLI::App* app, const std::vector<std::string>& keys) : app_(app) {
    for (const std::string& key : keys) {
      const Flag& f = flag_for(key);
      CLI::Option* opt = app->add_option(f.name, values_[key], f.help)->default_str(f.fallback);
      if (key == "oracle") opt->check(CLI::IsMember({"exact", "mc"}));
      options_[key] = opt;
    }
    app->add_option("--config", config_,
                    "JSON file of option values (a provenance sidecar works too)")
        ->default_str("none");
    app->add_option("--out", out_, "output directory")->capture_default_str();
  }

  // Resolved key/value pairs: command line first, then config, then $SUPERPOL_SEED.
  std::map<std::string, std::string> resolve() const {
    std::map<std::string, std::string> out;
    if (!config_.empty() && !table_config_) {
      std::ifstream in(config_);
      if (!in) throw Failure{SUPERPOL_IO, "cannot open config " + config_};
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw Failure{SUPERPOL_INVALID_ARGUMENT, "config " + config_ + ": " + e.what()};
      }
      if (doc.contains("options")) doc = doc["options"];
      if (!doc.is_object()) {
        throw Failure{SUPERPOL_INVALID_ARGUMENT, "config " + config_ + " is not an object"};
      }
      for (const auto& [key, value] : doc.items()) {
        if (!options_.count(key)) {
          throw Failure{SUPERPOL_INVALID_ARGUMENT,
                        "config " + config_ + ": option '" + key + "' does not apply here"};
        }
        out[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
    for (const auto& [key, opt] : options_) {
      if (opt->count() > 0) out[key] = values_.at(key);
    }
    if (options_.count("seed") && !out.count("seed")) {
      if (const char* env = std::getenv("SUPERPOL_SEED"); env && *env) out["seed"] = env;
    }
    return out;
  }

  // The --config file is a table config handed to the library unparsed.
  void take_table_config() {
    table_config_ = true;
    app_->get_option("--config")
        ->description("table config JSON (a provenance sidecar works too)")
        ->default_str("shipped config of the table");
  }

  const std::string& out_dir() const { return out_; }
  const std::string& config() const { return config_; }

 private:
  CLI::App* app_;
  std::map<std::string, std::string> values_;
  std::map<std::string, CLI::Option*> options_;
  std::string config_;
  std::string out_ = "results";
  bool table_config_ = false;
};

void apply(OptionsHandle& handle, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) handle.set(key, value);
}

std::string sidecar(const std::string& command, const std::map<std::string, std::string>& values,
                    nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json doc = {{"tool", std::string("superpol ") + superpol_version()},
                        {"command", command},
                        {"options", values}};
  for (const auto& [k, v] : extra.items()) doc[k] = v;
  return doc.dump(2) + "\n";
}

const std::vector<std::string> kSpecKeys{"spec",    "eps",          "n",       "seed",
                                         "horizon", "u_noise",      "reward_scale", "noise_sd"};
const std::vector<std::string> kEstimatorKeys{
    "kind", "bridge", "projection", "lambda", "mu", "U", "Delta", "mu_proj",
    "cv_folds", "bridge_grid", "projection_grid", "seed"};

std::vector<std::string> join(std::vector<std::string> a, const std::vector<std::string>& b) {
  for (const std::string& k : b) {
    if (std::find(a.begin(), a.end(), k) == a.end()) a.push_back(k);
  }
  return a;
}

int run_gen(const Invocation& inv) {
  const auto values = inv.resolve();
  OptionsHandle opts;
  apply(opts, values);
  DatasetHandle data;
  check(superpol_generate(opts.p, &data.p));
  OwnedString spec;
  check(superpol_describe_spec(opts.p, &spec.p));
  const fs::path dir(inv.out_dir());
  fs::create_directories(dir);
  check(superpol_dataset_save(data.p, (dir / "data.csv").c_str()));
  write_atomic(dir / "data.provenance.json",
               sidecar("gen", values, {{"environment", nlohmann::json::parse(spec.str())},
                                       {"outputs", {"data.csv"}}}));
  superpol_dataset_info info{};
  check(superpol_dataset_info_get(data.p, &info));
  std::cout << "wrote " << (dir / "data.csv").string() << " (" << info.rows << " rows)\n";
  return 0;
}

int run_fit(const Invocation& inv, const std::string& data_path, std::size_t preview_rows) {
  const auto values = inv.resolve();
  OptionsHandle opts;
  apply(opts, values);
  DatasetHandle data;
  check(superpol_dataset_load(data_path.c_str(), &data.p));
  ModelHandle model;
  check(superpol_fit(data.p, opts.p, &model.p));
  OwnedString dump;
  check(superpol_model_dump(model.p, &dump.p));
  OwnedString preview;
  check(superpol_model_preview(model.p, preview_rows, &preview.p));
  double value = 0.0;
  check(superpol_model_value(model.p, data.p, &value));
  const fs::path dir(inv.out_dir());
  write_atomic(dir / "model.txt", dump.str());
  write_atomic(dir / "actions.csv", preview.str());
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  write_atomic(dir / "fit.provenance.json",
               sidecar("fit", values,
                       {{"data", fs::absolute(data_path).string()},
                        {"preview_rows", preview_rows},
                        {"estimated_value", buf},
                        {"outputs", {"model.txt", "actions.csv"}}}));
  std::cout << "estimated value on training data: " << buf << "\n"
            << "wrote " << (dir / "model.txt").string() << " and "
            << (dir / "actions.csv").string() << "\n";
  return 0;
}

int run_eval(const Invocation& inv, const std::string& data_path) {
  const auto values = inv.resolve();
  OptionsHandle opts;
  apply(opts, values);
  OwnedString csv, md;
  nlohmann::json extra;
  if (!data_path.empty()) {
    DatasetHandle data;
    check(superpol_dataset_load(data_path.c_str(), &data.p));
    check(superpol_split_evaluate(data.p, opts.p, &csv.p, &md.p));
    extra["mode"] = "split";
    extra["data"] = fs::absolute(data_path).string();
  } else {
    check(superpol_regret(opts.p, &csv.p, &md.p));
    extra["mode"] = "regret";
  }
  extra["outputs"] = {"eval.csv", "eval.md"};
  const fs::path dir(inv.out_dir());
  write_atomic(dir / "eval.csv", csv.str());
  write_atomic(dir / "eval.md", md.str());
  write_atomic(dir / "eval.provenance.json", sidecar("eval", values, extra));
  std::cout << md.str();
  return 0;
}

void print_line(const char* line, void*) {
  std::cerr << line << "\n";
}

int run_repro(const std::string& table, const Invocation& inv) {
  const auto values = inv.resolve();
  OptionsHandle opts;
  apply(opts, values);
  opts.set("out", inv.out_dir());
  if (!inv.config().empty()) opts.set("config", inv.config());
  OwnedString summary;
  check(superpol_repro(table.c_str(), opts.p, print_line, nullptr, &summary.p));
  std::cout << summary.str();
  return 0;
}

void print_stdout(const char* line, void*) {
  std::cout << line << std::endl;
}

int run_selfcheck() {
  int failures = 0;
  check(superpol_selfcheck(print_stdout, nullptr, &failures));
  std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " checks failed")
            << "\n";
  return failures == 0 ? 0 : kFailureExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn and benchmark super-policies in confounded bandits and POMDPs", "superpol"};
  app.set_version_flag("--version", std::string(superpol_version()));
  app.require_subcommand(1, 1);

  CLI::App* gen = app.add_subcommand("gen", "sample a dataset and write it with a spec sidecar");
  Invocation gen_inv(gen, kSpecKeys);

  CLI::App* fit = app.add_subcommand("fit", "learn a policy from a dataset");
  std::string fit_data;
  std::size_t preview_rows = 20;
  fit->add_option("--data", fit_data, "dataset CSV")->required();
  fit->add_option("--preview-rows", preview_rows, "rows in the chosen-action preview")
      ->capture_default_str();
  Invocation fit_inv(fit, join({"spec"}, kEstimatorKeys));

  CLI::App* eval = app.add_subcommand(
      "eval", "split evaluation of a dataset (--data) or a simulated regret experiment");
  std::string eval_data;
  eval->add_option("--data", eval_data, "bandit dataset CSV; omit for a regret experiment")
      ->default_str("none");
  Invocation eval_inv(eval, join(join(kSpecKeys, kEstimatorKeys),
                                 {"reps", "jobs", "oracle", "episodes", "reference_samples",
                                  "oracle_seed", "train_fraction", "splits"}));

  CLI::App* repro = app.add_subcommand("repro", "rerun a frozen table configuration");
  std::string table;
  repro->add_option("table", table, "table1 | table2 | table3 | table4")
      ->required()
      ->check(CLI::IsMember({"table1", "table2", "table3", "table4"}));
  Invocation repro_inv(repro, {"reps", "seed", "jobs"});
  repro_inv.take_table_config();

  CLI::App* selfcheck = app.add_subcommand("selfcheck", "run the fast invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    if (*gen) return run_gen(gen_inv);
    if (*fit) return run_fit(fit_inv, fit_data, preview_rows);
    if (*eval) return run_eval(eval_inv, eval_data);
    if (*repro) return run_repro(table, repro_inv);
    if (*selfcheck) return run_selfcheck();
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.status == SUPERPOL_INVALID_ARGUMENT ? kUsageExit : kFailureExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailureExit;
  }
  return kUsageExit;
}
