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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "superpol/bandit.hpp"
#include "superpol/envs.hpp"
#include "superpol/eval.hpp"

namespace superpol {

// One experiment table: the environment family, the settings swept in its
// rows, the estimator and the oracle. Every key is optional in the JSON form;
// unknown keys are rejected.
struct TableConfig {
  std::string table = "custom";
  std::string spec = "discrete";     // toy | discrete | continuous | sequential
  std::vector<double> settings{0.5};  // epsilon, or delta for sequential specs
  std::size_t n = 1000;
  int reps = 50;
  std::uint64_t seed = 1;
  std::vector<PolicyClass> kinds{PolicyClass::kSOnly, PolicyClass::kSZ,
                                 PolicyClass::kSuper};
  std::string bridge = "gaussian_minimax";  // tabular | gaussian_minimax | delta_minimax
  std::string projection = "linear";        // linear | gaussian_ridge | delta_ridge
  EstimatorConfig estimator;
  OracleConfig oracle;
  double noise_sd = 0.5;      // continuous bandit reward noise
  double reward_scale = 1.0;
  int horizon = 2;
  double u_noise = 0.2;
  int decimals = 2;
  bool show_sd = true;
  std::string banner;

  void check() const;
};

// Parses a table config, or the "config" member of a provenance record.
TableConfig parse_table_config(std::string_view json_text);
TableConfig load_table_config(const std::string& path);
// Canonical JSON with every field spelled out.
std::string to_json(const TableConfig& cfg);

Backends parse_backends(std::string_view bridge, std::string_view projection);
std::string_view bridge_name(const Backends& backends);
std::string_view projection_name(const Backends& backends);

Backends make_backends(const TableConfig& cfg);
EnvSpec make_spec(const TableConfig& cfg, double setting);
std::string setting_label(const TableConfig& cfg, double setting);
ExperimentConfig make_experiment(const TableConfig& cfg, std::size_t setting_index,
                                 int jobs);

// $SUPERPOL_CONFIG_DIR when set, otherwise the shipped configs directory.
std::string config_dir();
std::string shipped_config_path(std::string_view table);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace superpol
