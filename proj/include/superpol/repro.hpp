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

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "superpol/config.hpp"
#include "superpol/eval.hpp"

namespace superpol {

struct ReproOptions {
  std::optional<int> reps;             // overrides the config
  std::optional<std::uint64_t> seed;   // overrides the config
  int jobs = 1;
  std::string config_path;             // empty: shipped config for the table
  std::string out_dir = "results";
  std::function<void(const std::string&)> progress;
};

struct ReproResult {
  TableConfig config;
  ExperimentReport report;
  std::optional<PairedTest> test;  // common vs superseq, when both are run
  std::string csv;
  std::string markdown;
  std::string provenance;
  std::string summary;             // human-readable digest for stdout
  std::vector<std::string> files;  // written paths
};

bool is_known_table(std::string_view table);

// Runs a table config and writes <table>.csv, <table>.md and
// <table>.provenance.json under out_dir. Output bytes depend only on the
// config and the seed.
ReproResult run_table(TableConfig cfg, const ReproOptions& options);

// Loads the shipped config (or options.config_path) and runs it.
ReproResult repro(std::string_view table, const ReproOptions& options);

}  // namespace superpol
