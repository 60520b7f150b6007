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
#include <optional>
#include <string>
#include <vector>

#include "superpol/bandit.hpp"
#include "superpol/datamodel.hpp"
#include "superpol/envs.hpp"

namespace superpol {

enum class OracleMode { kExact, kMonteCarlo };

std::string_view to_string(OracleMode mode);
OracleMode parse_oracle_mode(std::string_view name);

struct OracleConfig {
  OracleMode mode = OracleMode::kExact;
  std::size_t episodes = 100000;           // Monte-Carlo rollouts per value
  std::size_t reference_samples = 100000;  // fit size of latent references
  std::uint64_t seed = 20240601;
};

// The policy that regret is measured against: the best rule that sees the
// latent confounder (default), or the best rule of a policy class. Class
// references need a finite spec.
struct RegretReference {
  std::optional<PolicyClass> cls;
};

// Values of decision rules under one spec. The reference policy is built
// once; Monte-Carlo values share their random numbers across rules.
class Oracle {
 public:
  Oracle(EnvSpec spec, OracleConfig cfg, RegretReference reference = {});

  double reference_value() const { return reference_value_; }
  double reference_se() const { return reference_se_; }
  double value(const BanditRule& rule) const;
  double value(const SeqRule& rule) const;
  double regret(const BanditRule& rule) const { return reference_value_ - value(rule); }
  double regret(const SeqRule& rule) const { return reference_value_ - value(rule); }
  const EnvSpec& spec() const { return spec_; }

 private:
  EnvSpec spec_;
  OracleConfig cfg_;
  double reference_value_ = 0.0;
  double reference_se_ = 0.0;
};

// Regret of one rule, building the oracle on the fly.
double regret(const BanditRule& rule, const EnvSpec& spec, const OracleConfig& cfg,
              RegretReference reference = {});

struct ExperimentConfig {
  std::string setting;  // row label, e.g. "eps=0.9"
  EnvSpec spec;
  std::size_t n = 1000;
  int replications = 1;
  std::uint64_t seed = 1;  // replication i uses seed + i
  std::vector<PolicyClass> kinds;
  EstimatorConfig estimator;
  Backends backends;
  OracleConfig oracle;
  RegretReference reference;
  int jobs = 1;

  void check() const;
};

struct ReportRow {
  std::string kind;
  std::string setting;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n_reps = 0;
};

// Rows in insertion order. `samples[k]` keeps the per-replication numbers of
// rows[k] in seed order when the report comes from replications.
struct ExperimentReport {
  std::string metric = "regret";  // or "value"
  std::vector<ReportRow> rows;
  std::vector<std::vector<double>> samples;
  std::vector<std::uint64_t> seeds;
  double reference_value = 0.0;

  void append(const ExperimentReport& other);
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator, 0 for a single value
};

Summary summarize(const std::vector<double>& values);

// Per replication: sample with seed + i, learn every kind from one shared
// bridge (or one sequential learner), and record regrets. Replications run on
// `jobs` threads; results are reduced in seed order. The first failing seed
// aborts the run.
ExperimentReport run_replications(const ExperimentConfig& cfg);

struct SplitConfig {
  double train_fraction = 0.6;
  int splits = 20;
  std::uint64_t seed = 1;  // split j uses seed + j
  std::vector<PolicyClass> kinds;
  EstimatorConfig estimator;
  Backends backends;
  int jobs = 1;
};

// Random-split evaluation: each kind is learned on the training rows and
// scored on the held-out rows with a bridge refitted on all rows. Rows carry
// the mean value over splits and its standard error in `sd`.
ExperimentReport split_evaluate(const BanditDataset& data, const SplitConfig& cfg);

enum class ReportFormat { kCsv, kMarkdown };

struct RenderOptions {
  int decimals = 2;
  bool show_sd = true;
  bool mark_best = true;  // asterisk on the best entry of each row
};

// CSV lists (kind, setting, mean, sd, n_reps) with round-trip numbers.
// Markdown pivots settings into rows and kinds into columns.
std::string render(const ExperimentReport& report, ReportFormat format,
                   const RenderOptions& options = {});
ExperimentReport parse_report_csv(const std::string& text);

struct PairedTest {
  double mean_difference = 0.0;  // mean of a - b
  double t = 0.0;
  int df = 0;
  double p_value = 1.0;  // one-sided, alternative mean(a - b) > 0
};

PairedTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace superpol
