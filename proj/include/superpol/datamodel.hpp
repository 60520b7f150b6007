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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace superpol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Actions = std::vector<int>;

// Offline contextual-bandit data: state S, action proxy Z, reward proxy W,
// behavior action A and reward R, one row per unit.
struct BanditDataset {
  Matrix s;
  Matrix z;
  Matrix w;
  Actions a;
  Vector r;
  int num_actions = 2;

  std::size_t rows() const { return a.size(); }
};

// One decision point of an episode; all blocks have one row per episode.
struct StepBlock {
  Matrix o;
  Actions a;
  Vector r;
  Matrix w;
};

// Episodic data for horizon T = steps.size(). o0 is the observation collected
// before the first decision, used as the instrument for every step.
struct SequentialDataset {
  Matrix o0;
  std::vector<StepBlock> steps;
  int num_actions = 2;
  double reward_bound = 1.0;

  int horizon() const { return static_cast<int>(steps.size()); }
  std::size_t rows() const { return static_cast<std::size_t>(o0.rows()); }
  // Columns of o_1..o_t concatenated, row per episode.
  Matrix observation_history(int t) const;
  // Behavior actions a_1..a_t, one vector per episode.
  std::vector<Actions> action_history(int t) const;
};

struct ValidationReport {
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

ValidationReport validate(const BanditDataset& data);
ValidationReport validate(const SequentialDataset& data);

BanditDataset take_rows(const BanditDataset& data,
                        std::span<const std::size_t> rows);
SequentialDataset take_rows(const SequentialDataset& data,
                            std::span<const std::size_t> rows);

struct RowSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

// Random row partition with |train| = round(train_fraction * n).
RowSplit split_rows(std::size_t n, double train_fraction, std::uint64_t seed);

std::pair<BanditDataset, BanditDataset> random_split(const BanditDataset& data,
                                                     double train_fraction,
                                                     std::uint64_t seed);
std::pair<SequentialDataset, SequentialDataset> random_split(
    const SequentialDataset& data, double train_fraction, std::uint64_t seed);

// Which inputs a learned policy may look at. SOnly/SZ/SA/Super are bandit
// classes (S; S,Z; S,A'; S,Z,A'); Behavior replays the recommended action;
// Common/SuperSeq are the sequential classes without and with the behavior
// agent's actions.
enum class PolicyClass { kSOnly, kSZ, kSA, kSuper, kBehavior, kCommon, kSuperSeq };

std::string_view to_string(PolicyClass kind);
PolicyClass parse_policy_class(std::string_view name);
bool is_bandit_class(PolicyClass kind);

// What a bandit decision rule sees for one unit. `u` holds the latent
// confounder and is only read by reference policies inside simulators.
struct BanditContext {
  std::span<const double> s;
  std::span<const double> z;
  int recommended = 0;
  std::span<const double> u;
};

using BanditRule = std::function<int(const BanditContext&)>;

// What a sequential decision rule sees at step t (1-based): observations
// o_1..o_t concatenated, its own earlier actions, and the behavior agent's
// recommendations a_1..a_t. `u` holds latent states u_1..u_t (simulators only).
struct SeqContext {
  int t = 1;
  std::span<const double> observations;
  std::span<const int> own_actions;
  std::span<const int> behavior_actions;
  std::span<const double> u;
};

using SeqRule = std::function<int(const SeqContext&)>;

struct CvSpec {
  int folds = 5;
  std::vector<double> bridge_grid;      // candidate lambda * mu products
  std::vector<double> projection_grid;  // candidate projection ridges
};

// Resolved penalty set; see EstimatorConfig::resolve for the defaults.
struct Penalties {
  double lambda = 0.0;
  double mu = 0.0;
  double u = 0.0;
  double delta = 0.0;
  double mu_proj = 0.0;

  double lambda_mu() const { return lambda * mu; }
};

// Tuning of the min-max bridge estimator and of the projection step. Unset
// penalties default to lambda = n^-1/2, mu = 1, U = 1, Delta = n^-1/4 and
// mu_proj = n^-1/2 for a fit on n rows.
struct EstimatorConfig {
  std::optional<double> lambda;
  std::optional<double> mu;
  std::optional<double> u;
  std::optional<double> delta;
  std::optional<double> mu_proj;
  std::optional<CvSpec> cv;
  std::uint64_t seed = 0;

  Penalties resolve(std::size_t n) const;
  // Throws on a non-positive penalty or fewer than two folds.
  void check() const;
};

// Actions as K indicator columns.
Matrix one_hot(const Actions& actions, int num_actions);
// Actions as K-1 indicator columns for actions 1..K-1.
Matrix dummies(const Actions& actions, int num_actions);
void append_one_hot(std::vector<double>& row, int action, int num_actions);
void append_dummies(std::vector<double>& row, int action, int num_actions);

// Horizontal concatenation of blocks with equal row counts.
Matrix hcat(std::initializer_list<const Matrix*> blocks);

}  // namespace superpol
