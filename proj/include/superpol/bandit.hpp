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

#include <optional>
#include <span>
#include <vector>

#include "superpol/datamodel.hpp"
#include "superpol/moments.hpp"

namespace superpol {

enum class BridgeKind { kTabular, kMinimax };

struct Backends {
  BridgeKind bridge = BridgeKind::kMinimax;
  KernelFamily bridge_family = KernelFamily::kGaussian;  // min-max only
  ProjectionBackend projection;
};

// Seeds derived from EstimatorConfig::seed for the two tuning searches.
std::uint64_t bridge_cv_seed(std::uint64_t seed);
std::uint64_t projection_cv_seed(std::uint64_t seed);

// q-inputs [W | S | onehot(A)] and instruments [Z | S | onehot(A)].
MomentProblem bandit_problem(const BanditDataset& data);
Matrix bandit_q_inputs(const Matrix& w, const Matrix& s, const Actions& a,
                       int num_actions);

// Fits a bridge with the backend, choosing lambda * mu by cross-validation
// when a bridge grid is configured.
struct BridgeResult {
  BridgeFunction q;
  Penalties penalties;
  BridgeDiagnostics diagnostics;
};

BridgeResult fit_bridge(const MomentProblem& problem, const EstimatorConfig& cfg,
                        const Backends& backends);

// Bridge fits that share inputs and differ only in targets. Penalties are
// either given or chosen on the problem's own targets; kernels and the
// factorization are built once.
class BridgeSolver {
 public:
  BridgeSolver(const MomentProblem& problem, const EstimatorConfig& cfg,
               const Backends& backends,
               std::optional<Penalties> fixed = std::nullopt);

  BridgeResult solve(const Vector& targets) const;
  const Penalties& penalties() const { return penalties_; }

 private:
  MomentProblem problem_;
  Backends backends_;
  Penalties penalties_;
  std::vector<double> cv_scores_;
  std::optional<MinimaxSystem> system_;
  std::optional<MinimaxSystem::Factor> factor_;
};

// Regresses each column of `targets` on `inputs`; the ridge is chosen by
// cross-validation when a projection grid is configured.
struct ProjectionSet {
  std::vector<ProjectionModel> models;  // one per target column
  double mu_proj = 0.0;
};

ProjectionSet fit_projections(const Matrix& inputs, const Matrix& targets,
                              const EstimatorConfig& cfg, const Backends& backends,
                              double default_mu);

// Columns a bandit policy class conditions on, in order:
// SOnly [S], SZ [S, Z], SA [S, dummies(A')], Super [S, Z, dummies(A')].
Matrix conditioning_inputs(PolicyClass kind, const Matrix& s, const Matrix& z,
                           const Actions& recommended, int num_actions);
std::vector<double> conditioning_row(PolicyClass kind, std::span<const double> s,
                                     std::span<const double> z, int recommended,
                                     int num_actions);

// Index of the largest score; ties go to the smallest index.
int argmax_first(std::span<const double> scores);

class BanditFit {
 public:
  PolicyClass kind = PolicyClass::kSuper;
  int num_actions = 2;
  Eigen::Index s_cols = 0;
  Eigen::Index z_cols = 0;
  BridgeResult bridge;
  // Projections per action, tried in order; the first set that covers the
  // query point decides. Only delta projections can fail to cover, so the
  // coarser classes follow the requested one as fallbacks.
  std::vector<std::pair<PolicyClass, ProjectionSet>> projections;

  int act(std::span<const double> s, std::span<const double> z,
          int recommended) const;
  std::vector<double> scores(std::span<const double> s, std::span<const double> z,
                             int recommended) const;
  BanditRule rule() const;
};

BanditFit learn(const BanditDataset& data, PolicyClass kind,
                const EstimatorConfig& cfg, const Backends& backends);
// Reuses one fitted bridge for several policy classes.
BanditFit learn_with_bridge(const BanditDataset& data, PolicyClass kind,
                            const BridgeResult& bridge, const EstimatorConfig& cfg,
                            const Backends& backends);

// Mean over rows of q(W_i, S_i, a_i) where a_i = policy(S_i, Z_i, A_i).
double estimate_value(const BanditRule& policy, const BridgeFunction& q,
                      const BanditDataset& data);

}  // namespace superpol
