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

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "superpol/bandit.hpp"
#include "superpol/datamodel.hpp"

namespace superpol {

// Largest number of behavior-action prefixes the super-policy learner will
// enumerate per step (|A|^(T-1)).
inline constexpr long kMaxActionTuples = 64;

// Index of an action tuple x_1..x_m in base K, first action most significant.
int encode_tuple(std::span<const int> actions, int num_actions);
std::vector<int> decode_tuple(int index, int length, int num_actions);

struct StageDiagnostics {
  Penalties penalties;
  double mu_proj = 0.0;
  int components = 0;
  int clipped = 0;           // pseudo-outcomes clipped to the reward bound
  double max_abs_target = 0.0;  // largest |scaled target|
};

// Fitted Q-bridges and per-step decision rules for one policy class.
//
// Step t (1-based) keeps one bridge component for t = T and, for the
// super-policy at t < T, one per behavior tuple a_1..a_t. The bridge takes
// [w_t | o_1..o_t | onehot(own a_1..a_(t-1)) | onehot(a)] and is stored
// multiplied back by the scaling factor T - t + 1.
//
// Decision rules hold one projection set (one model per candidate action)
// per own history and, for the super-policy at t < T, per behavior prefix
// a_1..a_(t-1). Super-policy projections read [o_1..o_t | dummies(a_1..a_t)]
// with the behavior actions; common projections read
// [o_1..o_t | dummies(own a_1..a_(t-1))].
class SequentialFit {
 public:
  PolicyClass kind = PolicyClass::kSuperSeq;
  int horizon = 1;
  int num_actions = 2;
  Eigen::Index o_cols = 0;
  std::vector<std::vector<BridgeFunction>> bridges;     // [t-1][component]
  std::vector<std::vector<ProjectionSet>> projections;  // [t-1][own * prefixes + prefix]
  std::vector<StageDiagnostics> diagnostics;            // [t-1]

  int act(int t, std::span<const double> observations,
          std::span<const int> own_actions,
          std::span<const int> behavior_actions) const;
  // Bridge component used at step t for behavior tuple a_1..a_t.
  const BridgeFunction& bridge(int t, std::span<const int> behavior_actions) const;
  // Refers to this fit; it must outlive the rule.
  SeqRule rule() const;
  int prefixes(int t) const;
};

// Backward fitted-Q learner. Stage moment problems, kernels, penalties and
// factorizations depend only on the data, so they are built once and shared by
// every policy class learned from the same learner.
class SequentialLearner {
 public:
  SequentialLearner(const SequentialDataset& data, const EstimatorConfig& cfg,
                    const Backends& backends);
  ~SequentialLearner();
  SequentialLearner(const SequentialLearner&) = delete;
  SequentialLearner& operator=(const SequentialLearner&) = delete;

  SequentialFit learn(PolicyClass kind);

 private:
  struct Stage;
  Stage& stage(int t);
  Vector pseudo_outcome(const SequentialFit& fit, int t,
                        std::span<const int> behavior_prefix) const;
  Vector evaluate_component_rows(const SequentialFit& fit, int t,
                                 std::span<const int> prefix, const Matrix& history,
                                 const Actions& candidate) const;

  SequentialDataset data_;
  EstimatorConfig cfg_;
  Backends backends_;
  std::vector<std::unique_ptr<Stage>> stages_;
  std::optional<Penalties> penalties_;
  std::optional<double> mu_proj_;
};

SequentialFit learn_seq(const SequentialDataset& data, PolicyClass kind,
                        const EstimatorConfig& cfg, const Backends& backends);

// Mean over episodes of q_1(W_1, O_1, a) at the fit's first-step action.
double estimate_value_seq(const SequentialFit& fit, const SequentialDataset& data);

// One-step episodes as bandit data with S = o_1, Z = o_0 and W = w_1.
BanditDataset as_bandit(const SequentialDataset& data);

// [w_t | o_1..o_t | history | onehot(a)] for every episode.
Matrix stage_q_inputs(const SequentialDataset& data, int t, const Matrix& history,
                      const Actions& a);
// onehot(a_1) | .. | onehot(a_(t-1)) of the observed behavior actions.
Matrix observed_history_onehot(const SequentialDataset& data, int t);

}  // namespace superpol
