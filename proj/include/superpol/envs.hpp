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
#include <variant>
#include <vector>

#include "superpol/datamodel.hpp"

namespace superpol {

// One joint level (s, u) of a finite contextual bandit together with the
// conditional laws given it.
struct FiniteCell {
  int s_level = 0;
  int u_level = 0;
  double prob = 0.0;                 // P(S = s, U = u)
  std::vector<double> behavior;      // P(A = a | s, u), size K
  std::vector<double> z_probs;       // P(Z = z | s, u) over z levels
  std::vector<double> w_probs;       // P(W = w | s, u) over w levels
  std::vector<double> mean_reward;   // E[R | s, u, A = a], size K
};

// Finite confounded bandit: levels of S, U, Z, W are rows of values; the
// reward is mean_reward plus Normal(0, noise_sd) noise.
struct FiniteBanditSpec {
  std::string name = "finite";
  double epsilon = 0.5;
  int num_actions = 2;
  std::vector<std::vector<double>> s_values;
  std::vector<std::vector<double>> u_values;
  std::vector<std::vector<double>> z_values;
  std::vector<std::vector<double>> w_values;
  std::vector<FiniteCell> cells;
  double noise_sd = 0.0;

  void check() const;
};

// S, U ~ Bernoulli(0.5) independent; P(A = 1 | U = 1) = P(A = 0 | U = 0) = 1 - eps;
// R = 8 (A - 0.5)(S - 0.2)(U - 0.3) without noise. Proxies are constant, or
// equal to U when `proxies_reveal_u` is set.
FiniteBanditSpec toy_spec(double epsilon, bool proxies_reveal_u = false);

// S, U ~ Bernoulli(0.5); P(A = 1 | U = 0) = eps, P(A = 1 | U = 1) = 1 - eps;
// P(W = 1 | U) = P(Z = 1 | U) = 0.4 / 0.6 for U = 0 / 1;
// R = (U - 0.5)(A - 0.5) + Normal(0, 0.5).
FiniteBanditSpec discrete_spec(double epsilon);

// Random finite spec for property tests. Behavior probabilities are
// occasionally exactly 0 or 1.
FiniteBanditSpec random_finite_spec(std::uint64_t seed, int num_actions = 2);

// Random binary S, U, Z, W and A with informative proxies: P(Z = 1 | U) and
// P(W = 1 | U) lie in [0.05, 0.15] for U = 0 and [0.85, 0.95] for U = 1, the
// (s, u) cells have mass in [0.2, 0.3] before normalization and each action
// has probability in [0.35, 0.65].
FiniteBanditSpec random_proxy_spec(std::uint64_t seed);

// S, U ~ Normal(0, 1); P(A = 1 | U > 0) = eps, P(A = 1 | U <= 0) = 1 - eps;
// W ~ Normal(S + 3U, 1), Z ~ Normal(3S + U, 1);
// R = reward_scale * (U (A - 0.5) + Normal(0, noise_sd)).
struct ContinuousBanditSpec {
  double epsilon = 0.5;
  double noise_sd = 0.5;
  double reward_scale = 1.0;

  void check() const;
};

// Memoryless confounded episodes with horizon T:
//   U_1 ~ Uniform{-1, 1};  O_0 = U_1 + N(0, 0.3^2)
//   O_t = 0.5 U_t + N(0, 0.3^2);  W_t = U_t + N(0, 0.3^2)
//   A_t = 1{U_t > 0}, flipped with probability delta
//   R_t = reward_scale * (expit(U_t (A_t - 0.5)) + Uniform(-0.1, 0.1))
//   U_(t+1) = clip(0.5 U_t + (A_t - 0.5), -1, 1) + N(0, u_noise^2)
struct SequentialSpec {
  int horizon = 2;
  double delta = 0.1;
  double u_noise = 0.2;
  double reward_scale = 1.0;

  void check() const;
};

using EnvSpec = std::variant<FiniteBanditSpec, ContinuousBanditSpec, SequentialSpec>;

std::string spec_kind(const EnvSpec& spec);

struct ToyValues {
  double behavior = 0.0;
  double standard = 0.0;
  double super = 0.0;
};

// Values of the behavior policy, the best S-only policy and the best
// (S, A') super-policy in the toy bandit, by enumeration.
ToyValues toy_values(double epsilon);

struct BanditSample {
  BanditDataset data;
  Matrix u;  // latent confounder, one row per unit
};

struct SequentialSample {
  SequentialDataset data;
  Matrix u;  // u_1..u_T, one row per episode
};

BanditSample sample_latent(const FiniteBanditSpec& spec, std::size_t n,
                           std::uint64_t seed);
BanditSample sample_latent(const ContinuousBanditSpec& spec, std::size_t n,
                           std::uint64_t seed);
SequentialSample sample_latent(const SequentialSpec& spec, std::size_t n,
                               std::uint64_t seed);

BanditDataset sample(const FiniteBanditSpec& spec, std::size_t n, std::uint64_t seed);
BanditDataset sample(const ContinuousBanditSpec& spec, std::size_t n,
                     std::uint64_t seed);
SequentialDataset sample(const SequentialSpec& spec, std::size_t n,
                         std::uint64_t seed);

// Exact value sum over (s, u, a', z) of P(s, u) pi_b(a'|s, u) P(z|s, u)
// E[R | s, u, rule(s, z, a', u)].
double oracle_value_exact(const BanditRule& rule, const FiniteBanditSpec& spec);

struct McValue {
  double value = 0.0;
  double se = 0.0;
};

// Monte-Carlo value with noise replaced by its mean. The same seed gives the
// same latent draws for every rule.
McValue oracle_value_mc(const BanditRule& rule, const FiniteBanditSpec& spec,
                        std::size_t episodes, std::uint64_t seed);
McValue oracle_value_mc(const BanditRule& rule, const ContinuousBanditSpec& spec,
                        std::size_t episodes, std::uint64_t seed);
// Rolls episodes where the behavior agent recommends from the current latent
// state, the rule decides, and the state moves on the rule's action.
McValue oracle_value_mc(const SeqRule& rule, const SequentialSpec& spec,
                        std::size_t episodes, std::uint64_t seed);

// Exact value by enumerating latent paths; requires u_noise = 0 and a rule
// that ignores observations (it receives NaN observations).
double sequential_exact_value(const SeqRule& rule, const SequentialSpec& spec);

BanditRule behavior_rule();

// Best rule by enumeration: over the inputs of `cls`, or over (s, u) when no
// class is given. Ties go to the smallest action.
BanditRule optimal_rule(const FiniteBanditSpec& spec,
                        std::optional<PolicyClass> cls = std::nullopt);

// Reference policies that see the latent state, fitted by per-action least
// squares on fresh samples with uniformly random actions.
BanditRule latent_reference(const ContinuousBanditSpec& spec, std::size_t samples,
                            std::uint64_t seed);
SeqRule latent_reference(const SequentialSpec& spec, std::size_t samples,
                         std::uint64_t seed);

struct CattRow {
  int s_level = 0;
  double prob = 0.0;        // P(S = s)
  double treated = 0.0;     // P(A = 1 | S = s)
  std::optional<double> catt;
  std::optional<double> catc;
};

// Conditions of the strict-improvement characterization for binary actions:
//   (i)   P(0 < pi_b(1|S) < 1, CATT(S) CATC(S) < 0) > 0
//   (ii)  P(CATT(S) < 0 or CATC(S) > 0) > 0
//   (iii) P(0 < pi_b(1|S) < 1, CATT(S) < 0, CATC(S) > 0) > 0
// Strata where CATT or CATC is undefined do not satisfy conditions on it.
struct CattReport {
  std::vector<CattRow> rows;
  bool improves_on_standard = false;  // (i)
  bool improves_on_behavior = false;  // (ii)
  bool improves_on_both = false;      // (iii)
};

CattReport catt_catc(const FiniteBanditSpec& spec, double tolerance = 1e-12);

}  // namespace superpol
