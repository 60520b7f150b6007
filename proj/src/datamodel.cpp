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

#include "superpol/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "superpol/error.hpp"
#include "superpol/rng.hpp"

namespace superpol {
namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void check_actions(const Actions& a, int num_actions, const std::string& where,
                   std::vector<std::string>& failures) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || a[i] >= num_actions) {
      std::ostringstream os;
      os << "action out of range: " << where << " row " << i << " has action "
         << a[i] << " (K = " << num_actions << ")";
      failures.push_back(os.str());
      return;
    }
  }
}

Matrix take(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Vector take(const Vector& v, std::span<const std::size_t> rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Actions take(const Actions& a, std::span<const std::size_t> rows) {
  Actions out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = a[rows[i]];
  return out;
}

}  // namespace

Matrix SequentialDataset::observation_history(int t) const {
  require(t >= 1 && t <= horizon(), "observation_history: step out of range");
  const Eigen::Index d = steps[0].o.cols();
  Matrix out(static_cast<Eigen::Index>(rows()), d * t);
  for (int k = 0; k < t; ++k) out.middleCols(d * k, d) = steps[k].o;
  return out;
}

std::vector<Actions> SequentialDataset::action_history(int t) const {
  require(t >= 0 && t <= horizon(), "action_history: step out of range");
  std::vector<Actions> out(rows(), Actions(static_cast<std::size_t>(t)));
  for (int k = 0; k < t; ++k) {
    for (std::size_t i = 0; i < rows(); ++i) out[i][k] = steps[k].a[i];
  }
  return out;
}

ValidationReport validate(const BanditDataset& data) {
  ValidationReport report;
  const std::size_t n = data.a.size();
  if (n < 1) report.failures.push_back("dataset has no rows");
  const auto rows_ok = [n](Eigen::Index r) {
    return static_cast<std::size_t>(r) == n;
  };
  if (!rows_ok(data.s.rows()) || !rows_ok(data.z.rows()) ||
      !rows_ok(data.w.rows()) || !rows_ok(data.r.size())) {
    report.failures.push_back("row count mismatch between columns");
  }
  if (data.num_actions < 2) {
    report.failures.push_back("number of actions must be at least 2");
  }
  check_actions(data.a, data.num_actions, "a", report.failures);
  if (!all_finite(data.s) || !all_finite(data.z) || !all_finite(data.w) ||
      !data.r.allFinite()) {
    report.failures.push_back("non-finite value");
  }
  return report;
}

ValidationReport validate(const SequentialDataset& data) {
  ValidationReport report;
  const std::size_t n = data.rows();
  if (n < 1) report.failures.push_back("dataset has no rows");
  if (data.steps.empty()) report.failures.push_back("horizon must be >= 1");
  if (data.num_actions < 2) {
    report.failures.push_back("number of actions must be at least 2");
  }
  if (!all_finite(data.o0)) report.failures.push_back("non-finite value in o0");
  for (std::size_t t = 0; t < data.steps.size(); ++t) {
    const StepBlock& step = data.steps[t];
    const std::string tag = "step " + std::to_string(t + 1);
    if (static_cast<std::size_t>(step.o.rows()) != n ||
        step.a.size() != n || static_cast<std::size_t>(step.r.size()) != n ||
        static_cast<std::size_t>(step.w.rows()) != n) {
      report.failures.push_back("row count mismatch in " + tag);
      continue;
    }
    if (t > 0 && step.o.cols() != data.steps[0].o.cols()) {
      report.failures.push_back("observation width differs in " + tag);
    }
    check_actions(step.a, data.num_actions, "a" + std::to_string(t + 1),
                  report.failures);
    if (!all_finite(step.o) || !all_finite(step.w) || !step.r.allFinite()) {
      report.failures.push_back("non-finite value in " + tag);
    } else if (step.r.size() > 0 &&
               step.r.cwiseAbs().maxCoeff() > data.reward_bound) {
      report.failures.push_back("reward exceeds bound in " + tag);
    }
  }
  return report;
}

BanditDataset take_rows(const BanditDataset& data,
                        std::span<const std::size_t> rows) {
  BanditDataset out;
  out.s = take(data.s, rows);
  out.z = take(data.z, rows);
  out.w = take(data.w, rows);
  out.a = take(data.a, rows);
  out.r = take(data.r, rows);
  out.num_actions = data.num_actions;
  return out;
}

SequentialDataset take_rows(const SequentialDataset& data,
                            std::span<const std::size_t> rows) {
  SequentialDataset out;
  out.o0 = take(data.o0, rows);
  out.num_actions = data.num_actions;
  out.reward_bound = data.reward_bound;
  for (const StepBlock& step : data.steps) {
    out.steps.push_back(StepBlock{take(step.o, rows), take(step.a, rows),
                                  take(step.r, rows), take(step.w, rows)});
  }
  return out;
}

RowSplit split_rows(std::size_t n, double train_fraction, std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0,
          "train_fraction must lie in (0, 1)");
  require(n >= 2, "random_split needs at least 2 rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  RowSplit split;
  split.train.assign(order.begin(),
                     order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.eval.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                    order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.eval.begin(), split.eval.end());
  return split;
}

std::pair<BanditDataset, BanditDataset> random_split(const BanditDataset& data,
                                                     double train_fraction,
                                                     std::uint64_t seed) {
  RowSplit split = split_rows(data.rows(), train_fraction, seed);
  return {take_rows(data, split.train), take_rows(data, split.eval)};
}

std::pair<SequentialDataset, SequentialDataset> random_split(
    const SequentialDataset& data, double train_fraction, std::uint64_t seed) {
  RowSplit split = split_rows(data.rows(), train_fraction, seed);
  return {take_rows(data, split.train), take_rows(data, split.eval)};
}

std::string_view to_string(PolicyClass kind) {
  switch (kind) {
    case PolicyClass::kSOnly: return "sonly";
    case PolicyClass::kSZ: return "sz";
    case PolicyClass::kSA: return "sa";
    case PolicyClass::kSuper: return "super";
    case PolicyClass::kBehavior: return "behavior";
    case PolicyClass::kCommon: return "common";
    case PolicyClass::kSuperSeq: return "superseq";
  }
  return "unknown";
}

PolicyClass parse_policy_class(std::string_view name) {
  for (PolicyClass kind :
       {PolicyClass::kSOnly, PolicyClass::kSZ, PolicyClass::kSA,
        PolicyClass::kSuper, PolicyClass::kBehavior, PolicyClass::kCommon,
        PolicyClass::kSuperSeq}) {
    if (to_string(kind) == name) return kind;
  }
  fail(ErrorCode::kInvalidArgument,
       "unknown policy class '" + std::string(name) + "'");
}

bool is_bandit_class(PolicyClass kind) {
  return kind != PolicyClass::kCommon && kind != PolicyClass::kSuperSeq;
}

Penalties EstimatorConfig::resolve(std::size_t n) const {
  const double nn = static_cast<double>(std::max<std::size_t>(n, 1));
  Penalties p;
  p.lambda = lambda.value_or(1.0 / std::sqrt(nn));
  p.mu = mu.value_or(1.0);
  p.u = u.value_or(1.0);
  p.delta = delta.value_or(std::pow(nn, -0.25));
  p.mu_proj = mu_proj.value_or(1.0 / std::sqrt(nn));
  return p;
}

void EstimatorConfig::check() const {
  for (const auto& [value, name] :
       {std::pair{lambda, "lambda"}, std::pair{mu, "mu"}, std::pair{u, "U"},
        std::pair{delta, "Delta"}, std::pair{mu_proj, "mu_proj"}}) {
    if (value && !(*value > 0.0 && std::isfinite(*value))) {
      fail(ErrorCode::kInvalidArgument,
           std::string("penalty ") + name + " must be finite and > 0");
    }
  }
  if (cv) {
    require(cv->folds >= 2, "cross-validation needs at least 2 folds");
    for (double g : cv->bridge_grid) require(g > 0.0, "grid values must be > 0");
    for (double g : cv->projection_grid) {
      require(g > 0.0, "grid values must be > 0");
    }
  }
}

Matrix one_hot(const Actions& actions, int num_actions) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(actions.size()),
                            num_actions);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    out(static_cast<Eigen::Index>(i), actions[i]) = 1.0;
  }
  return out;
}

Matrix dummies(const Actions& actions, int num_actions) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(actions.size()),
                            num_actions - 1);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] > 0) out(static_cast<Eigen::Index>(i), actions[i] - 1) = 1.0;
  }
  return out;
}

void append_one_hot(std::vector<double>& row, int action, int num_actions) {
  for (int k = 0; k < num_actions; ++k) row.push_back(k == action ? 1.0 : 0.0);
}

void append_dummies(std::vector<double>& row, int action, int num_actions) {
  for (int k = 1; k < num_actions; ++k) row.push_back(k == action ? 1.0 : 0.0);
}

Matrix hcat(std::initializer_list<const Matrix*> blocks) {
  require(blocks.size() > 0, "hcat needs at least one block");
  const Eigen::Index rows = (*blocks.begin())->rows();
  Eigen::Index cols = 0;
  for (const Matrix* b : blocks) {
    require(b->rows() == rows, "hcat: row count mismatch");
    cols += b->cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Matrix* b : blocks) {
    out.middleCols(at, b->cols()) = *b;
    at += b->cols();
  }
  return out;
}

}  // namespace superpol
