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

#include "superpol/sequential.hpp"

#include <algorithm>
#include <cmath>

#include "superpol/error.hpp"

namespace superpol {
namespace {

long int_pow(long base, int exp) {
  long out = 1;
  for (int k = 0; k < exp; ++k) out *= base;
  return out;
}

void require_valid(const SequentialDataset& data) {
  ValidationReport report = validate(data);
  if (!report.ok()) {
    std::string msg = "invalid sequential dataset:";
    for (const std::string& f : report.failures) msg += " " + f + ";";
    fail(ErrorCode::kData, msg);
  }
}

Matrix constant_onehot(std::size_t rows, std::span<const int> actions,
                       int num_actions) {
  std::vector<double> row;
  for (int a : actions) append_one_hot(row, a, num_actions);
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(row.size()));
  for (std::size_t k = 0; k < row.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)).setConstant(row[k]);
  }
  return out;
}

// dummies(a_1) | .. | dummies(a_m) of observed behavior actions.
Matrix observed_dummies(const SequentialDataset& data, int m) {
  Matrix out(static_cast<Eigen::Index>(data.rows()),
             static_cast<Eigen::Index>(m) * (data.num_actions - 1));
  for (int k = 0; k < m; ++k) {
    out.middleCols(static_cast<Eigen::Index>(k) * (data.num_actions - 1),
                   data.num_actions - 1) =
        dummies(data.steps[static_cast<std::size_t>(k)].a, data.num_actions);
  }
  return out;
}

}  // namespace

int encode_tuple(std::span<const int> actions, int num_actions) {
  int index = 0;
  for (int a : actions) {
    require(a >= 0 && a < num_actions, "action out of range in tuple");
    index = index * num_actions + a;
  }
  return index;
}

std::vector<int> decode_tuple(int index, int length, int num_actions) {
  std::vector<int> out(static_cast<std::size_t>(length));
  for (int k = length - 1; k >= 0; --k) {
    out[static_cast<std::size_t>(k)] = index % num_actions;
    index /= num_actions;
  }
  return out;
}

Matrix stage_q_inputs(const SequentialDataset& data, int t, const Matrix& history,
                      const Actions& a) {
  const StepBlock& step = data.steps[static_cast<std::size_t>(t - 1)];
  const Matrix obs = data.observation_history(t);
  const Matrix onehot = one_hot(a, data.num_actions);
  return hcat({&step.w, &obs, &history, &onehot});
}

Matrix observed_history_onehot(const SequentialDataset& data, int t) {
  Matrix out(static_cast<Eigen::Index>(data.rows()),
             static_cast<Eigen::Index>(t - 1) * data.num_actions);
  for (int k = 0; k < t - 1; ++k) {
    out.middleCols(static_cast<Eigen::Index>(k) * data.num_actions,
                   data.num_actions) =
        one_hot(data.steps[static_cast<std::size_t>(k)].a, data.num_actions);
  }
  return out;
}

int SequentialFit::prefixes(int t) const {
  if (kind == PolicyClass::kSuperSeq && t < horizon) {
    return static_cast<int>(int_pow(num_actions, t - 1));
  }
  return 1;
}

const BridgeFunction& SequentialFit::bridge(
    int t, std::span<const int> behavior_actions) const {
  require(t >= 1 && t <= horizon, "step out of range");
  const auto& comps = bridges[static_cast<std::size_t>(t - 1)];
  if (comps.size() == 1) return comps[0];
  require(static_cast<int>(behavior_actions.size()) == t,
          "behavior tuple length must equal the step");
  return comps[static_cast<std::size_t>(encode_tuple(behavior_actions, num_actions))];
}

int SequentialFit::act(int t, std::span<const double> observations,
                       std::span<const int> own_actions,
                       std::span<const int> behavior_actions) const {
  require(t >= 1 && t <= horizon, "step out of range");
  require(static_cast<Eigen::Index>(observations.size()) == o_cols * t,
          "observation history dimension mismatch");
  require(static_cast<int>(own_actions.size()) == t - 1,
          "own action history must have t - 1 entries");
  require(static_cast<int>(behavior_actions.size()) == t,
          "behavior action history must have t entries");
  for (int a : behavior_actions) {
    require(a >= 0 && a < num_actions, "behavior action out of range");
  }
  const int own = encode_tuple(own_actions, num_actions);
  std::vector<double> row(observations.begin(), observations.end());
  int prefix = 0;
  if (kind == PolicyClass::kSuperSeq) {
    if (t < horizon) prefix = encode_tuple(behavior_actions.first(static_cast<std::size_t>(t - 1)), num_actions);
    for (int a : behavior_actions) append_dummies(row, a, num_actions);
  } else {
    for (int a : own_actions) append_dummies(row, a, num_actions);
  }
  const ProjectionSet& set =
      projections[static_cast<std::size_t>(t - 1)]
                 [static_cast<std::size_t>(own * prefixes(t) + prefix)];
  std::vector<double> scores(static_cast<std::size_t>(num_actions));
  for (int a = 0; a < num_actions; ++a) {
    scores[static_cast<std::size_t>(a)] =
        set.models[static_cast<std::size_t>(a)].predict_row(row);
  }
  return argmax_first(scores);
}

SeqRule SequentialFit::rule() const {
  return [this](const SeqContext& c) {
    return act(c.t, c.observations, c.own_actions, c.behavior_actions);
  };
}

struct SequentialLearner::Stage {
  Matrix obs;
  Matrix history;
  MomentProblem problem;
  std::optional<BridgeSolver> solver;
};

SequentialLearner::SequentialLearner(const SequentialDataset& data,
                                     const EstimatorConfig& cfg,
                                     const Backends& backends)
    : data_(data), cfg_(cfg), backends_(backends) {
  require_valid(data_);
  cfg_.check();
  if (int_pow(data_.num_actions, data_.horizon() - 1) > kMaxActionTuples) {
    fail(ErrorCode::kInvalidArgument,
         "action-tuple enumeration infeasible: |A|^(T-1) = " +
             std::to_string(int_pow(data_.num_actions, data_.horizon() - 1)) +
             " exceeds " + std::to_string(kMaxActionTuples));
  }
  stages_.resize(static_cast<std::size_t>(data_.horizon()));
}

SequentialLearner::~SequentialLearner() = default;

SequentialLearner::Stage& SequentialLearner::stage(int t) {
  const int horizon = data_.horizon();
  if (t < horizon && !penalties_) stage(horizon);
  auto& slot = stages_[static_cast<std::size_t>(t - 1)];
  if (slot) return *slot;
  slot = std::make_unique<Stage>();
  const StepBlock& step = data_.steps[static_cast<std::size_t>(t - 1)];
  slot->obs = data_.observation_history(t);
  slot->history = observed_history_onehot(data_, t);
  const Matrix onehot = one_hot(step.a, data_.num_actions);
  slot->problem.q_inputs = hcat({&step.w, &slot->obs, &slot->history, &onehot});
  slot->problem.g_inputs = hcat({&data_.o0, &slot->obs, &slot->history, &onehot});
  slot->problem.targets = step.r;
  slot->problem.q_proxy_cols = step.w.cols();
  slot->problem.g_proxy_cols = data_.o0.cols();
  if (t == horizon) {
    slot->solver.emplace(slot->problem, cfg_, backends_);
    penalties_ = slot->solver->penalties();
  } else {
    slot->solver.emplace(slot->problem, cfg_, backends_, penalties_);
  }
  return *slot;
}

Vector SequentialLearner::evaluate_component_rows(const SequentialFit& fit, int t,
                                                  std::span<const int> prefix,
                                                  const Matrix& history,
                                                  const Actions& candidate) const {
  const Matrix inputs = stage_q_inputs(data_, t, history, candidate);
  const auto& comps = fit.bridges[static_cast<std::size_t>(t - 1)];
  if (comps.size() == 1) return comps[0].evaluate(inputs);
  const Actions& observed = data_.steps[static_cast<std::size_t>(t - 1)].a;
  Vector out(inputs.rows());
  std::vector<int> tuple(prefix.begin(), prefix.end());
  tuple.push_back(0);
  for (int k = 0; k < data_.num_actions; ++k) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < observed.size(); ++i) {
      if (observed[i] == k) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.empty()) continue;
    Matrix sub(static_cast<Eigen::Index>(rows.size()), inputs.cols());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      sub.row(static_cast<Eigen::Index>(j)) = inputs.row(rows[j]);
    }
    tuple.back() = k;
    const Vector values =
        comps[static_cast<std::size_t>(encode_tuple(tuple, data_.num_actions))]
            .evaluate(sub);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      out(rows[j]) = values(static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

Vector SequentialLearner::pseudo_outcome(const SequentialFit& fit, int t,
                                         std::span<const int> behavior_prefix) const {
  const int next = t + 1;
  const Stage& st = *stages_[static_cast<std::size_t>(next - 1)];
  const std::size_t n = data_.rows();
  Actions chosen(n);
  std::vector<int> own(static_cast<std::size_t>(t));
  std::vector<int> behavior(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < t; ++k) {
      own[static_cast<std::size_t>(k)] = data_.steps[static_cast<std::size_t>(k)].a[i];
    }
    if (fit.kind == PolicyClass::kSuperSeq) {
      std::copy(behavior_prefix.begin(), behavior_prefix.end(), behavior.begin());
    } else {
      std::copy(own.begin(), own.end(), behavior.begin());
    }
    behavior.back() = data_.steps[static_cast<std::size_t>(next - 1)].a[i];
    const LevelKey obs = row_key(st.obs, static_cast<Eigen::Index>(i));
    chosen[i] = fit.act(next, obs, own, behavior);
  }
  return evaluate_component_rows(fit, next, behavior_prefix, st.history, chosen);
}

SequentialFit SequentialLearner::learn(PolicyClass kind) {
  require(kind == PolicyClass::kCommon || kind == PolicyClass::kSuperSeq,
          "policy class " + std::string(to_string(kind)) +
              " is not a sequential class");
  const int horizon = data_.horizon();
  const int k_actions = data_.num_actions;
  const std::size_t n = data_.rows();
  SequentialFit fit;
  fit.kind = kind;
  fit.horizon = horizon;
  fit.num_actions = k_actions;
  fit.o_cols = data_.steps[0].o.cols();
  fit.bridges.resize(static_cast<std::size_t>(horizon));
  fit.projections.resize(static_cast<std::size_t>(horizon));
  fit.diagnostics.resize(static_cast<std::size_t>(horizon));
  EstimatorConfig no_cv = cfg_;
  no_cv.cv.reset();
  std::optional<double> mu_proj;

  for (int t = horizon; t >= 1; --t) {
    Stage& st = stage(t);
    StageDiagnostics& diag = fit.diagnostics[static_cast<std::size_t>(t - 1)];
    diag.penalties = st.solver->penalties();
    const double scale = static_cast<double>(horizon - t + 1);
    const StepBlock& step = data_.steps[static_cast<std::size_t>(t - 1)];
    const bool per_tuple = kind == PolicyClass::kSuperSeq && t < horizon;
    const int comps = per_tuple ? static_cast<int>(int_pow(k_actions, t)) : 1;
    diag.components = comps;
    auto& bridges = fit.bridges[static_cast<std::size_t>(t - 1)];
    for (int c = 0; c < comps; ++c) {
      Vector target = step.r;
      if (t < horizon) {
        const std::vector<int> prefix =
            per_tuple ? decode_tuple(c, t, k_actions) : std::vector<int>{};
        Vector future = pseudo_outcome(fit, t, prefix);
        const double bound = static_cast<double>(horizon - t) * data_.reward_bound;
        for (Eigen::Index i = 0; i < future.size(); ++i) {
          if (std::abs(future(i)) > bound) {
            future(i) = std::clamp(future(i), -bound, bound);
            ++diag.clipped;
          }
        }
        target += future;
      }
      target /= scale;
      diag.max_abs_target = std::max(diag.max_abs_target, target.cwiseAbs().maxCoeff());
      bridges.push_back(st.solver->solve(target).q.scaled(scale));
    }

    const Matrix inputs =
        kind == PolicyClass::kSuperSeq
            ? [&] {
                const Matrix d = observed_dummies(data_, t);
                return hcat({&st.obs, &d});
              }()
            : [&] {
                const Matrix d = observed_dummies(data_, t - 1);
                return hcat({&st.obs, &d});
              }();
    const int owns = static_cast<int>(int_pow(k_actions, t - 1));
    const int prefixes = fit.prefixes(t);
    auto& sets = fit.projections[static_cast<std::size_t>(t - 1)];
    for (int h = 0; h < owns; ++h) {
      const std::vector<int> own = decode_tuple(h, t - 1, k_actions);
      const Matrix history = constant_onehot(n, own, k_actions);
      for (int p = 0; p < prefixes; ++p) {
        const std::vector<int> prefix =
            per_tuple ? decode_tuple(p, t - 1, k_actions) : std::vector<int>{};
        Matrix targets(static_cast<Eigen::Index>(n), k_actions);
        for (int a = 0; a < k_actions; ++a) {
          targets.col(a) =
              evaluate_component_rows(fit, t, prefix, history, Actions(n, a));
        }
        if (!mu_proj) {
          sets.push_back(fit_projections(inputs, targets, cfg_, backends_,
                                         st.solver->penalties().mu_proj));
          mu_proj = sets.back().mu_proj;
        } else {
          sets.push_back(fit_projections(inputs, targets, no_cv, backends_, *mu_proj));
        }
      }
    }
    diag.mu_proj = *mu_proj;
  }
  return fit;
}

BanditDataset as_bandit(const SequentialDataset& data) {
  require(data.horizon() == 1, "only one-step episodes convert to bandit data");
  BanditDataset out;
  out.s = data.steps[0].o;
  out.z = data.o0;
  out.w = data.steps[0].w;
  out.a = data.steps[0].a;
  out.r = data.steps[0].r;
  out.num_actions = data.num_actions;
  return out;
}

SequentialFit learn_seq(const SequentialDataset& data, PolicyClass kind,
                        const EstimatorConfig& cfg, const Backends& backends) {
  SequentialLearner learner(data, cfg, backends);
  return learner.learn(kind);
}

double estimate_value_seq(const SequentialFit& fit, const SequentialDataset& data) {
  require_valid(data);
  require(data.horizon() == fit.horizon, "horizon mismatch");
  const std::size_t n = data.rows();
  const StepBlock& first = data.steps[0];
  Actions chosen(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LevelKey obs = row_key(first.o, static_cast<Eigen::Index>(i));
    const int behavior = first.a[i];
    chosen[i] = fit.act(1, obs, {}, std::span<const int>(&behavior, 1));
  }
  const Matrix inputs =
      stage_q_inputs(data, 1, Matrix(static_cast<Eigen::Index>(n), 0), chosen);
  const auto& comps = fit.bridges[0];
  if (comps.size() == 1) return comps[0].evaluate(inputs).mean();
  double sum = 0.0;
  for (int k = 0; k < fit.num_actions; ++k) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (first.a[i] == k) rows.push_back(static_cast<Eigen::Index>(i));
    }
    if (rows.empty()) continue;
    Matrix sub(static_cast<Eigen::Index>(rows.size()), inputs.cols());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      sub.row(static_cast<Eigen::Index>(j)) = inputs.row(rows[j]);
    }
    sum += comps[static_cast<std::size_t>(k)].evaluate(sub).sum();
  }
  return sum / static_cast<double>(n);
}

}  // namespace superpol
