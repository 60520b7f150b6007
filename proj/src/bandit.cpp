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

#include "superpol/bandit.hpp"

#include <sstream>

#include "superpol/error.hpp"
#include "superpol/rng.hpp"

namespace superpol {
namespace {

void require_valid(const BanditDataset& data) {
  ValidationReport report = validate(data);
  if (!report.ok()) {
    std::string msg = "invalid bandit dataset:";
    for (const std::string& f : report.failures) msg += " " + f + ";";
    fail(ErrorCode::kData, msg);
  }
}

std::vector<PolicyClass> fallback_chain(PolicyClass kind) {
  switch (kind) {
    case PolicyClass::kSuper:
      return {PolicyClass::kSuper, PolicyClass::kSZ, PolicyClass::kSOnly};
    case PolicyClass::kSZ: return {PolicyClass::kSZ, PolicyClass::kSOnly};
    case PolicyClass::kSA: return {PolicyClass::kSA, PolicyClass::kSOnly};
    default: return {kind};
  }
}

}  // namespace

std::uint64_t bridge_cv_seed(std::uint64_t seed) { return mix_seed(seed, 101); }
std::uint64_t projection_cv_seed(std::uint64_t seed) { return mix_seed(seed, 102); }

Matrix bandit_q_inputs(const Matrix& w, const Matrix& s, const Actions& a,
                       int num_actions) {
  const Matrix onehot = one_hot(a, num_actions);
  return hcat({&w, &s, &onehot});
}

MomentProblem bandit_problem(const BanditDataset& data) {
  MomentProblem problem;
  problem.q_inputs = bandit_q_inputs(data.w, data.s, data.a, data.num_actions);
  problem.g_inputs = bandit_q_inputs(data.z, data.s, data.a, data.num_actions);
  problem.targets = data.r;
  problem.q_proxy_cols = data.w.cols();
  problem.g_proxy_cols = data.z.cols();
  return problem;
}

BridgeSolver::BridgeSolver(const MomentProblem& problem, const EstimatorConfig& cfg,
                           const Backends& backends, std::optional<Penalties> fixed)
    : problem_(problem), backends_(backends) {
  cfg.check();
  problem_.check();
  penalties_ = fixed ? *fixed : cfg.resolve(problem_.rows());
  if (backends_.bridge == BridgeKind::kTabular) return;
  FeatureKernel kq = FeatureKernel::fit(backends_.bridge_family, problem_.q_inputs);
  FeatureKernel kg = FeatureKernel::fit(backends_.bridge_family, problem_.g_inputs);
  if (!fixed && cfg.cv && !cfg.cv->bridge_grid.empty()) {
    CvResult cv = cross_validate_bridge(problem_, kq, kg, penalties_,
                                        cfg.cv->bridge_grid, cfg.cv->folds,
                                        bridge_cv_seed(cfg.seed));
    penalties_.mu = cv.chosen / penalties_.lambda;
    cv_scores_ = cv.scores;
  }
  system_.emplace(problem_.q_inputs, problem_.g_inputs, std::move(kq),
                  std::move(kg), penalties_);
  factor_.emplace(system_->factor(penalties_.lambda_mu()));
}

BridgeResult BridgeSolver::solve(const Vector& targets) const {
  require(targets.size() == static_cast<Eigen::Index>(problem_.rows()),
          "bridge targets: row count mismatch");
  if (!targets.allFinite()) fail(ErrorCode::kData, "non-finite bridge targets");
  BridgeResult out;
  out.penalties = penalties_;
  out.diagnostics.cv_scores = cv_scores_;
  out.diagnostics.lambda_mu = penalties_.lambda_mu();
  if (!system_) {
    MomentProblem p = problem_;
    p.targets = targets;
    BridgeFit fit = fit_tabular(p);
    out.q = std::move(fit.q);
    out.diagnostics.rcond = fit.diagnostics.rcond;
    return out;
  }
  const Vector alpha = system_->coefficients(*factor_, targets);
  const Vector fitted = system_->kq() * alpha;
  out.diagnostics.rcond = factor_->rcond;
  out.diagnostics.objective = system_->inner_sup(fitted - targets) +
                              penalties_.lambda_mu() * alpha.dot(fitted);
  if (!std::isfinite(out.diagnostics.objective)) {
    fail(ErrorCode::kNumeric, "non-finite min-max objective");
  }
  out.q = BridgeFunction(system_->expansion(alpha), 1.0);
  return out;
}

BridgeResult fit_bridge(const MomentProblem& problem, const EstimatorConfig& cfg,
                        const Backends& backends) {
  return BridgeSolver(problem, cfg, backends).solve(problem.targets);
}

ProjectionSet fit_projections(const Matrix& inputs, const Matrix& targets,
                              const EstimatorConfig& cfg, const Backends& backends,
                              double default_mu) {
  ProjectionSet set;
  set.mu_proj = default_mu;
  if (backends.projection.kind == ProjectionKind::kKernelRidge && cfg.cv &&
      !cfg.cv->projection_grid.empty()) {
    set.mu_proj = cross_validate_projection(inputs, targets, backends.projection,
                                            cfg.cv->projection_grid, cfg.cv->folds,
                                            projection_cv_seed(cfg.seed))
                      .chosen;
  }
  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    set.models.push_back(
        fit_projection(inputs, targets.col(c), backends.projection, set.mu_proj));
  }
  return set;
}

Matrix conditioning_inputs(PolicyClass kind, const Matrix& s, const Matrix& z,
                           const Actions& recommended, int num_actions) {
  switch (kind) {
    case PolicyClass::kSOnly: return s;
    case PolicyClass::kSZ: return hcat({&s, &z});
    case PolicyClass::kSA: {
      const Matrix d = dummies(recommended, num_actions);
      return hcat({&s, &d});
    }
    case PolicyClass::kSuper: {
      const Matrix d = dummies(recommended, num_actions);
      return hcat({&s, &z, &d});
    }
    default:
      fail(ErrorCode::kInvalidArgument,
           "no conditioning set for policy class " + std::string(to_string(kind)));
  }
}

std::vector<double> conditioning_row(PolicyClass kind, std::span<const double> s,
                                     std::span<const double> z, int recommended,
                                     int num_actions) {
  std::vector<double> row(s.begin(), s.end());
  if (kind == PolicyClass::kSZ || kind == PolicyClass::kSuper) {
    row.insert(row.end(), z.begin(), z.end());
  }
  if (kind == PolicyClass::kSA || kind == PolicyClass::kSuper) {
    append_dummies(row, recommended, num_actions);
  }
  return row;
}

int argmax_first(std::span<const double> scores) {
  require(!scores.empty(), "argmax of an empty score list");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return static_cast<int>(best);
}

std::vector<double> BanditFit::scores(std::span<const double> s,
                                      std::span<const double> z,
                                      int recommended) const {
  require(static_cast<Eigen::Index>(s.size()) == s_cols,
          "state dimension mismatch");
  require(static_cast<Eigen::Index>(z.size()) == z_cols,
          "action-proxy dimension mismatch");
  require(recommended >= 0 && recommended < num_actions,
          "recommended action out of range");
  std::vector<double> out(static_cast<std::size_t>(num_actions));
  if (kind == PolicyClass::kBehavior) {
    out[static_cast<std::size_t>(recommended)] = 1.0;
    return out;
  }
  for (std::size_t level = 0; level < projections.size(); ++level) {
    const auto& [cls, set] = projections[level];
    const std::vector<double> row =
        conditioning_row(cls, s, z, recommended, num_actions);
    bool covered = true;
    for (const ProjectionModel& m : set.models) covered = covered && m.covers(row);
    if (!covered && level + 1 < projections.size()) continue;
    for (int a = 0; a < num_actions; ++a) {
      out[static_cast<std::size_t>(a)] =
          set.models[static_cast<std::size_t>(a)].predict_row(row);
    }
    return out;
  }
  fail(ErrorCode::kInternal, "bandit fit has no projections");
}

int BanditFit::act(std::span<const double> s, std::span<const double> z,
                   int recommended) const {
  if (kind == PolicyClass::kBehavior) {
    require(recommended >= 0 && recommended < num_actions,
            "recommended action out of range");
    return recommended;
  }
  const std::vector<double> sc = scores(s, z, recommended);
  return argmax_first(sc);
}

BanditRule BanditFit::rule() const {
  return [this](const BanditContext& c) { return act(c.s, c.z, c.recommended); };
}

BanditFit learn_with_bridge(const BanditDataset& data, PolicyClass kind,
                            const BridgeResult& bridge, const EstimatorConfig& cfg,
                            const Backends& backends) {
  require(is_bandit_class(kind),
          "policy class " + std::string(to_string(kind)) + " is not a bandit class");
  require_valid(data);
  BanditFit fit;
  fit.kind = kind;
  fit.num_actions = data.num_actions;
  fit.s_cols = data.s.cols();
  fit.z_cols = data.z.cols();
  fit.bridge = bridge;
  if (kind == PolicyClass::kBehavior) return fit;

  const auto n = static_cast<Eigen::Index>(data.rows());
  Matrix targets(n, data.num_actions);
  for (int a = 0; a < data.num_actions; ++a) {
    const Actions all(data.rows(), a);
    targets.col(a) =
        bridge.q.evaluate(bandit_q_inputs(data.w, data.s, all, data.num_actions));
  }
  std::vector<PolicyClass> chain{kind};
  const bool delta_projection =
      backends.projection.kind == ProjectionKind::kKernelRidge &&
      backends.projection.family == KernelFamily::kDelta;
  if (delta_projection) chain = fallback_chain(kind);
  for (PolicyClass cls : chain) {
    const Matrix inputs =
        conditioning_inputs(cls, data.s, data.z, data.a, data.num_actions);
    fit.projections.emplace_back(
        cls, fit_projections(inputs, targets, cfg, backends,
                             bridge.penalties.mu_proj));
  }
  return fit;
}

BanditFit learn(const BanditDataset& data, PolicyClass kind,
                const EstimatorConfig& cfg, const Backends& backends) {
  require_valid(data);
  return learn_with_bridge(data, kind, fit_bridge(bandit_problem(data), cfg, backends),
                           cfg, backends);
}

double estimate_value(const BanditRule& policy, const BridgeFunction& q,
                      const BanditDataset& data) {
  require_valid(data);
  Actions chosen(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const LevelKey s = row_key(data.s, r);
    const LevelKey z = row_key(data.z, r);
    chosen[i] = policy(BanditContext{s, z, data.a[i], {}});
    require(chosen[i] >= 0 && chosen[i] < data.num_actions,
            "policy returned an out-of-range action");
  }
  return q.evaluate(bandit_q_inputs(data.w, data.s, chosen, data.num_actions)).mean();
}

}  // namespace superpol
