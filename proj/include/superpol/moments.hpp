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
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "superpol/datamodel.hpp"
#include "superpol/kernels.hpp"

namespace superpol {

// Conditional moment restriction E[q(q_inputs) - target | g_inputs] = 0.
// The first q_proxy_cols columns of q_inputs (first g_proxy_cols of g_inputs)
// are the proxy; the remaining columns form the shared context, which must be
// identical in both blocks. The tabular solver relies on this layout.
struct MomentProblem {
  Matrix q_inputs;
  Matrix g_inputs;
  Vector targets;
  Eigen::Index q_proxy_cols = 0;
  Eigen::Index g_proxy_cols = 0;

  std::size_t rows() const { return static_cast<std::size_t>(targets.size()); }
  void check() const;
};

using LevelKey = std::vector<double>;
LevelKey row_key(const Matrix& m, Eigen::Index row);

// f(x) = sum_i coefficients_i * k(x, anchor_i). Anchors are stored after the
// kernel's input transform. For delta kernels the sum is collapsed per level.
class KernelExpansion {
 public:
  KernelExpansion() = default;
  KernelExpansion(FeatureKernel kernel, const Matrix& raw_anchors,
                  Vector coefficients);

  Vector evaluate(const Matrix& raw) const;
  double evaluate_row(std::span<const double> raw) const;
  // False for delta kernels at a level never seen among the anchors.
  bool covers(std::span<const double> raw) const;
  // Squared RKHS norm sum_ij c_i c_j k(anchor_i, anchor_j).
  double norm_squared() const;

  const FeatureKernel& kernel() const { return kernel_; }
  const Matrix& anchors() const { return anchors_; }
  const Vector& coefficients() const { return coefficients_; }

 private:
  FeatureKernel kernel_;
  Matrix anchors_;
  Vector coefficients_;
  std::map<LevelKey, double> levels_;
};

// Lookup table from a full discretized input row to a value.
struct TabularBridge {
  std::map<LevelKey, double> values;
};

// Learned bridge q. Values are multiplied by `scale`.
class BridgeFunction {
 public:
  BridgeFunction() = default;
  BridgeFunction(std::variant<KernelExpansion, TabularBridge> body, double scale)
      : body_(std::move(body)), scale_(scale) {}

  Vector evaluate(const Matrix& q_inputs) const;
  double evaluate_row(std::span<const double> row) const;
  bool covers(std::span<const double> row) const;
  // Squared RKHS norm of the unscaled function (sum of squared cell values
  // for tables, which is the delta-kernel RKHS norm).
  double norm_squared() const;
  double scale() const { return scale_; }
  BridgeFunction scaled(double factor) const;
  bool is_tabular() const { return std::holds_alternative<TabularBridge>(body_); }
  const std::variant<KernelExpansion, TabularBridge>& body() const { return body_; }

 private:
  std::variant<KernelExpansion, TabularBridge> body_;
  double scale_ = 1.0;
};

// Versioned text dump: a header line naming the variant and layout, then one
// line per anchor or table cell.
std::string dump(const BridgeFunction& q);

struct KernelRidgeModel {
  KernelExpansion expansion;
  double ridge = 0.0;
};

struct LinearModel {
  double intercept = 0.0;
  Vector weights;
};

struct ProjectionModel {
  std::variant<KernelRidgeModel, LinearModel> body;

  Vector predict(const Matrix& inputs) const;
  double predict_row(std::span<const double> row) const;
  bool covers(std::span<const double> row) const;
};

std::string dump(const ProjectionModel& g);

enum class ProjectionKind { kLinear, kKernelRidge };

struct ProjectionBackend {
  ProjectionKind kind = ProjectionKind::kLinear;
  KernelFamily family = KernelFamily::kGaussian;  // kernel ridge only
};

// Kernel ridge with (K + n mu I) alpha = y, solved densely by Cholesky.
ProjectionModel fit_kernel_ridge(const Matrix& inputs, const Vector& targets,
                                 const FeatureKernel& kernel, double mu);
// Same estimator for the delta kernel by its per-level closed form
// prediction(level) = sum_level(y) / (n_level + n mu).
ProjectionModel fit_delta_ridge(const Matrix& inputs, const Vector& targets,
                                double mu);
// Ordinary least squares with intercept; minimum-norm on rank deficiency.
ProjectionModel fit_linear(const Matrix& inputs, const Vector& targets);

ProjectionModel fit_projection(const Matrix& inputs, const Vector& targets,
                               const ProjectionBackend& backend, double mu);

// Closed-form pieces of the min-max bridge objective on one data set:
//   inner sup over g of  n^-1 sum rho_i g(inst_i) - lambda (|g|^2 + U/Delta^2 |g|_n^2)
//     = rho' Omega rho,  Omega = K_g (lambda I + c K_g)^-1 / (4 n^2),
//   c = lambda U / (Delta^2 n).
// Minimizing rho' Omega rho + lambda mu a' K_q a over q = K_q a gives
//   (Omega K_q + lambda mu I) a = Omega y.
class MinimaxSystem {
 public:
  MinimaxSystem(const Matrix& q_inputs, const Matrix& g_inputs,
                FeatureKernel kq, FeatureKernel kg, const Penalties& penalties);

  struct Factor {
    Eigen::PartialPivLU<Matrix> lu;
    double lambda_mu = 0.0;
    double rcond = 0.0;
  };

  // Throws a numeric error when the regularized system is singular.
  Factor factor(double lambda_mu) const;
  Matrix coefficients(const Factor& f, const Matrix& targets) const;
  Vector coefficients(const Factor& f, const Vector& targets) const;
  KernelExpansion expansion(const Vector& coefficients) const;

  double inner_sup(const Vector& residual) const;
  const Matrix& kq() const { return kq_gram_; }
  const Matrix& omega() const { return omega_; }
  const FeatureKernel& q_kernel() const { return kq_; }
  const FeatureKernel& g_kernel() const { return kg_; }
  std::size_t rows() const { return static_cast<std::size_t>(q_inputs_.rows()); }

 private:
  Matrix q_inputs_;
  FeatureKernel kq_;
  FeatureKernel kg_;
  Matrix kq_gram_;
  Matrix omega_;
  Matrix omega_kq_;
};

Matrix omega_matrix(const Matrix& kg_gram, const Penalties& penalties);

struct BridgeDiagnostics {
  double lambda_mu = 0.0;
  double rcond = 0.0;
  double objective = 0.0;
  std::vector<double> cv_scores;  // aligned with the bridge grid when CV ran
};

struct BridgeFit {
  BridgeFunction q;
  BridgeDiagnostics diagnostics;
};

BridgeFit fit_minimax(const MomentProblem& problem, const FeatureKernel& kq,
                      const FeatureKernel& kg, const Penalties& penalties);
BridgeFit fit_minimax(const MomentProblem& problem, KernelFamily kq,
                      KernelFamily kg, const Penalties& penalties);

// Per stratum of the shared context, solves M q = r with
// M[z][w] = P(W = w | Z = z, context) and r[z] = mean target given (Z, context).
BridgeFit fit_tabular(const MomentProblem& problem);

struct ObjectiveValue {
  double inner_sup = 0.0;  // rho' Omega rho
  double q_penalty = 0.0;  // lambda mu |q|^2
  double total() const { return inner_sup + q_penalty; }
};

ObjectiveValue objective_value(const BridgeFunction& q,
                               const MomentProblem& problem,
                               const FeatureKernel& kg,
                               const Penalties& penalties);

// Deterministic fold labels 0..folds-1 from a seeded permutation.
std::vector<int> make_folds(std::size_t n, int folds, std::uint64_t seed);

struct CvResult {
  double chosen = 0.0;
  std::vector<double> grid;    // sorted ascending
  std::vector<double> scores;  // aligned with grid
};

// Chooses lambda * mu by the held-out projected residual: per fold, fit on
// the other folds, then project the held-out residual q - target on the
// held-out instruments by kernel ridge (ridge mu_proj) and average the squared
// fitted values. Ties go to the smallest value.
CvResult cross_validate_bridge(const MomentProblem& problem,
                               const FeatureKernel& kq, const FeatureKernel& kg,
                               const Penalties& penalties,
                               const std::vector<double>& grid, int folds,
                               std::uint64_t seed);

// Chooses the projection ridge by held-out squared error summed over the
// target columns. Ties go to the smallest value.
CvResult cross_validate_projection(const Matrix& inputs, const Matrix& targets,
                                   const ProjectionBackend& backend,
                                   const std::vector<double>& grid, int folds,
                                   std::uint64_t seed);

}  // namespace superpol
