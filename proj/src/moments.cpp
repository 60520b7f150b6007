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

#include "superpol/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "superpol/error.hpp"
#include "superpol/io.hpp"
#include "superpol/rng.hpp"

namespace superpol {
namespace {

std::string key_text(const LevelKey& key) {
  std::string out = "(";
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(key[i]);
  }
  return out + ")";
}

LevelKey span_key(std::span<const double> row) {
  return LevelKey(row.begin(), row.end());
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

Vector take_rows(const Vector& v, const std::vector<std::size_t>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

void write_row(std::ostream& os, double lead, const Matrix& m, Eigen::Index i) {
  os << format_double(lead);
  for (Eigen::Index k = 0; k < m.cols(); ++k) os << ',' << format_double(m(i, k));
  os << '\n';
}

void check_grid(const std::vector<double>& grid) {
  require(!grid.empty(), "cross-validation grid is empty");
  for (double g : grid) {
    require(g > 0.0 && std::isfinite(g), "grid values must be finite and > 0");
  }
}

std::vector<double> sorted_grid(std::vector<double> grid) {
  check_grid(grid);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::size_t argmin_first(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  return best;
}

struct FoldRows {
  std::vector<std::size_t> train;
  std::vector<std::size_t> held;
};

std::vector<FoldRows> fold_rows(std::size_t n, int folds, std::uint64_t seed) {
  const std::vector<int> label = make_folds(n, folds, seed);
  std::vector<FoldRows> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < n; ++i) {
    for (int f = 0; f < folds; ++f) {
      auto& dest = f == label[i] ? out[static_cast<std::size_t>(f)].held
                                 : out[static_cast<std::size_t>(f)].train;
      dest.push_back(i);
    }
  }
  return out;
}

// Fitted values of a ridge regression of columns of `y` on the kernel `k`.
Matrix ridge_fitted(const Matrix& k, const Matrix& y, double mu) {
  const auto n = static_cast<double>(k.rows());
  Matrix a = k;
  a.diagonal().array() += n * mu;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::kNumeric, "kernel ridge system is not positive definite");
  }
  return k * llt.solve(y);
}

}  // namespace

void MomentProblem::check() const {
  const auto n = targets.size();
  require(n >= 2, "moment problem needs at least 2 rows");
  require(q_inputs.rows() == n && g_inputs.rows() == n,
          "moment problem: row count mismatch");
  require(q_proxy_cols >= 0 && q_proxy_cols <= q_inputs.cols() &&
              g_proxy_cols >= 0 && g_proxy_cols <= g_inputs.cols(),
          "moment problem: proxy column count out of range");
  if (!q_inputs.allFinite() || !g_inputs.allFinite() || !targets.allFinite()) {
    fail(ErrorCode::kData, "moment problem has non-finite entries");
  }
}

LevelKey row_key(const Matrix& m, Eigen::Index row) {
  LevelKey key(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) key[static_cast<std::size_t>(k)] = m(row, k);
  return key;
}

KernelExpansion::KernelExpansion(FeatureKernel kernel, const Matrix& raw_anchors,
                                 Vector coefficients)
    : kernel_(std::move(kernel)),
      anchors_(kernel_.transform(raw_anchors)),
      coefficients_(std::move(coefficients)) {
  require(anchors_.rows() == coefficients_.size(),
          "kernel expansion: anchor and coefficient counts differ");
  if (kernel_.is_delta()) {
    for (Eigen::Index i = 0; i < anchors_.rows(); ++i) {
      levels_[row_key(anchors_, i)] += coefficients_(i);
    }
  }
}

Vector KernelExpansion::evaluate(const Matrix& raw) const {
  if (kernel_.is_delta()) {
    Vector out(raw.rows());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      auto it = levels_.find(row_key(raw, i));
      out(i) = it == levels_.end() ? 0.0 : it->second;
    }
    return out;
  }
  return superpol::gram(kernel_.transform(raw), anchors_, kernel_.spec) *
         coefficients_;
}

double KernelExpansion::evaluate_row(std::span<const double> raw) const {
  require(static_cast<Eigen::Index>(raw.size()) == anchors_.cols(),
          "kernel expansion: input dimension mismatch");
  if (kernel_.is_delta()) {
    auto it = levels_.find(span_key(raw));
    return it == levels_.end() ? 0.0 : it->second;
  }
  std::vector<double> x(raw.begin(), raw.end());
  kernel_.standardizer.apply_in_place(x);
  double sum = 0.0;
  std::vector<double> anchor(x.size());
  for (Eigen::Index i = 0; i < anchors_.rows(); ++i) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      anchor[k] = anchors_(i, static_cast<Eigen::Index>(k));
    }
    sum += coefficients_(i) * kernel_value(x, anchor, kernel_.spec);
  }
  return sum;
}

bool KernelExpansion::covers(std::span<const double> raw) const {
  if (!kernel_.is_delta()) return true;
  return levels_.count(span_key(raw)) > 0;
}

double KernelExpansion::norm_squared() const {
  if (kernel_.is_delta()) {
    double sum = 0.0;
    for (const auto& [key, value] : levels_) sum += value * value;
    return sum;
  }
  const Matrix k = superpol::gram(anchors_, anchors_, kernel_.spec);
  return coefficients_.dot(k * coefficients_);
}

Vector BridgeFunction::evaluate(const Matrix& q_inputs) const {
  if (const auto* e = std::get_if<KernelExpansion>(&body_)) {
    return scale_ * e->evaluate(q_inputs);
  }
  Vector out(q_inputs.rows());
  std::vector<double> row(static_cast<std::size_t>(q_inputs.cols()));
  for (Eigen::Index i = 0; i < q_inputs.rows(); ++i) {
    for (Eigen::Index k = 0; k < q_inputs.cols(); ++k) {
      row[static_cast<std::size_t>(k)] = q_inputs(i, k);
    }
    out(i) = evaluate_row(row);
  }
  return out;
}

double BridgeFunction::evaluate_row(std::span<const double> row) const {
  if (const auto* e = std::get_if<KernelExpansion>(&body_)) {
    return scale_ * e->evaluate_row(row);
  }
  const auto& table = std::get<TabularBridge>(body_).values;
  auto it = table.find(span_key(row));
  if (it == table.end()) {
    fail(ErrorCode::kData,
         "bridge not defined at level " + key_text(span_key(row)));
  }
  return scale_ * it->second;
}

bool BridgeFunction::covers(std::span<const double> row) const {
  if (const auto* e = std::get_if<KernelExpansion>(&body_)) return e->covers(row);
  return std::get<TabularBridge>(body_).values.count(span_key(row)) > 0;
}

double BridgeFunction::norm_squared() const {
  if (const auto* e = std::get_if<KernelExpansion>(&body_)) return e->norm_squared();
  double sum = 0.0;
  for (const auto& [key, value] : std::get<TabularBridge>(body_).values) {
    sum += value * value;
  }
  return sum;
}

BridgeFunction BridgeFunction::scaled(double factor) const {
  return BridgeFunction(body_, scale_ * factor);
}

std::string dump(const BridgeFunction& q) {
  std::ostringstream os;
  if (const auto* e = std::get_if<KernelExpansion>(&q.body())) {
    const FeatureKernel& k = e->kernel();
    os << "superpol-bridge 1 kernel_expansion kernel=" << describe(k.spec)
       << " scale=" << format_double(q.scale()) << " cols=" << e->anchors().cols()
       << " anchors=" << e->anchors().rows() << '\n';
    os << "mean";
    for (Eigen::Index c = 0; c < k.standardizer.mean.size(); ++c) {
      os << ',' << format_double(k.standardizer.mean(c));
    }
    os << "\nscale";
    for (Eigen::Index c = 0; c < k.standardizer.scale.size(); ++c) {
      os << ',' << format_double(k.standardizer.scale(c));
    }
    os << '\n';
    for (Eigen::Index i = 0; i < e->anchors().rows(); ++i) {
      write_row(os, e->coefficients()(i), e->anchors(), i);
    }
    return os.str();
  }
  const auto& table = std::get<TabularBridge>(q.body()).values;
  const std::size_t cols = table.empty() ? 0 : table.begin()->first.size();
  os << "superpol-bridge 1 tabular scale=" << format_double(q.scale())
     << " cols=" << cols << " cells=" << table.size() << '\n';
  for (const auto& [key, value] : table) {
    os << format_double(value);
    for (double v : key) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

Vector ProjectionModel::predict(const Matrix& inputs) const {
  if (const auto* k = std::get_if<KernelRidgeModel>(&body)) {
    return k->expansion.evaluate(inputs);
  }
  const auto& lin = std::get<LinearModel>(body);
  require(inputs.cols() == lin.weights.size(),
          "linear projection: input dimension mismatch");
  return (inputs * lin.weights).array() + lin.intercept;
}

double ProjectionModel::predict_row(std::span<const double> row) const {
  if (const auto* k = std::get_if<KernelRidgeModel>(&body)) {
    return k->expansion.evaluate_row(row);
  }
  const auto& lin = std::get<LinearModel>(body);
  require(static_cast<Eigen::Index>(row.size()) == lin.weights.size(),
          "linear projection: input dimension mismatch");
  double sum = lin.intercept;
  for (std::size_t k = 0; k < row.size(); ++k) {
    sum += lin.weights(static_cast<Eigen::Index>(k)) * row[k];
  }
  return sum;
}

bool ProjectionModel::covers(std::span<const double> row) const {
  if (const auto* k = std::get_if<KernelRidgeModel>(&body)) {
    return k->expansion.covers(row);
  }
  return true;
}

std::string dump(const ProjectionModel& g) {
  std::ostringstream os;
  if (const auto* k = std::get_if<KernelRidgeModel>(&g.body)) {
    const KernelExpansion& e = k->expansion;
    os << "superpol-projection 1 kernel_ridge kernel=" << describe(e.kernel().spec)
       << " ridge=" << format_double(k->ridge) << " cols=" << e.anchors().cols()
       << " anchors=" << e.anchors().rows() << '\n';
    for (Eigen::Index i = 0; i < e.anchors().rows(); ++i) {
      write_row(os, e.coefficients()(i), e.anchors(), i);
    }
    return os.str();
  }
  const auto& lin = std::get<LinearModel>(g.body);
  os << "superpol-projection 1 linear cols=" << lin.weights.size() << '\n'
     << format_double(lin.intercept);
  for (Eigen::Index c = 0; c < lin.weights.size(); ++c) {
    os << ',' << format_double(lin.weights(c));
  }
  os << '\n';
  return os.str();
}

ProjectionModel fit_kernel_ridge(const Matrix& inputs, const Vector& targets,
                                 const FeatureKernel& kernel, double mu) {
  require(inputs.rows() == targets.size(), "projection: row count mismatch");
  require(mu > 0.0 && std::isfinite(mu), "projection ridge must be > 0");
  if (!targets.allFinite()) fail(ErrorCode::kData, "non-finite projection targets");
  const Matrix k = kernel.gram(inputs, inputs);
  Matrix a = k;
  a.diagonal().array() += static_cast<double>(inputs.rows()) * mu;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::kNumeric, "kernel ridge system is not positive definite");
  }
  Vector alpha = llt.solve(targets);
  return ProjectionModel{KernelRidgeModel{KernelExpansion(kernel, inputs, alpha), mu}};
}

ProjectionModel fit_delta_ridge(const Matrix& inputs, const Vector& targets,
                                double mu) {
  require(inputs.rows() == targets.size(), "projection: row count mismatch");
  require(inputs.rows() >= 1, "projection needs at least one row");
  require(mu > 0.0 && std::isfinite(mu), "projection ridge must be > 0");
  if (!targets.allFinite()) fail(ErrorCode::kData, "non-finite projection targets");
  std::map<LevelKey, std::pair<double, double>> levels;  // sum, count
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    auto& cell = levels[row_key(inputs, i)];
    cell.first += targets(i);
    cell.second += 1.0;
  }
  const double shrink = static_cast<double>(inputs.rows()) * mu;
  Matrix anchors(static_cast<Eigen::Index>(levels.size()), inputs.cols());
  Vector values(static_cast<Eigen::Index>(levels.size()));
  Eigen::Index at = 0;
  for (const auto& [key, cell] : levels) {
    for (std::size_t k = 0; k < key.size(); ++k) {
      anchors(at, static_cast<Eigen::Index>(k)) = key[k];
    }
    values(at) = cell.first / (cell.second + shrink);
    ++at;
  }
  FeatureKernel kernel = FeatureKernel::fit(KernelFamily::kDelta, inputs);
  return ProjectionModel{
      KernelRidgeModel{KernelExpansion(std::move(kernel), anchors, values), mu}};
}

ProjectionModel fit_linear(const Matrix& inputs, const Vector& targets) {
  require(inputs.rows() == targets.size(), "projection: row count mismatch");
  require(inputs.rows() >= 1, "projection needs at least one row");
  if (!targets.allFinite()) fail(ErrorCode::kData, "non-finite projection targets");
  Matrix design(inputs.rows(), inputs.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(inputs.cols()) = inputs;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
  const Vector coef = cod.solve(targets);
  if (!coef.allFinite()) fail(ErrorCode::kNumeric, "least squares produced non-finite weights");
  return ProjectionModel{LinearModel{coef(0), coef.tail(inputs.cols())}};
}

ProjectionModel fit_projection(const Matrix& inputs, const Vector& targets,
                               const ProjectionBackend& backend, double mu) {
  if (backend.kind == ProjectionKind::kLinear) return fit_linear(inputs, targets);
  if (backend.family == KernelFamily::kDelta) {
    return fit_delta_ridge(inputs, targets, mu);
  }
  return fit_kernel_ridge(inputs, targets,
                          FeatureKernel::fit(KernelFamily::kGaussian, inputs), mu);
}

Matrix omega_matrix(const Matrix& kg_gram, const Penalties& p) {
  require(p.lambda > 0.0 && p.u > 0.0 && p.delta > 0.0,
          "penalties must be > 0");
  const Eigen::Index n = kg_gram.rows();
  const double nn = static_cast<double>(n);
  const double c = p.lambda * p.u / (p.delta * p.delta * nn);
  Matrix b = c * kg_gram;
  b.diagonal().array() += p.lambda;
  Eigen::LLT<Matrix> llt(b);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::kNumeric, "instrument system is not positive definite");
  }
  Matrix x = llt.solve(kg_gram);
  Matrix omega = 0.5 * (x + x.transpose());
  omega /= 4.0 * nn * nn;
  return omega;
}

MinimaxSystem::MinimaxSystem(const Matrix& q_inputs, const Matrix& g_inputs,
                             FeatureKernel kq, FeatureKernel kg,
                             const Penalties& penalties)
    : q_inputs_(q_inputs), kq_(std::move(kq)), kg_(std::move(kg)) {
  require(q_inputs.rows() == g_inputs.rows(), "moment problem: row count mismatch");
  require(q_inputs.rows() >= 2, "moment problem needs at least 2 rows");
  kq_gram_ = kq_.gram(q_inputs, q_inputs);
  omega_ = omega_matrix(kg_.gram(g_inputs, g_inputs), penalties);
  omega_kq_ = omega_ * kq_gram_;
}

MinimaxSystem::Factor MinimaxSystem::factor(double lambda_mu) const {
  require(lambda_mu > 0.0 && std::isfinite(lambda_mu), "lambda * mu must be > 0");
  Matrix a = omega_kq_;
  a.diagonal().array() += lambda_mu;
  Factor f{Eigen::PartialPivLU<Matrix>(a), lambda_mu, 0.0};
  f.rcond = f.lu.rcond();
  if (!(f.rcond > 1e-15)) {
    std::ostringstream os;
    os << "singular system after regularization (reciprocal condition "
       << f.rcond << ", lambda*mu " << lambda_mu << ")";
    fail(ErrorCode::kNumeric, os.str());
  }
  return f;
}

Matrix MinimaxSystem::coefficients(const Factor& f, const Matrix& targets) const {
  require(targets.rows() == omega_.rows(), "targets: row count mismatch");
  Matrix alpha = f.lu.solve(omega_ * targets);
  if (!alpha.allFinite()) fail(ErrorCode::kNumeric, "non-finite bridge coefficients");
  return alpha;
}

Vector MinimaxSystem::coefficients(const Factor& f, const Vector& targets) const {
  return coefficients(f, Matrix(targets)).col(0);
}

KernelExpansion MinimaxSystem::expansion(const Vector& coefficients) const {
  return KernelExpansion(kq_, q_inputs_, coefficients);
}

double MinimaxSystem::inner_sup(const Vector& residual) const {
  return residual.dot(omega_ * residual);
}

BridgeFit fit_minimax(const MomentProblem& problem, const FeatureKernel& kq,
                      const FeatureKernel& kg, const Penalties& penalties) {
  problem.check();
  MinimaxSystem system(problem.q_inputs, problem.g_inputs, kq, kg, penalties);
  const auto f = system.factor(penalties.lambda_mu());
  const Vector alpha = system.coefficients(f, problem.targets);
  const Vector fitted = system.kq() * alpha;
  BridgeFit fit;
  fit.diagnostics.lambda_mu = penalties.lambda_mu();
  fit.diagnostics.rcond = f.rcond;
  fit.diagnostics.objective = system.inner_sup(fitted - problem.targets) +
                              penalties.lambda_mu() * alpha.dot(fitted);
  if (!std::isfinite(fit.diagnostics.objective)) {
    fail(ErrorCode::kNumeric, "non-finite min-max objective");
  }
  fit.q = BridgeFunction(system.expansion(alpha), 1.0);
  return fit;
}

BridgeFit fit_minimax(const MomentProblem& problem, KernelFamily kq,
                      KernelFamily kg, const Penalties& penalties) {
  return fit_minimax(problem, FeatureKernel::fit(kq, problem.q_inputs),
                     FeatureKernel::fit(kg, problem.g_inputs), penalties);
}

BridgeFit fit_tabular(const MomentProblem& problem) {
  problem.check();
  const Eigen::Index qp = problem.q_proxy_cols;
  const Eigen::Index gp = problem.g_proxy_cols;
  const Eigen::Index ctx_cols = problem.q_inputs.cols() - qp;
  require(problem.g_inputs.cols() - gp == ctx_cols,
          "tabular bridge: q and instrument contexts differ in width");
  const Matrix q_ctx = problem.q_inputs.rightCols(ctx_cols);
  const Matrix g_ctx = problem.g_inputs.rightCols(ctx_cols);
  if (q_ctx != g_ctx) {
    fail(ErrorCode::kInvalidArgument,
         "tabular bridge: q and instrument contexts differ");
  }
  std::map<LevelKey, std::vector<Eigen::Index>> strata;
  for (Eigen::Index i = 0; i < q_ctx.rows(); ++i) strata[row_key(q_ctx, i)].push_back(i);

  TabularBridge table;
  double worst_rcond = 1.0;
  const Matrix w = problem.q_inputs.leftCols(qp);
  const Matrix z = problem.g_inputs.leftCols(gp);
  for (const auto& [ctx, rows] : strata) {
    std::map<LevelKey, Eigen::Index> w_levels;
    std::map<LevelKey, Eigen::Index> z_levels;
    for (Eigen::Index i : rows) {
      w_levels.emplace(row_key(w, i), 0);
      z_levels.emplace(row_key(z, i), 0);
    }
    if (w_levels.size() != z_levels.size()) {
      fail(ErrorCode::kData,
           "stratum " + key_text(ctx) + ": " + std::to_string(w_levels.size()) +
               " reward-proxy levels but " + std::to_string(z_levels.size()) +
               " action-proxy levels observed");
    }
    Eigen::Index next = 0;
    for (auto& [key, index] : w_levels) index = next++;
    next = 0;
    for (auto& [key, index] : z_levels) index = next++;
    const auto m = static_cast<Eigen::Index>(w_levels.size());
    Matrix counts = Matrix::Zero(m, m);
    Vector reward_sum = Vector::Zero(m);
    Vector z_count = Vector::Zero(m);
    for (Eigen::Index i : rows) {
      const Eigen::Index zi = z_levels.at(row_key(z, i));
      counts(zi, w_levels.at(row_key(w, i))) += 1.0;
      reward_sum(zi) += problem.targets(i);
      z_count(zi) += 1.0;
    }
    Matrix cond = counts;
    for (Eigen::Index r = 0; r < m; ++r) cond.row(r) /= z_count(r);
    const Vector r_mean = reward_sum.cwiseQuotient(z_count);
    Eigen::JacobiSVD<Matrix> svd(cond);
    const Vector sv = svd.singularValues();
    const double ratio = sv(m - 1) / sv(0);
    if (!(ratio > 1e-10)) {
      std::ostringstream os;
      os << "rank-deficient proxy system in stratum " << key_text(ctx)
         << "; singular values";
      for (Eigen::Index k = 0; k < m; ++k) os << ' ' << sv(k);
      fail(ErrorCode::kNumeric, os.str());
    }
    worst_rcond = std::min(worst_rcond, ratio);
    const Vector sol = Eigen::PartialPivLU<Matrix>(cond).solve(r_mean);
    for (const auto& [wkey, index] : w_levels) {
      LevelKey full = wkey;
      full.insert(full.end(), ctx.begin(), ctx.end());
      table.values[full] = sol(index);
    }
  }
  BridgeFit fit;
  fit.diagnostics.rcond = worst_rcond;
  fit.q = BridgeFunction(std::move(table), 1.0);
  return fit;
}

ObjectiveValue objective_value(const BridgeFunction& q,
                               const MomentProblem& problem,
                               const FeatureKernel& kg,
                               const Penalties& penalties) {
  problem.check();
  const Matrix omega =
      omega_matrix(kg.gram(problem.g_inputs, problem.g_inputs), penalties);
  const Vector residual = q.evaluate(problem.q_inputs) - problem.targets;
  ObjectiveValue value;
  value.inner_sup = residual.dot(omega * residual);
  value.q_penalty =
      penalties.lambda_mu() * q.scale() * q.scale() * q.norm_squared();
  return value;
}

std::vector<int> make_folds(std::size_t n, int folds, std::uint64_t seed) {
  require(folds >= 2, "cross-validation needs at least 2 folds");
  if (n < 2 * static_cast<std::size_t>(folds)) {
    fail(ErrorCode::kInvalidArgument,
         "cross-validation fold with < 2 rows (n = " + std::to_string(n) +
             ", folds = " + std::to_string(folds) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0xc5f01d));
  rng.shuffle(order.begin(), order.end());
  std::vector<int> label(n);
  for (std::size_t i = 0; i < n; ++i) {
    label[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
  }
  return label;
}

CvResult cross_validate_bridge(const MomentProblem& problem,
                               const FeatureKernel& kq, const FeatureKernel& kg,
                               const Penalties& penalties,
                               const std::vector<double>& grid, int folds,
                               std::uint64_t seed) {
  problem.check();
  CvResult result;
  result.grid = sorted_grid(grid);
  result.scores.assign(result.grid.size(), 0.0);
  for (const FoldRows& fold : fold_rows(problem.rows(), folds, seed)) {
    const Matrix q_train = take_rows(problem.q_inputs, fold.train);
    const Matrix q_held = take_rows(problem.q_inputs, fold.held);
    const Matrix g_held = take_rows(problem.g_inputs, fold.held);
    const Vector y_train = take_rows(problem.targets, fold.train);
    const Vector y_held = take_rows(problem.targets, fold.held);
    MinimaxSystem system(q_train, take_rows(problem.g_inputs, fold.train), kq, kg,
                         penalties);
    const Matrix cross = kq.gram(q_held, q_train);
    const Matrix k_held = kg.gram(g_held, g_held);
    Matrix residuals(static_cast<Eigen::Index>(fold.held.size()),
                     static_cast<Eigen::Index>(result.grid.size()));
    for (std::size_t j = 0; j < result.grid.size(); ++j) {
      const auto f = system.factor(result.grid[j]);
      residuals.col(static_cast<Eigen::Index>(j)) =
          cross * system.coefficients(f, y_train) - y_held;
    }
    const Matrix fitted = ridge_fitted(k_held, residuals, penalties.mu_proj);
    for (std::size_t j = 0; j < result.grid.size(); ++j) {
      result.scores[j] += fitted.col(static_cast<Eigen::Index>(j)).squaredNorm() /
                          static_cast<double>(fold.held.size());
    }
  }
  for (double& s : result.scores) s /= static_cast<double>(folds);
  result.chosen = result.grid[argmin_first(result.scores)];
  return result;
}

CvResult cross_validate_projection(const Matrix& inputs, const Matrix& targets,
                                   const ProjectionBackend& backend,
                                   const std::vector<double>& grid, int folds,
                                   std::uint64_t seed) {
  require(inputs.rows() == targets.rows(), "projection: row count mismatch");
  CvResult result;
  result.grid = sorted_grid(grid);
  result.scores.assign(result.grid.size(), 0.0);
  const auto n = static_cast<std::size_t>(inputs.rows());
  std::optional<FeatureKernel> kernel;
  if (backend.kind == ProjectionKind::kKernelRidge &&
      backend.family == KernelFamily::kGaussian) {
    kernel = FeatureKernel::fit(KernelFamily::kGaussian, inputs);
  }
  for (const FoldRows& fold : fold_rows(n, folds, seed)) {
    const Matrix x_train = take_rows(inputs, fold.train);
    const Matrix x_held = take_rows(inputs, fold.held);
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
      const Vector y_train = take_rows(Vector(targets.col(c)), fold.train);
      const Vector y_held = take_rows(Vector(targets.col(c)), fold.held);
      for (std::size_t j = 0; j < result.grid.size(); ++j) {
        ProjectionModel model =
            kernel ? fit_kernel_ridge(x_train, y_train, *kernel, result.grid[j])
                   : fit_projection(x_train, y_train, backend, result.grid[j]);
        result.scores[j] += (model.predict(x_held) - y_held).squaredNorm() /
                            static_cast<double>(n);
      }
    }
  }
  result.chosen = result.grid[argmin_first(result.scores)];
  return result;
}

}  // namespace superpol
