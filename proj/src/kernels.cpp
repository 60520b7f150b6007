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

#include "superpol/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "superpol/error.hpp"
#include "superpol/io.hpp"

namespace superpol {

std::string describe(const KernelSpec& spec) {
  if (const auto* g = std::get_if<GaussianKernel>(&spec)) {
    return "gaussian:" + format_double(g->bandwidth);
  }
  return "delta";
}

double median_heuristic(const Matrix& points, std::size_t cap) {
  const auto n = static_cast<std::size_t>(points.rows());
  require(n >= 2, "median_heuristic needs at least 2 rows");
  require(cap >= 2, "median_heuristic cap must be at least 2");
  const std::size_t m = std::min(n, cap);
  std::vector<Eigen::Index> picked(m);
  for (std::size_t i = 0; i < m; ++i) {
    picked[i] = static_cast<Eigen::Index>(i * n / m);
  }
  std::vector<double> dists;
  dists.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = (points.row(picked[i]) - points.row(picked[j])).norm();
      if (d > 0.0) dists.push_back(d);
    }
  }
  if (dists.empty()) {
    fail(ErrorCode::kNumeric, "degenerate point cloud: all pairwise distances are zero");
  }
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid),
                   dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(
        dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median;
}

double kernel_value(std::span<const double> x, std::span<const double> y,
                    const KernelSpec& spec) {
  require(x.size() == y.size(), "kernel_value: dimension mismatch");
  if (const auto* g = std::get_if<GaussianKernel>(&spec)) {
    double sq = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double d = x[k] - y[k];
      sq += d * d;
    }
    return std::exp(-sq / (2.0 * g->bandwidth * g->bandwidth));
  }
  return std::equal(x.begin(), x.end(), y.begin()) ? 1.0 : 0.0;
}

Matrix gram(const Matrix& x, const Matrix& y, const KernelSpec& spec) {
  require(x.cols() == y.cols(), "gram: dimension mismatch");
  Matrix out(x.rows(), y.rows());
  const Eigen::Index d = x.cols();
  if (const auto* g = std::get_if<GaussianKernel>(&spec)) {
    require(g->bandwidth > 0.0 && std::isfinite(g->bandwidth),
            "Gaussian bandwidth must be finite and > 0");
    const double scale = -1.0 / (2.0 * g->bandwidth * g->bandwidth);
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double sq = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
          const double diff = x(i, k) - y(j, k);
          sq += diff * diff;
        }
        out(i, j) = std::exp(scale * sq);
      }
    }
  } else {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        out(i, j) = (x.row(i).array() == y.row(j).array()).all() ? 1.0 : 0.0;
      }
    }
  }
  return out;
}

Standardizer Standardizer::fit(const Matrix& x) {
  require(x.rows() >= 2, "standardize needs at least 2 rows");
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  s.scale = Vector::Ones(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - s.mean(c)).square().sum() /
                       static_cast<double>(x.rows() - 1);
    const double sd = std::sqrt(var);
    if (sd > 1e-12 * (1.0 + std::abs(s.mean(c)))) s.scale(c) = sd;
  }
  return s;
}

Standardizer Standardizer::identity(Eigen::Index cols) {
  return Standardizer{Vector::Zero(cols), Vector::Ones(cols)};
}

Matrix Standardizer::apply(const Matrix& x) const {
  require(x.cols() == mean.size(), "standardizer: dimension mismatch");
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(c) = (x.col(c).array() - mean(c)) / scale(c);
  }
  return out;
}

Matrix Standardizer::invert(const Matrix& x) const {
  require(x.cols() == mean.size(), "standardizer: dimension mismatch");
  Matrix out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(c) = x.col(c).array() * scale(c) + mean(c);
  }
  return out;
}

void Standardizer::apply_in_place(std::span<double> row) const {
  require(static_cast<Eigen::Index>(row.size()) == mean.size(),
          "standardizer: dimension mismatch");
  for (std::size_t c = 0; c < row.size(); ++c) {
    const auto k = static_cast<Eigen::Index>(c);
    row[c] = (row[c] - mean(k)) / scale(k);
  }
}

std::pair<Matrix, Standardizer> standardize(const Matrix& x) {
  Standardizer s = Standardizer::fit(x);
  return {s.apply(x), std::move(s)};
}

FeatureKernel FeatureKernel::fit(KernelFamily family, const Matrix& raw) {
  if (family == KernelFamily::kDelta) {
    return FeatureKernel{DeltaKernel{}, Standardizer::identity(raw.cols())};
  }
  Standardizer s = Standardizer::fit(raw);
  const double h = median_heuristic(s.apply(raw));
  return FeatureKernel{GaussianKernel{h}, std::move(s)};
}

Matrix FeatureKernel::transform(const Matrix& raw) const {
  return is_delta() ? raw : standardizer.apply(raw);
}

Matrix FeatureKernel::gram(const Matrix& raw_x, const Matrix& raw_y) const {
  return superpol::gram(transform(raw_x), transform(raw_y), spec);
}

}  // namespace superpol
