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
#include <span>
#include <string>
#include <utility>
#include <variant>

#include "superpol/datamodel.hpp"

namespace superpol {

// k(x, y) = exp(-|x - y|^2 / (2 h^2)).
struct GaussianKernel {
  double bandwidth = 1.0;
};

// k(x, y) = 1 when the rows are exactly equal, else 0. Used on discretized
// inputs, where the RKHS is every function on the observed levels.
struct DeltaKernel {};

using KernelSpec = std::variant<GaussianKernel, DeltaKernel>;

enum class KernelFamily { kGaussian, kDelta };

std::string describe(const KernelSpec& spec);

// Median of the nonzero pairwise Euclidean distances among at most `cap`
// rows, taken at a fixed stride through the data.
double median_heuristic(const Matrix& points, std::size_t cap = 1000);

double kernel_value(std::span<const double> x, std::span<const double> y,
                    const KernelSpec& spec);
Matrix gram(const Matrix& x, const Matrix& y, const KernelSpec& spec);

// Per-column affine map to zero mean and unit sample standard deviation.
// Constant columns are centred and keep scale 1.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& x);
  static Standardizer identity(Eigen::Index cols);
  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& x) const;
  void apply_in_place(std::span<double> row) const;
};

std::pair<Matrix, Standardizer> standardize(const Matrix& x);

// Kernel on raw inputs: standardization (Gaussian only) followed by the
// kernel, with the bandwidth chosen by the median heuristic on the
// standardized inputs it was fitted to.
struct FeatureKernel {
  KernelSpec spec;
  Standardizer standardizer;

  static FeatureKernel fit(KernelFamily family, const Matrix& raw);
  Matrix transform(const Matrix& raw) const;
  Matrix gram(const Matrix& raw_x, const Matrix& raw_y) const;
  bool is_delta() const { return std::holds_alternative<DeltaKernel>(spec); }
};

}  // namespace superpol
