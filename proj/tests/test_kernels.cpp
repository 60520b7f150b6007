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

#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "superpol/kernels.hpp"
#include "superpol/rng.hpp"

using namespace superpol;

namespace {

Matrix column(std::initializer_list<double> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return m;
}

Matrix random_points(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  }
  return m;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("median heuristic on tiny sets") {
    CHECK(median_heuristic(column({0.0, 1.0})) == doctest::Approx(1.0));
    CHECK(median_heuristic(column({0.0, 1.0, 2.0})) == doctest::Approx(1.0));
  }

  TEST_CASE("median heuristic on standard normal draws") {
    Rng rng(2024);
    const double h = median_heuristic(random_points(rng, 1000, 1));
    CHECK(h >= 0.85);
    CHECK(h <= 1.05);
  }

  TEST_CASE("gram closed forms") {
    const Matrix one = column({0.3});
    CHECK(gram(one, one, GaussianKernel{1.0})(0, 0) == 1.0);
    CHECK(gram(column({0.0}), column({1.0}), GaussianKernel{1.0})(0, 0) ==
          doctest::Approx(0.606530659).epsilon(1e-9));
    Matrix x(1, 2);
    x << 0, 1;
    Matrix y(2, 2);
    y << 0, 1, 1, 1;
    const Matrix k = gram(x, y, DeltaKernel{});
    CHECK(k(0, 0) == 1.0);
    CHECK(k(0, 1) == 0.0);
  }

  TEST_CASE("gram symmetry, transpose and PSD") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(5));
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(199));
      const Matrix x = random_points(rng, n, d);
      const Matrix y = random_points(rng, 7, d);
      const GaussianKernel spec{0.3 + rng.uniform() * 2.0};
      const Matrix k = gram(x, x, spec);
      REQUIRE((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
      REQUIRE((gram(x, y, spec) - gram(y, x, spec).transpose()).cwiseAbs().maxCoeff() == 0.0);
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(k, Eigen::EigenvaluesOnly);
      REQUIRE(eig.eigenvalues().minCoeff() >= -1e-9 * static_cast<double>(n));
    }
  }

  TEST_CASE("delta gram is the identical-row indicator") {
    Rng rng(3);
    Matrix x(60, 2);
    for (Eigen::Index i = 0; i < 60; ++i) {
      x(i, 0) = static_cast<double>(rng.below(2));
      x(i, 1) = static_cast<double>(rng.below(3));
    }
    const Matrix k = gram(x, x, DeltaKernel{});
    for (Eigen::Index i = 0; i < 60; ++i) {
      for (Eigen::Index j = 0; j < 60; ++j) {
        const bool same = x(i, 0) == x(j, 0) && x(i, 1) == x(j, 1);
        REQUIRE(k(i, j) == (same ? 1.0 : 0.0));
      }
    }
  }

  TEST_CASE("standardize symmetric and constant columns") {
    Matrix x(2, 2);
    x << 0, 5, 2, 5;
    const auto [z, st] = standardize(x);
    CHECK(z(0, 0) == doctest::Approx(-z(1, 0)));
    CHECK(z.col(0).sum() == doctest::Approx(0.0));
    CHECK(z(0, 0) < 0.0);
    CHECK(z.col(1).isZero());
    CHECK(st.scale(1) == 1.0);
  }

  TEST_CASE("stored standardization is affine and invertible") {
    Rng rng(4);
    const Matrix x = random_points(rng, 50, 3);
    const Standardizer st = Standardizer::fit(x);
    const Matrix fresh = random_points(rng, 10, 3);
    const Matrix mapped = st.apply(fresh);
    CHECK((st.invert(mapped) - fresh).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix a = st.apply(fresh.topRows(1));
    const Matrix b = st.apply(fresh.middleRows(1, 1));
    const Matrix mid = st.apply(0.5 * (fresh.topRows(1) + fresh.middleRows(1, 1)));
    CHECK((mid - 0.5 * (a + b)).cwiseAbs().maxCoeff() < 1e-12);
    std::vector<double> row{fresh(2, 0), fresh(2, 1), fresh(2, 2)};
    st.apply_in_place(row);
    for (int j = 0; j < 3; ++j) CHECK(row[j] == doctest::Approx(mapped(2, j)));
  }

  TEST_CASE("feature kernel picks the median bandwidth on standardized inputs") {
    Rng rng(5);
    Matrix x = random_points(rng, 300, 2);
    x.col(1) *= 40.0;
    const FeatureKernel k = FeatureKernel::fit(KernelFamily::kGaussian, x);
    const auto* g = std::get_if<GaussianKernel>(&k.spec);
    REQUIRE(g != nullptr);
    CHECK(g->bandwidth == doctest::Approx(median_heuristic(standardize(x).first)));
    CHECK(FeatureKernel::fit(KernelFamily::kDelta, x).is_delta());
  }
}
