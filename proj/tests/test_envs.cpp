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

#include "superpol/envs.hpp"
#include "superpol/error.hpp"
#include "superpol/io.hpp"

using namespace superpol;

namespace {

double correlation(const Vector& x, const Vector& y) {
  const Eigen::ArrayXd dx = x.array() - x.mean();
  const Eigen::ArrayXd dy = y.array() - y.mean();
  return (dx * dy).sum() / std::sqrt((dx * dx).sum() * (dy * dy).sum());
}

const CattRow& row_for(const CattReport& r, int s_level) {
  for (const CattRow& row : r.rows) {
    if (row.s_level == s_level) return row;
  }
  throw std::runtime_error("missing stratum");
}

}  // namespace

TEST_SUITE("envs") {
  TEST_CASE("toy values") {
    const ToyValues half = toy_values(0.5);
    CHECK(half.behavior == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(half.standard == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(half.super == doctest::Approx(0.4).epsilon(1e-12));
    const ToyValues zero = toy_values(0.0);
    CHECK(std::abs(zero.behavior - 0.6) <= 1e-12);
    CHECK(std::abs(zero.standard - 0.4) <= 1e-12);
    CHECK(std::abs(zero.super - 1.0) <= 1e-12);
    const ToyValues seven = toy_values(0.7);
    CHECK(std::abs(seven.behavior + 0.24) <= 1e-12);
    CHECK(std::abs(seven.standard - 0.4) <= 1e-12);
    CHECK(std::abs(seven.super - 0.4) <= 1e-12);
  }

  TEST_CASE("toy values match the closed forms on a grid") {
    for (int k = 0; k <= 100; ++k) {
      const double eps = k / 100.0;
      const ToyValues v = toy_values(eps);
      REQUIRE(std::abs(v.behavior - (0.6 - 1.2 * eps)) <= 1e-12);
      REQUIRE(std::abs(v.standard - 0.4) <= 1e-12);
      REQUIRE(std::abs(v.super - (std::abs(0.7 - eps) + std::abs(eps - 0.3))) <= 1e-12);
    }
  }

  TEST_CASE("discrete behavior frequencies") {
    const BanditSample s = sample_latent(discrete_spec(0.9), 1000000, 71);
    double treated = 0.0, total = 0.0;
    for (Eigen::Index i = 0; i < s.u.rows(); ++i) {
      if (s.u(i, 0) == 1.0) {
        total += 1.0;
        treated += s.data.a[static_cast<std::size_t>(i)];
      }
    }
    CHECK(std::abs(treated / total - 0.1) <= 0.002);
  }

  TEST_CASE("continuous proxy correlation") {
    const BanditDataset d = sample(ContinuousBanditSpec{}, 1000000, 72);
    CHECK(std::abs(correlation(d.z.col(0), d.s.col(0)) - 3.0 / std::sqrt(11.0)) <= 0.01);
  }

  TEST_CASE("sequential data layout and reward range") {
    const SequentialDataset d = sample(SequentialSpec{}, 5, 73);
    CHECK(d.horizon() == 2);
    CHECK(d.rows() == 5);
    CHECK(d.o0.cols() == 1);
    for (const StepBlock& s : d.steps) {
      CHECK(s.o.cols() == 1);
      CHECK(s.w.cols() == 1);
      CHECK(s.r.minCoeff() >= -0.1);
      CHECK(s.r.maxCoeff() <= 1.1);
    }
    const SequentialDataset big = sample(SequentialSpec{}, 20000, 74);
    for (const StepBlock& s : big.steps) {
      CHECK(s.r.minCoeff() >= -0.1);
      CHECK(s.r.maxCoeff() <= 1.1);
    }
  }

  TEST_CASE("exact oracle values") {
    const FiniteBanditSpec toy1 = toy_spec(1.0);
    const BanditRule disagree = [](const BanditContext& c) { return 1 - c.recommended; };
    // A' = 1 - U at eps = 1, so disagreeing plays a = U:
    // E[8 (U - 0.5)(S - 0.2)(U - 0.3)] = 0.5 (2.8 + 1.2) E[S - 0.2] = 0.6.
    CHECK(oracle_value_exact(disagree, toy1) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(oracle_value_exact(optimal_rule(toy1, PolicyClass::kSA), toy1) ==
          doctest::Approx(1.0).epsilon(1e-12));
    const BanditRule zero = [](const BanditContext&) { return 0; };
    CHECK(std::abs(oracle_value_exact(zero, discrete_spec(0.7))) <= 1e-12);
    for (double eps : {0.0, 0.25, 0.5, 0.9}) {
      CHECK(oracle_value_exact(behavior_rule(), toy_spec(eps)) ==
            doctest::Approx(0.6 - 1.2 * eps).epsilon(1e-12));
    }
    CHECK(oracle_value_exact(optimal_rule(discrete_spec(0.9)), discrete_spec(0.9)) ==
          doctest::Approx(0.25).epsilon(1e-12));
  }

  TEST_CASE("Monte-Carlo value of the behavior clone matches enumeration") {
    SequentialSpec spec;
    spec.u_noise = 0.0;
    const SeqRule clone = [](const SeqContext& c) {
      return c.behavior_actions[static_cast<std::size_t>(c.t - 1)];
    };
    const double exact = sequential_exact_value(clone, spec);
    const McValue mc = oracle_value_mc(clone, spec, 200000, 75);
    CHECK(std::abs(mc.value - exact) <= 3.0 * mc.se);
    const FiniteBanditSpec d = discrete_spec(0.7);
    const McValue fm = oracle_value_mc(behavior_rule(), d, 200000, 76);
    CHECK(std::abs(fm.value - oracle_value_exact(behavior_rule(), d)) <= 3.0 * fm.se);
  }

  TEST_CASE("standard error shrinks with the square root of the episodes") {
    ContinuousBanditSpec spec;
    spec.epsilon = 0.7;
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      const McValue small = oracle_value_mc(behavior_rule(), spec, 20000, 100 + trial);
      const McValue large = oracle_value_mc(behavior_rule(), spec, 40000, 200 + trial);
      const double ratio = large.se / small.se;
      REQUIRE(ratio >= 0.6);
      REQUIRE(ratio <= 0.82);
    }
  }

  TEST_CASE("zero rewards give value zero with zero error") {
    ContinuousBanditSpec spec;
    spec.reward_scale = 0.0;
    const McValue v = oracle_value_mc(behavior_rule(), spec, 1000, 77);
    CHECK(v.value == 0.0);
    CHECK(v.se == 0.0);
  }

  TEST_CASE("CATT and CATC in the toy environment") {
    const CattReport r0 = catt_catc(toy_spec(0.0));
    CHECK(*row_for(r0, 0).catt == doctest::Approx(-1.12).epsilon(1e-12));
    CHECK(*row_for(r0, 0).catc == doctest::Approx(0.48).epsilon(1e-12));
    CHECK(*row_for(r0, 1).catt == doctest::Approx(4.48).epsilon(1e-12));
    CHECK(*row_for(r0, 1).catc == doctest::Approx(-1.92).epsilon(1e-12));
    CHECK(row_for(r0, 1).treated == doctest::Approx(0.5));
    CHECK(r0.improves_on_standard);
    const CattReport half = catt_catc(toy_spec(0.5));
    for (const CattRow& row : half.rows) CHECK(*row.catt * *row.catc > 0.0);
    CHECK_FALSE(half.improves_on_standard);
  }

  TEST_CASE("rewards that ignore the action give no strict improvement") {
    FiniteBanditSpec spec = random_finite_spec(5);
    for (FiniteCell& c : spec.cells) c.mean_reward[1] = c.mean_reward[0];
    const CattReport r = catt_catc(spec);
    for (const CattRow& row : r.rows) {
      if (row.catt) CHECK(*row.catt == doctest::Approx(0.0));
      if (row.catc) CHECK(*row.catc == doctest::Approx(0.0));
    }
    CHECK_FALSE(r.improves_on_standard);
    CHECK_FALSE(r.improves_on_behavior);
    CHECK_FALSE(r.improves_on_both);
  }

  TEST_CASE("super-policy dominance and its strict cases on random specs") {
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const FiniteBanditSpec spec = random_finite_spec(seed);
      const double super = oracle_value_exact(optimal_rule(spec, PolicyClass::kSA), spec);
      const double standard = oracle_value_exact(optimal_rule(spec, PolicyClass::kSOnly), spec);
      const double behavior = oracle_value_exact(behavior_rule(), spec);
      REQUIRE(super >= std::max(standard, behavior) - 1e-12);
      const CattReport r = catt_catc(spec);
      mismatches += (super > standard + 1e-12) != r.improves_on_standard;
      mismatches += (super > behavior + 1e-12) != r.improves_on_behavior;
    }
    CHECK(mismatches == 0);
  }

  TEST_CASE("sampling is seeded and independent across seeds") {
    const FiniteBanditSpec spec = discrete_spec(0.7);
    std::ostringstream a, b;
    write_bandit_csv(a, sample(spec, 1000, 5));
    write_bandit_csv(b, sample(spec, 1000, 5));
    CHECK(a.str() == b.str());
    for (std::uint64_t seed = 1; seed < 6; ++seed) {
      const Vector r1 = sample(spec, 10000, seed).r;
      const Vector r2 = sample(spec, 10000, seed + 1).r;
      CHECK(std::abs(correlation(r1, r2)) < 0.05);
    }
  }

  TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(discrete_spec(1.5), Error);
    ContinuousBanditSpec c;
    c.noise_sd = -1.0;
    CHECK_THROWS_AS(c.check(), Error);
    SequentialSpec s;
    s.horizon = 0;
    CHECK_THROWS_AS(s.check(), Error);
  }
}
