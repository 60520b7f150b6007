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
#include <map>

#include "superpol/bandit.hpp"
#include "superpol/envs.hpp"
#include "superpol/eval.hpp"

using namespace superpol;

namespace {

Backends tabular_backends() {
  Backends b;
  b.bridge = BridgeKind::kTabular;
  b.projection = {ProjectionKind::kKernelRidge, KernelFamily::kDelta};
  return b;
}

EstimatorConfig tabular_config(std::uint64_t seed) {
  EstimatorConfig cfg;
  cfg.mu_proj = 1e-10;
  cfg.seed = seed;
  return cfg;
}

// E[R(a) | S = s, A = a'] by enumerating the environment's cells.
double conditional_effect(const FiniteBanditSpec& spec, int s_level, int a, int a_rec) {
  double num = 0.0, den = 0.0;
  for (const FiniteCell& c : spec.cells) {
    if (c.s_level != s_level) continue;
    const double w = c.prob * c.behavior[static_cast<std::size_t>(a_rec)];
    num += w * c.mean_reward[static_cast<std::size_t>(a)];
    den += w;
  }
  return num / den;
}

ProjectionSet constant_set(std::vector<double> intercepts, Eigen::Index cols) {
  ProjectionSet set;
  for (double c : intercepts) {
    set.models.push_back(ProjectionModel{LinearModel{c, Vector::Zero(cols)}});
  }
  return set;
}

}  // namespace

TEST_SUITE("bandit") {
  TEST_CASE("unconfounded discrete data: super and SZ agree, SOnly regret near 0.25") {
    const FiniteBanditSpec spec = discrete_spec(0.5);
    const Oracle oracle(spec, OracleConfig{});
    const BanditDataset data = sample(spec, 5000, 31);
    const EstimatorConfig cfg = tabular_config(31);
    const BanditFit super = learn(data, PolicyClass::kSuper, cfg, tabular_backends());
    const BanditFit sz = learn(data, PolicyClass::kSZ, cfg, tabular_backends());
    const BanditFit sonly = learn(data, PolicyClass::kSOnly, cfg, tabular_backends());
    CHECK(std::abs(oracle.regret(super.rule()) - oracle.regret(sz.rule())) <= 0.02);
    CHECK(oracle.regret(sonly.rule()) == doctest::Approx(0.25).epsilon(0.2));
  }

  TEST_CASE("confounded discrete data over 50 replications") {
    const FiniteBanditSpec spec = discrete_spec(0.9);
    const Oracle oracle(spec, OracleConfig{});
    double sums[3] = {0, 0, 0};
    int super_ahead = 0;
    for (std::uint64_t r = 0; r < 50; ++r) {
      const BanditDataset data = sample(spec, 5000, 500 + r);
      const EstimatorConfig cfg = tabular_config(500 + r);
      const BridgeResult bridge = fit_bridge(bandit_problem(data), cfg, tabular_backends());
      int k = 0;
      double values[3];
      for (PolicyClass kind : {PolicyClass::kSOnly, PolicyClass::kSZ, PolicyClass::kSuper}) {
        const BanditFit fit = learn_with_bridge(data, kind, bridge, cfg, tabular_backends());
        sums[k] += oracle.regret(fit.rule());
        values[k] = estimate_value(fit.rule(), bridge.q, data);
        ++k;
      }
      if (values[2] >= values[0]) ++super_ahead;
    }
    CHECK(std::abs(sums[0] / 50 - 0.25) <= 0.05);
    CHECK(std::abs(sums[1] / 50 - 0.24) <= 0.05);
    CHECK(std::abs(sums[2] / 50 - 0.17) <= 0.05);
    CHECK(super_ahead >= 45);
  }

  TEST_CASE("uninformative proxies reduce the bridge to within-stratum means") {
    const FiniteBanditSpec spec = toy_spec(0.5);
    const BanditDataset data = sample(spec, 20000, 41);
    const BanditFit fit = learn(data, PolicyClass::kSuper, tabular_config(41), tabular_backends());
    std::map<std::pair<double, int>, std::pair<double, int>> means;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      auto& m = means[{data.s(static_cast<Eigen::Index>(i), 0), data.a[i]}];
      m.first += data.r(static_cast<Eigen::Index>(i));
      m.second += 1;
    }
    for (const auto& [key, m] : means) {
      const auto [s, a] = key;
      const std::vector<double> row{data.w(0, 0), s, a == 0 ? 1.0 : 0.0, a == 1 ? 1.0 : 0.0};
      CHECK(fit.bridge.q.evaluate_row(row) == doctest::Approx(m.first / m.second).epsilon(1e-9));
    }
    for (int s_level = 0; s_level < 2; ++s_level) {
      for (int rec = 0; rec < 2; ++rec) {
        const int expected =
            conditional_effect(spec, s_level, 1, rec) > conditional_effect(spec, s_level, 0, rec)
                ? 1 : 0;
        const std::vector<double> s = spec.s_values[static_cast<std::size_t>(s_level)];
        const std::vector<double> z{data.z(0, 0)};
        CHECK(fit.act(s, z, rec) == expected);
      }
    }
  }

  TEST_CASE("recommended action reveals the confounder") {
    const FiniteBanditSpec spec = toy_spec(0.1, true);
    const BanditDataset data = sample(spec, 20000, 42);
    for (PolicyClass kind : {PolicyClass::kSA, PolicyClass::kSuper}) {
      const BanditFit fit = learn(data, kind, tabular_config(42), tabular_backends());
      for (int rec = 0; rec < 2; ++rec) {
        const int expected =
            conditional_effect(spec, 1, 1, rec) > conditional_effect(spec, 1, 0, rec) ? 1 : 0;
        const std::vector<double> z{static_cast<double>(rec)};
        CHECK(fit.act(std::vector<double>{1.0}, z, rec) == expected);
      }
      CHECK(fit.act(std::vector<double>{1.0}, std::vector<double>{1.0}, 1) == 1);
      CHECK(fit.act(std::vector<double>{1.0}, std::vector<double>{0.0}, 0) == 0);
    }
  }

  TEST_CASE("SOnly and SZ policies ignore the inputs outside their class") {
    const BanditDataset data = sample(ContinuousBanditSpec{0.9}, 400, 43);
    Backends b;
    b.projection = {ProjectionKind::kLinear, KernelFamily::kGaussian};
    EstimatorConfig cfg;
    cfg.seed = 43;
    const BridgeResult bridge = fit_bridge(bandit_problem(data), cfg, b);
    const BanditFit sonly = learn_with_bridge(data, PolicyClass::kSOnly, bridge, cfg, b);
    const BanditFit sz = learn_with_bridge(data, PolicyClass::kSZ, bridge, cfg, b);
    for (double s = -2.0; s <= 2.0; s += 0.25) {
      const std::vector<double> sv{s};
      const int base = sonly.act(sv, std::vector<double>{-3.0}, 0);
      const int base_sz = sz.act(sv, std::vector<double>{0.5}, 0);
      for (double z : {-3.0, -1.0, 0.0, 2.0, 5.0}) {
        for (int rec : {0, 1}) {
          CHECK(sonly.act(sv, std::vector<double>{z}, rec) == base);
        }
      }
      CHECK(sz.act(sv, std::vector<double>{0.5}, 1) == base_sz);
    }
  }

  TEST_CASE("dominating projection always chooses that action") {
    BanditFit fit;
    fit.kind = PolicyClass::kSuper;
    fit.s_cols = 1;
    fit.z_cols = 1;
    ProjectionSet set = constant_set({0.0, 1.0}, 3);
    std::get<LinearModel>(set.models[0].body).weights << 0.3, -0.2, 0.4;
    std::get<LinearModel>(set.models[1].body).weights << 0.3, -0.2, 0.4;
    fit.projections.push_back({PolicyClass::kSuper, set});
    for (double s : {-1.0, 0.0, 2.0}) {
      for (int rec : {0, 1}) {
        CHECK(fit.act(std::vector<double>{s}, std::vector<double>{s * 3}, rec) == 1);
      }
    }
  }

  TEST_CASE("ties go to the smallest action") {
    CHECK(argmax_first(std::vector<double>{1.0, 1.0}) == 0);
    CHECK(argmax_first(std::vector<double>{0.0, 2.0, 2.0}) == 1);
  }

  TEST_CASE("constant bridge gives a constant value") {
    BanditDataset data = sample(discrete_spec(0.7), 2000, 44);
    data.r.setConstant(1.75);
    const BridgeResult bridge =
        fit_bridge(bandit_problem(data), tabular_config(1), tabular_backends());
    for (PolicyClass kind : {PolicyClass::kSOnly, PolicyClass::kSuper}) {
      const BanditFit fit = learn_with_bridge(data, kind, bridge, tabular_config(1),
                                              tabular_backends());
      CHECK(estimate_value(fit.rule(), bridge.q, data) == doctest::Approx(1.75).epsilon(1e-12));
    }
  }

  TEST_CASE("behavior clone value is the mean bridge at the observed actions") {
    const BanditDataset data = sample(discrete_spec(0.7), 2000, 45);
    const BridgeResult bridge =
        fit_bridge(bandit_problem(data), tabular_config(1), tabular_backends());
    const double mean = bridge.q.evaluate(bandit_problem(data).q_inputs).mean();
    CHECK(estimate_value(behavior_rule(), bridge.q, data) == doctest::Approx(mean).epsilon(1e-12));
  }

  TEST_CASE("optimal rules are nested by class") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const FiniteBanditSpec spec = random_finite_spec(seed, 2 + static_cast<int>(seed % 2));
      const double v_super = oracle_value_exact(optimal_rule(spec, PolicyClass::kSuper), spec);
      const double v_sz = oracle_value_exact(optimal_rule(spec, PolicyClass::kSZ), spec);
      const double v_sonly = oracle_value_exact(optimal_rule(spec, PolicyClass::kSOnly), spec);
      REQUIRE(v_super >= v_sz - 1e-12);
      REQUIRE(v_sz >= v_sonly - 1e-12);
    }
  }

  TEST_CASE("shifting rewards shifts every score and keeps the actions") {
    const BanditDataset data = sample(discrete_spec(0.9), 3000, 46);
    BanditDataset shifted = data;
    shifted.r.array() += 2.5;
    const BanditFit a = learn(data, PolicyClass::kSuper, tabular_config(1), tabular_backends());
    const BanditFit b =
        learn(shifted, PolicyClass::kSuper, tabular_config(1), tabular_backends());
    for (double s : {0.0, 1.0}) {
      for (double z : {0.0, 1.0}) {
        for (int rec : {0, 1}) {
          const std::vector<double> sv{s}, zv{z};
          const auto sa = a.scores(sv, zv, rec);
          const auto sb = b.scores(sv, zv, rec);
          for (int k = 0; k < 2; ++k) CHECK(sb[k] - sa[k] == doctest::Approx(2.5).epsilon(1e-9));
          CHECK(a.act(sv, zv, rec) == b.act(sv, zv, rec));
        }
      }
    }
  }

  TEST_CASE("relabeling actions permutes the policy") {
    const BanditDataset data = sample(discrete_spec(0.9), 3000, 47);
    BanditDataset swapped = data;
    for (int& a : swapped.a) a = 1 - a;
    const BanditFit a = learn(data, PolicyClass::kSuper, tabular_config(1), tabular_backends());
    const BanditFit b =
        learn(swapped, PolicyClass::kSuper, tabular_config(1), tabular_backends());
    for (double s : {0.0, 1.0}) {
      for (double z : {0.0, 1.0}) {
        for (int rec : {0, 1}) {
          const std::vector<double> sv{s}, zv{z};
          const auto sa = a.scores(sv, zv, rec);
          const auto sb = b.scores(sv, zv, 1 - rec);
          CHECK(sb[0] == doctest::Approx(sa[1]).epsilon(1e-9));
          CHECK(sb[1] == doctest::Approx(sa[0]).epsilon(1e-9));
        }
      }
    }
  }

  TEST_CASE("unseen delta levels fall back to coarser classes") {
    const BanditDataset data = sample(discrete_spec(0.7), 2000, 48);
    const BanditFit fit = learn(data, PolicyClass::kSuper, tabular_config(1), tabular_backends());
    REQUIRE(fit.projections.size() == 3);
    CHECK(fit.projections[1].first == PolicyClass::kSZ);
    CHECK(fit.projections[2].first == PolicyClass::kSOnly);
    const std::vector<double> s{1.0}, z_unseen{7.0};
    const BanditFit sonly =
        learn(data, PolicyClass::kSOnly, tabular_config(1), tabular_backends());
    CHECK(fit.act(s, z_unseen, 0) == sonly.act(s, z_unseen, 0));
  }
}
