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
#include "superpol/error.hpp"
#include "superpol/eval.hpp"
#include "superpol/sequential.hpp"

using namespace superpol;

namespace {

Backends linear_backends() {
  Backends b;
  b.projection = {ProjectionKind::kLinear, KernelFamily::kGaussian};
  return b;
}

// Discrete memoryless two-step environment with binary U_t, O_0, W_t and A_t.
// Observations o_1 = o_2 = 0 carry nothing; O_0 and W_t are noisy copies of
// the confounder. U_2 = U_1 when A_1 = 1 and 1 - U_1 otherwise.
struct TinyEnv {
  static double proxy(int value, int u) { return value == u ? 0.75 : 0.25; }
  static double behavior(int a, int u) { return a == u ? 0.75 : 0.25; }
  static double reward1(int u, int a) { return a == 1 ? 1.0 - 2.0 * u : 0.2 * u; }
  static double reward2(int u, int a) { return a == 1 ? 2.0 * u - 0.5 : 0.8; }
  static int next_state(int u, int a) { return a == 1 ? u : 1 - u; }
};

// Every joint cell of (U_1, O_0, W_1, A_1, W_2, A_2) repeated in proportion to
// its probability, so the empirical law is the population law.
SequentialDataset tiny_population() {
  struct Row {
    int o0, w1, a1, w2, a2;
    double r1, r2;
  };
  std::vector<Row> rows;
  for (int u1 = 0; u1 < 2; ++u1) {
    for (int o0 = 0; o0 < 2; ++o0) {
      for (int w1 = 0; w1 < 2; ++w1) {
        for (int a1 = 0; a1 < 2; ++a1) {
          const int u2 = TinyEnv::next_state(u1, a1);
          for (int w2 = 0; w2 < 2; ++w2) {
            for (int a2 = 0; a2 < 2; ++a2) {
              const double p = 0.5 * TinyEnv::proxy(o0, u1) * TinyEnv::proxy(w1, u1) *
                               TinyEnv::behavior(a1, u1) * TinyEnv::proxy(w2, u2) *
                               TinyEnv::behavior(a2, u2);
              const long count = std::lround(p * 2048.0);
              for (long k = 0; k < count; ++k) {
                rows.push_back({o0, w1, a1, w2, a2, TinyEnv::reward1(u1, a1),
                                TinyEnv::reward2(u2, a2)});
              }
            }
          }
        }
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  SequentialDataset d;
  d.o0.resize(n, 1);
  d.steps.resize(2);
  for (StepBlock& s : d.steps) {
    s.o = Matrix::Zero(n, 1);
    s.w.resize(n, 1);
    s.r.resize(n);
    s.a.resize(static_cast<std::size_t>(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    d.o0(i, 0) = r.o0;
    d.steps[0].w(i, 0) = r.w1;
    d.steps[0].a[static_cast<std::size_t>(i)] = r.a1;
    d.steps[0].r(i) = r.r1;
    d.steps[1].w(i, 0) = r.w2;
    d.steps[1].a[static_cast<std::size_t>(i)] = r.a2;
    d.steps[1].r(i) = r.r2;
  }
  d.reward_bound = 10.0;
  return d;
}

// Value of a rule in TinyEnv by enumerating latent paths and recommendations.
double tiny_value(const SequentialFit& fit) {
  const std::vector<double> obs1{0.0}, obs2{0.0, 0.0};
  double value = 0.0;
  for (int u1 = 0; u1 < 2; ++u1) {
    for (int b1 = 0; b1 < 2; ++b1) {
      const double p1 = 0.5 * TinyEnv::behavior(b1, u1);
      const int a1 = fit.act(1, obs1, {}, std::vector<int>{b1});
      const int u2 = TinyEnv::next_state(u1, a1);
      for (int b2 = 0; b2 < 2; ++b2) {
        const double p2 = p1 * TinyEnv::behavior(b2, u2);
        const int a2 = fit.act(2, obs2, std::vector<int>{a1}, std::vector<int>{b1, b2});
        value += p2 * (TinyEnv::reward1(u1, a1) + TinyEnv::reward2(u2, a2));
      }
    }
  }
  return value;
}

EstimatorConfig exact_config() {
  EstimatorConfig cfg;
  cfg.mu_proj = 1e-12;
  return cfg;
}

Backends tabular_backends() {
  Backends b;
  b.bridge = BridgeKind::kTabular;
  b.projection = {ProjectionKind::kKernelRidge, KernelFamily::kDelta};
  return b;
}

}  // namespace

TEST_SUITE("sequential") {
  TEST_CASE("one-step episodes reproduce the bandit learner bit for bit") {
    SequentialSpec spec;
    spec.horizon = 1;
    const SequentialDataset seq = sample(spec, 300, 61);
    const BanditDataset bandit = as_bandit(seq);
    EstimatorConfig cfg;
    cfg.seed = 61;
    Backends ridge;
    ridge.projection = {ProjectionKind::kKernelRidge, KernelFamily::kGaussian};
    for (const Backends& b : {linear_backends(), ridge}) {
      for (const auto& [seq_kind, bandit_kind] :
           {std::pair{PolicyClass::kSuperSeq, PolicyClass::kSA},
            std::pair{PolicyClass::kCommon, PolicyClass::kSOnly}}) {
        const SequentialFit sf = learn_seq(seq, seq_kind, cfg, b);
        const BanditFit bf = learn(bandit, bandit_kind, cfg, b);
        for (std::size_t i = 0; i < bandit.rows(); ++i) {
          const auto r = static_cast<Eigen::Index>(i);
          const LevelKey s = row_key(bandit.s, r);
          const LevelKey z = row_key(bandit.z, r);
          const int rec = bandit.a[i];
          REQUIRE(sf.act(1, s, {}, std::span<const int>(&rec, 1)) == bf.act(s, z, rec));
        }
        CHECK(dump(sf.bridges[0][0]) == dump(bf.bridge.q));
        CHECK(estimate_value_seq(sf, seq) == estimate_value(bf.rule(), bf.bridge.q, bandit));
      }
    }
  }

  TEST_CASE("without confounding both classes reach the same regret") {
    SequentialSpec spec;
    spec.delta = 0.5;
    const SequentialDataset data = sample(spec, 2000, 62);
    EstimatorConfig cfg;
    cfg.seed = 62;
    SequentialLearner learner(data, cfg, linear_backends());
    const SequentialFit common = learner.learn(PolicyClass::kCommon);
    const SequentialFit super = learner.learn(PolicyClass::kSuperSeq);
    const McValue vc = oracle_value_mc(common.rule(), spec, 100000, 7);
    const McValue vs = oracle_value_mc(super.rule(), spec, 100000, 7);
    const double se = std::sqrt(vc.se * vc.se + vs.se * vs.se);
    MESSAGE("common " << vc.value << " superseq " << vs.value << " se " << se);
    CHECK(std::abs(vc.value - vs.value) <= 2.0 * se);
  }

  TEST_CASE("common policies ignore the behavior actions") {
    const SequentialDataset data = sample(SequentialSpec{}, 500, 63);
    EstimatorConfig cfg;
    cfg.seed = 63;
    const SequentialFit fit = learn_seq(data, PolicyClass::kCommon, cfg, linear_backends());
    for (double o1 = -1.0; o1 <= 1.0; o1 += 0.25) {
      const std::vector<double> obs1{o1}, obs2{o1, -o1};
      const int a1 = fit.act(1, obs1, {}, std::vector<int>{0});
      CHECK(fit.act(1, obs1, {}, std::vector<int>{1}) == a1);
      for (int own : {0, 1}) {
        const int base = fit.act(2, obs2, std::vector<int>{own}, std::vector<int>{0, 0});
        for (int b1 : {0, 1}) {
          for (int b2 : {0, 1}) {
            CHECK(fit.act(2, obs2, std::vector<int>{own}, std::vector<int>{b1, b2}) == base);
          }
        }
      }
    }
  }

  TEST_CASE("equal projections tie to action 0") {
    SequentialFit fit;
    fit.kind = PolicyClass::kCommon;
    fit.horizon = 1;
    fit.o_cols = 1;
    ProjectionSet set;
    for (int a = 0; a < 2; ++a) {
      set.models.push_back(ProjectionModel{LinearModel{0.4, Vector::Constant(1, 0.2)}});
    }
    fit.projections = {{set}};
    CHECK(fit.act(1, std::vector<double>{3.0}, {}, std::vector<int>{1}) == 0);
  }

  TEST_CASE("the second recommendation carries the sign of the second-step gain") {
    // With behavior A_2 = 1{U_2 > 0} flipped w.p. 0.1 and R_2 increasing in
    // U_2 (A_2 - 0.5), the best second action given an uninformative
    // observation is the recommended one.
    SequentialSpec spec;
    spec.u_noise = 0.0;
    for (int b2 = 0; b2 < 2; ++b2) {
      double gain = 0.0;  // E[R_2(1) - R_2(0) | A_2 = b2], unnormalized
      for (int u1 : {-1, 1}) {
        for (int b1 = 0; b1 < 2; ++b1) {
          const double p1 = 0.5 * ((b1 == (u1 > 0)) ? 0.9 : 0.1);
          const double u2 = std::clamp(0.5 * u1 + (b1 - 0.5), -1.0, 1.0);
          const double p2 = p1 * ((b2 == (u2 > 0)) ? 0.9 : 0.1);
          gain += p2 * (1.0 / (1.0 + std::exp(-0.5 * u2)) - 1.0 / (1.0 + std::exp(0.5 * u2)));
        }
      }
      CHECK((gain > 0.0) == (b2 == 1));
    }
    const auto second = [](int fixed) {
      return [fixed](const SeqContext& c) {
        const int rec = c.behavior_actions[static_cast<std::size_t>(c.t - 1)];
        return c.t == 1 || fixed < 0 ? rec : fixed;
      };
    };
    const double follow = sequential_exact_value(second(-1), spec);
    CHECK(follow > sequential_exact_value(second(0), spec));
    CHECK(follow > sequential_exact_value(second(1), spec));
  }

  TEST_CASE("constant bridge gives a constant value") {
    SequentialSpec spec;
    spec.horizon = 1;
    const SequentialDataset data = sample(spec, 200, 65);
    SequentialFit fit;
    fit.kind = PolicyClass::kCommon;
    fit.horizon = 1;
    fit.o_cols = 1;
    ProjectionSet set;
    set.models.push_back(ProjectionModel{LinearModel{0.0, Vector::Constant(1, 1.0)}});
    set.models.push_back(ProjectionModel{LinearModel{0.0, Vector::Constant(1, -1.0)}});
    fit.projections = {{set}};
    const FeatureKernel flat{GaussianKernel{1e9}, Standardizer::identity(4)};
    fit.bridges = {{BridgeFunction(KernelExpansion(flat, Matrix::Zero(1, 4),
                                                   Vector::Constant(1, 0.8)), 1.0)}};
    CHECK(estimate_value_seq(fit, data) == doctest::Approx(0.8).epsilon(1e-12));
  }

  TEST_CASE("population data: the identified value equals the enumerated value") {
    const SequentialDataset data = tiny_population();
    REQUIRE(data.rows() == 2048);
    SequentialLearner learner(data, exact_config(), tabular_backends());
    for (PolicyClass kind : {PolicyClass::kCommon, PolicyClass::kSuperSeq}) {
      const SequentialFit fit = learner.learn(kind);
      CHECK(fit.diagnostics[0].clipped == 0);
      CHECK(estimate_value_seq(fit, data) == doctest::Approx(tiny_value(fit)).epsilon(1e-9));
    }
  }

  TEST_CASE("population data: backward recursion solves the stage moments") {
    const SequentialDataset data = tiny_population();
    SequentialLearner learner(data, exact_config(), tabular_backends());
    const SequentialFit fit = learner.learn(PolicyClass::kCommon);
    const auto n = static_cast<Eigen::Index>(data.rows());
    // Step 2: E[q_2(W_2, ., A_1, A_2) - R_2 | O_0, A_1, A_2] = 0.
    // Step 1: E[q_1(W_1, ., A_1) - R_1 - q_2(W_2, ., A_1, nu_2) | O_0, A_1] = 0.
    std::map<std::vector<int>, std::pair<double, int>> stage2, stage1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const int a1 = data.steps[0].a[k], a2 = data.steps[1].a[k];
      const double o0 = data.o0(i, 0);
      const std::vector<double> q2_row{data.steps[1].w(i, 0), 0.0, 0.0, a1 == 0 ? 1.0 : 0.0,
                                       a1 == 1 ? 1.0 : 0.0, a2 == 0 ? 1.0 : 0.0,
                                       a2 == 1 ? 1.0 : 0.0};
      auto& m2 = stage2[{static_cast<int>(o0), a1, a2}];
      m2.first += fit.bridges[1][0].evaluate_row(q2_row) - data.steps[1].r(i);
      m2.second += 1;
      const int nu2 = fit.act(2, std::vector<double>{0.0, 0.0}, std::vector<int>{a1},
                              std::vector<int>{a1, a2});
      std::vector<double> next = q2_row;
      next[5] = nu2 == 0 ? 1.0 : 0.0;
      next[6] = nu2 == 1 ? 1.0 : 0.0;
      const std::vector<double> q1_row{data.steps[0].w(i, 0), 0.0, a1 == 0 ? 1.0 : 0.0,
                                       a1 == 1 ? 1.0 : 0.0};
      auto& m1 = stage1[{static_cast<int>(o0), a1}];
      m1.first += fit.bridges[0][0].evaluate_row(q1_row) - data.steps[0].r(i) -
                  fit.bridges[1][0].evaluate_row(next);
      m1.second += 1;
    }
    for (const auto& [key, m] : stage2) CHECK(std::abs(m.first / m.second) <= 1e-10);
    for (const auto& [key, m] : stage1) CHECK(std::abs(m.first / m.second) <= 1e-10);
  }

  TEST_CASE("super-policy depends on behavior actions, common never does") {
    const SequentialDataset data = tiny_population();
    SequentialLearner learner(data, exact_config(), tabular_backends());
    const SequentialFit super = learner.learn(PolicyClass::kSuperSeq);
    const SequentialFit common = learner.learn(PolicyClass::kCommon);
    bool super_depends = false;
    const std::vector<double> obs2{0.0, 0.0};
    for (int own : {0, 1}) {
      for (int b1 : {0, 1}) {
        const int s0 = super.act(2, obs2, std::vector<int>{own}, std::vector<int>{b1, 0});
        const int s1 = super.act(2, obs2, std::vector<int>{own}, std::vector<int>{b1, 1});
        super_depends = super_depends || s0 != s1;
        CHECK(common.act(2, obs2, std::vector<int>{own}, std::vector<int>{b1, 0}) ==
              common.act(2, obs2, std::vector<int>{own}, std::vector<int>{1 - b1, 1}));
      }
    }
    CHECK(super_depends);
  }

  TEST_CASE("scaled targets stay within the reward bound") {
    const SequentialDataset data = sample(SequentialSpec{}, 800, 66);
    EstimatorConfig cfg;
    cfg.seed = 66;
    SequentialLearner learner(data, cfg, linear_backends());
    for (PolicyClass kind : {PolicyClass::kCommon, PolicyClass::kSuperSeq}) {
      const SequentialFit fit = learner.learn(kind);
      for (const StageDiagnostics& d : fit.diagnostics) {
        CHECK(d.max_abs_target <= data.reward_bound + 1e-12);
      }
    }
  }

  TEST_CASE("action tuples beyond the enumeration limit are refused") {
    SequentialSpec spec;
    spec.horizon = 8;
    const SequentialDataset data = sample(spec, 20, 67);
    CHECK_THROWS_AS(SequentialLearner(data, EstimatorConfig{}, linear_backends()), Error);
    CHECK(decode_tuple(encode_tuple(std::vector<int>{1, 0, 2}, 3), 3, 3) ==
          std::vector<int>{1, 0, 2});
  }
}
