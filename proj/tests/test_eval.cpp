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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "superpol/bandit.hpp"
#include "superpol/config.hpp"
#include "superpol/envs.hpp"
#include "superpol/error.hpp"
#include "superpol/eval.hpp"
#include "superpol/io.hpp"
#include "superpol/rng.hpp"

using namespace superpol;

namespace {

Backends tabular_backends() {
  Backends b;
  b.bridge = BridgeKind::kTabular;
  b.projection = {ProjectionKind::kKernelRidge, KernelFamily::kDelta};
  return b;
}

ExperimentConfig discrete_experiment(double eps, int reps) {
  ExperimentConfig cfg;
  cfg.setting = "eps=" + format_double(eps);
  cfg.spec = discrete_spec(eps);
  cfg.n = 5000;
  cfg.replications = reps;
  cfg.seed = 300;
  cfg.kinds = {PolicyClass::kSOnly, PolicyClass::kSZ, PolicyClass::kSuper};
  cfg.estimator.mu_proj = 1e-10;
  cfg.backends = tabular_backends();
  return cfg;
}

ExperimentReport sample_report() {
  ExperimentReport r;
  const char* kinds[] = {"sonly", "sz", "super"};
  for (const char* setting : {"eps=0.5", "eps=0.7", "eps=0.9"}) {
    for (int k = 0; k < 3; ++k) {
      r.rows.push_back(ReportRow{kinds[k], setting, 0.25 - 0.03 * k + 0.001 / 3.0,
                                 1.0 / (7.0 + k), 50});
    }
  }
  return r;
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("the optimal rule has zero regret") {
    const FiniteBanditSpec spec = discrete_spec(0.7);
    CHECK(regret(optimal_rule(spec), spec, OracleConfig{}) == doctest::Approx(0.0));
    RegretReference sa{PolicyClass::kSA};
    CHECK(regret(optimal_rule(spec, PolicyClass::kSA), spec, OracleConfig{}, sa) ==
          doctest::Approx(0.0));
  }

  TEST_CASE("behavior clone regret in the revealing toy environment") {
    const FiniteBanditSpec spec = toy_spec(0.0);
    CHECK(regret(behavior_rule(), spec, OracleConfig{}) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(regret(behavior_rule(), spec, OracleConfig{}, RegretReference{PolicyClass::kSA}) ==
          doctest::Approx(0.4).epsilon(1e-12));
  }

  TEST_CASE("learned SOnly regret without confounding") {
    const FiniteBanditSpec spec = discrete_spec(0.5);
    const BanditDataset data = sample(spec, 5000, 81);
    EstimatorConfig cfg;
    cfg.mu_proj = 1e-10;
    const BanditFit fit = learn(data, PolicyClass::kSOnly, cfg, tabular_backends());
    CHECK(std::abs(regret(fit.rule(), spec, OracleConfig{}) - 0.25) <= 0.05);
  }

  TEST_CASE("replicated discrete regrets and their ordering") {
    const ExperimentReport r = run_replications(discrete_experiment(0.7, 50));
    REQUIRE(r.rows.size() == 3);
    const double expected[] = {0.25, 0.22, 0.18};
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(r.rows[k].mean - expected[k]) <= 0.05);
      CHECK(r.rows[k].n_reps == 50);
    }
    CHECK(r.reference_value == doctest::Approx(0.25));
    const ExperimentReport c = run_replications(discrete_experiment(0.9, 50));
    for (int k = 0; k + 1 < 3; ++k) {
      const double pooled = std::sqrt((c.rows[k].sd * c.rows[k].sd +
                                       c.rows[k + 1].sd * c.rows[k + 1].sd) / 2.0 / 50.0);
      CHECK(c.rows[k + 1].mean <= c.rows[k].mean + pooled);
    }
  }

  TEST_CASE("a single replication has zero sd") {
    const ExperimentReport r = run_replications(discrete_experiment(0.7, 1));
    for (const ReportRow& row : r.rows) CHECK(row.sd == 0.0);
  }

  TEST_CASE("replication order and thread count do not change the report") {
    ExperimentConfig cfg = discrete_experiment(0.9, 6);
    const ExperimentReport serial = run_replications(cfg);
    cfg.jobs = 3;
    const ExperimentReport threaded = run_replications(cfg);
    CHECK(render(serial, ReportFormat::kCsv) == render(threaded, ReportFormat::kCsv));
    std::vector<std::vector<double>> columns(3);
    for (int i = 5; i >= 0; --i) {
      ExperimentConfig one = discrete_experiment(0.9, 1);
      one.seed = cfg.seed + static_cast<std::uint64_t>(i);
      const ExperimentReport r = run_replications(one);
      for (int k = 0; k < 3; ++k) columns[k].push_back(r.samples[k][0]);
    }
    for (int k = 0; k < 3; ++k) {
      std::vector<double> forward = serial.samples[k];
      std::vector<double> reversed = columns[k];
      std::reverse(reversed.begin(), reversed.end());
      CHECK(forward == reversed);
      const Summary s = summarize(columns[k]);
      CHECK(s.mean == doctest::Approx(serial.rows[k].mean).epsilon(1e-14));
      CHECK(s.sd == doctest::Approx(serial.rows[k].sd).epsilon(1e-12));
    }
  }

  TEST_CASE("aggregation agrees with a two-pass formula") {
    Rng rng(82);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(2 + rng.below(100));
      for (double& x : v) x = 1e3 + rng.normal() * 1e-2;
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
      const Summary s = summarize(v);
      REQUIRE(std::abs(s.mean - mean) <= 1e-12 * std::abs(mean));
      REQUIRE(std::abs(s.sd - sd) <= 1e-12 + 1e-9 * sd);
    }
  }

  TEST_CASE("split evaluation ranks the super-policy above SOnly") {
    const BanditDataset data = sample(discrete_spec(0.9), 5000, 83);
    SplitConfig cfg;
    cfg.splits = 20;
    cfg.seed = 9;
    cfg.kinds = {PolicyClass::kSOnly, PolicyClass::kSuper, PolicyClass::kBehavior};
    cfg.estimator.mu_proj = 1e-10;
    cfg.backends = tabular_backends();
    const ExperimentReport r = split_evaluate(data, cfg);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[1].mean >= r.rows[0].mean);
    // Behavior clone scores the mean full-data bridge on the held-out rows.
    EstimatorConfig full_cfg = cfg.estimator;
    full_cfg.seed = cfg.seed;
    const BridgeResult full = fit_bridge(bandit_problem(data), full_cfg, cfg.backends);
    std::vector<double> clone;
    for (int j = 0; j < cfg.splits; ++j) {
      const auto [train, held_out] =
          random_split(data, cfg.train_fraction, cfg.seed + static_cast<std::uint64_t>(j));
      clone.push_back(full.q.evaluate(bandit_problem(held_out).q_inputs).mean());
    }
    CHECK(r.samples[2] == clone);
    CHECK(render(split_evaluate(data, cfg), ReportFormat::kCsv) ==
          render(r, ReportFormat::kCsv));
  }

  TEST_CASE("empty report renders headers only") {
    const ExperimentReport empty;
    CHECK(render(empty, ReportFormat::kCsv) == "kind,setting,mean,sd,n_reps\n");
    CHECK(render(empty, ReportFormat::kMarkdown) == "| setting |\n|---|\n");
  }

  TEST_CASE("table-shaped markdown") {
    const std::string md = render(sample_report(), ReportFormat::kMarkdown);
    std::vector<std::string> lines;
    std::istringstream in(md);
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "| setting | sonly | sz | super |");
    CHECK(std::count(lines[2].begin(), lines[2].end(), '|') == 5);
    CHECK(lines[2].rfind("| eps=0.5 | 0.25 (1.43e-01) |", 0) == 0);
    CHECK(lines[2].find("0.19* (1.11e-01)") != std::string::npos);
  }

  TEST_CASE("CSV round trip") {
    const ExperimentReport r = sample_report();
    const ExperimentReport back = parse_report_csv(render(r, ReportFormat::kCsv));
    REQUIRE(back.rows.size() == r.rows.size());
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
      CHECK(back.rows[k].kind == r.rows[k].kind);
      CHECK(back.rows[k].setting == r.rows[k].setting);
      CHECK(back.rows[k].mean == r.rows[k].mean);
      CHECK(back.rows[k].sd == r.rows[k].sd);
      CHECK(back.rows[k].n_reps == r.rows[k].n_reps);
    }
    CHECK_THROWS_AS(parse_report_csv("kind,setting\nx,y\n"), Error);
  }

  TEST_CASE("paired one-sided t-test") {
    const PairedTest t = paired_t_test({2, 3, 4, 5, 6}, {1, 1, 1, 1, 1});
    CHECK(t.df == 4);
    CHECK(t.mean_difference == doctest::Approx(3.0));
    CHECK(t.t == doctest::Approx(3.0 / (std::sqrt(2.5) / std::sqrt(5.0))));
    CHECK(t.p_value == doctest::Approx(0.0066177997818413475).epsilon(1e-9));
    const PairedTest u = paired_t_test({0.3, 0.5, 0.2, 0.9, 0.4, 0.6},
                                       {0.1, 0.45, 0.25, 0.5, 0.3, 0.2});
    CHECK(u.t == doctest::Approx(2.4119095530943304).epsilon(1e-12));
    CHECK(u.p_value == doctest::Approx(0.030360360339734327).epsilon(1e-9));
  }

  TEST_CASE("failures name the replication seed") {
    ExperimentConfig cfg = discrete_experiment(0.9, 3);
    cfg.n = 10;
    try {
      run_replications(cfg);
      FAIL("expected a failure");
    } catch (const Error& e) {
      INFO(std::string(e.what()));
      CHECK(std::string(e.what()).find("seed 300") != std::string::npos);
    }
  }
}
