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

#include "superpol/selfcheck.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "superpol/bandit.hpp"
#include "superpol/envs.hpp"
#include "superpol/error.hpp"
#include "superpol/io.hpp"
#include "superpol/rng.hpp"
#include "superpol/sequential.hpp"

namespace superpol {
namespace {

std::string csv_text(const BanditDataset& d) {
  std::ostringstream out;
  write_bandit_csv(out, d);
  return out.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

CheckResult toy_closed_forms() {
  double worst = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double eps = k / 100.0;
    const ToyValues v = toy_values(eps);
    worst = std::max({worst, std::abs(v.behavior - (0.6 - 1.2 * eps)),
                      std::abs(v.standard - 0.4),
                      std::abs(v.super - (std::abs(0.7 - eps) + std::abs(eps - 0.3)))});
  }
  return {"toy values match closed forms", worst <= 1e-12, "max error " + sci(worst)};
}

CheckResult dominance() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const FiniteBanditSpec spec = random_finite_spec(seed, 2 + static_cast<int>(seed % 2));
    const double super = oracle_value_exact(optimal_rule(spec, PolicyClass::kSA), spec);
    const double standard = oracle_value_exact(optimal_rule(spec, PolicyClass::kSOnly), spec);
    const double behavior = oracle_value_exact(behavior_rule(), spec);
    worst = std::max(worst, std::max(standard, behavior) - super);
  }
  return {"super-policy dominates on 50 random specs", worst <= 1e-12,
          "largest shortfall " + sci(worst)};
}

CheckResult improvement_conditions() {
  int mismatches = 0;
  for (std::uint64_t seed = 100; seed < 150; ++seed) {
    const FiniteBanditSpec spec = random_finite_spec(seed, 2);
    const double super = oracle_value_exact(optimal_rule(spec, PolicyClass::kSA), spec);
    const double standard = oracle_value_exact(optimal_rule(spec, PolicyClass::kSOnly), spec);
    const double behavior = oracle_value_exact(behavior_rule(), spec);
    const CattReport r = catt_catc(spec);
    if ((super > standard + 1e-12) != r.improves_on_standard) ++mismatches;
    if ((super > behavior + 1e-12) != r.improves_on_behavior) ++mismatches;
  }
  return {"CATT/CATC conditions classify strict gains", mismatches == 0,
          std::to_string(mismatches) + " mismatches on 50 specs"};
}

CheckResult projection_oracles() {
  Rng rng(7);
  const Eigen::Index n = 300;
  Matrix x(n, 2);
  Vector y(n);
  std::map<LevelKey, std::pair<double, int>> groups;
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(rng.below(3));
    x(i, 1) = static_cast<double>(rng.below(2));
    y(i) = rng.normal();
    auto& g = groups[row_key(x, i)];
    g.first += y(i);
    g.second += 1;
  }
  const ProjectionModel ridge = fit_delta_ridge(x, y, 1e-10);
  double gap = 0.0;
  for (const auto& [key, g] : groups) {
    gap = std::max(gap, std::abs(ridge.predict_row(key) - g.first / g.second));
  }
  Matrix xl(n, 3);
  Vector yl(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) xl(i, j) = rng.normal();
    yl(i) = 0.5 - 2.0 * xl(i, 0) + 0.25 * xl(i, 1) + 3.0 * xl(i, 2);
  }
  const double residual = (fit_linear(xl, yl).predict(xl) - yl).cwiseAbs().maxCoeff();
  return {"projection oracles", gap < 1e-6 && residual <= 1e-10,
          "group-mean gap " + sci(gap) + ", OLS residual " + sci(residual)};
}

CheckResult minimax_tabular() {
  const BanditDataset data = sample(random_proxy_spec(3), 600, 11);
  const MomentProblem problem = bandit_problem(data);
  const Vector tab = fit_tabular(problem).q.evaluate(problem.q_inputs);
  EstimatorConfig cfg;
  const Penalties p = cfg.resolve(data.rows());
  const MinimaxSystem system(problem.q_inputs, problem.g_inputs,
                             FeatureKernel::fit(KernelFamily::kDelta, problem.q_inputs),
                             FeatureKernel::fit(KernelFamily::kDelta, problem.g_inputs), p);
  std::vector<double> gaps;
  for (double lm : {1e-2, 1e-4, 1e-6}) {
    const MinimaxSystem::Factor f = system.factor(lm);
    const Vector q = system.expansion(system.coefficients(f, problem.targets))
                         .evaluate(problem.q_inputs);
    gaps.push_back((q - tab).cwiseAbs().maxCoeff());
  }
  const bool ok = gaps[2] <= 1e-3 && gaps[0] > gaps[1] && gaps[1] > gaps[2];
  return {"delta min-max approaches the tabular solve", ok,
          "gaps " + sci(gaps[0]) + " " + sci(gaps[1]) + " " + sci(gaps[2])};
}

CheckResult one_step_reduction() {
  SequentialSpec spec;
  spec.horizon = 1;
  const SequentialDataset seq = sample(spec, 250, 5);
  const BanditDataset bandit = as_bandit(seq);
  EstimatorConfig cfg;
  cfg.seed = 5;
  Backends backends;
  backends.projection = {ProjectionKind::kLinear, KernelFamily::kGaussian};
  int differences = 0;
  for (const auto& [seq_kind, bandit_kind] :
       {std::pair{PolicyClass::kSuperSeq, PolicyClass::kSA},
        std::pair{PolicyClass::kCommon, PolicyClass::kSOnly}}) {
    const SequentialFit sf = learn_seq(seq, seq_kind, cfg, backends);
    const BanditFit bf = learn(bandit, bandit_kind, cfg, backends);
    for (std::size_t i = 0; i < bandit.rows(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const LevelKey s = row_key(bandit.s, r);
      const LevelKey z = row_key(bandit.z, r);
      const int rec = bandit.a[i];
      if (sf.act(1, s, {}, std::span<const int>(&rec, 1)) != bf.act(s, z, rec)) {
        ++differences;
      }
    }
    if (estimate_value_seq(sf, seq) != estimate_value(bf.rule(), bf.bridge.q, bandit)) {
      ++differences;
    }
  }
  return {"one-step sequential learner equals the bandit learner", differences == 0,
          std::to_string(differences) + " differences"};
}

CheckResult determinism() {
  const BanditDataset a = sample(discrete_spec(0.7), 500, 3);
  const BanditDataset b = sample(discrete_spec(0.7), 500, 3);
  const BanditDataset c = sample(discrete_spec(0.7), 500, 4);
  const std::string ta = csv_text(a);
  const bool same = ta == csv_text(b);
  const bool differs = ta != csv_text(c);
  std::istringstream in(ta);
  const BanditDataset back = read_bandit_csv(in);
  const bool round_trip = csv_text(back) == ta && back.r == a.r && back.s == a.s;
  return {"seeded sampling and CSV round trip", same && differs && round_trip,
          std::string(same ? "" : "same seed differs; ") +
              (differs ? "" : "new seed repeats; ") + (round_trip ? "" : "round trip lossy")};
}

CheckResult split_partition() {
  bool ok = true;
  for (std::size_t n = 2; n <= 200; ++n) {
    const RowSplit s = split_rows(n, 0.6, n);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.eval.begin(), s.eval.end());
    ok = ok && all.size() == n && s.train.size() + s.eval.size() == n &&
         *all.rbegin() == n - 1;
    const RowSplit again = split_rows(n, 0.6, n);
    ok = ok && again.train == s.train;
  }
  return {"random split is a deterministic partition", ok, ""};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(const std::function<void(const std::string&)>& line) {
  using Check = CheckResult (*)();
  const std::pair<const char*, Check> checks[] = {
      {"toy values", toy_closed_forms},
      {"dominance", dominance},
      {"improvement conditions", improvement_conditions},
      {"projection oracles", projection_oracles},
      {"min-max vs tabular", minimax_tabular},
      {"one-step reduction", one_step_reduction},
      {"determinism", determinism},
      {"split partition", split_partition}};
  std::vector<CheckResult> out;
  for (const auto& [name, check] : checks) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r.name = name;
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (line) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2fs", secs);
      line(std::string(r.passed ? "PASS " : "FAIL ") + r.name +
           (r.detail.empty() ? "" : " (" + r.detail + ")") + " [" + buf + "]");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace superpol
