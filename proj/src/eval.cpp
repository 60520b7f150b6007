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

#include "superpol/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "superpol/error.hpp"
#include "superpol/io.hpp"
#include "superpol/rng.hpp"
#include "superpol/sequential.hpp"

namespace superpol {
namespace {

bool is_sequential_class(PolicyClass kind) {
  return kind == PolicyClass::kCommon || kind == PolicyClass::kSuperSeq;
}

// Runs task(i) for i in [0, count) on up to `jobs` threads. Failures are
// reported for the smallest failing index.
template <class Task>
void parallel_for(std::size_t count, int jobs, const std::vector<std::uint64_t>& seeds,
                  const std::string& unit, Task task) {
  std::vector<std::optional<std::pair<ErrorCode, std::string>>> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (const Error& e) {
        errors[i].emplace(e.code(), e.what());
      } catch (const std::exception& e) {
        errors[i].emplace(ErrorCode::kInternal, e.what());
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) {
      fail(errors[i]->first, unit + " with seed " + std::to_string(seeds[i]) +
                                 " failed: " + errors[i]->second);
    }
  }
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string scientific(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string_view to_string(OracleMode mode) {
  return mode == OracleMode::kExact ? "exact" : "mc";
}

OracleMode parse_oracle_mode(std::string_view name) {
  if (name == "exact") return OracleMode::kExact;
  if (name == "mc") return OracleMode::kMonteCarlo;
  fail(ErrorCode::kInvalidArgument, "unknown oracle mode '" + std::string(name) + "'");
}

Oracle::Oracle(EnvSpec spec, OracleConfig cfg, RegretReference reference)
    : spec_(std::move(spec)), cfg_(cfg) {
  const bool exact = cfg_.mode == OracleMode::kExact;
  if (const auto* f = std::get_if<FiniteBanditSpec>(&spec_)) {
    const BanditRule best = optimal_rule(*f, reference.cls);
    if (exact) {
      reference_value_ = oracle_value_exact(best, *f);
    } else {
      const McValue v = oracle_value_mc(best, *f, cfg_.episodes, cfg_.seed);
      reference_value_ = v.value;
      reference_se_ = v.se;
    }
    return;
  }
  require(!exact, "exact oracle values need a finite spec; use the mc oracle");
  require(!reference.cls, "class references need a finite spec");
  McValue v;
  if (const auto* c = std::get_if<ContinuousBanditSpec>(&spec_)) {
    const BanditRule best =
        latent_reference(*c, cfg_.reference_samples, mix_seed(cfg_.seed, 1));
    v = oracle_value_mc(best, *c, cfg_.episodes, cfg_.seed);
  } else {
    const auto& s = std::get<SequentialSpec>(spec_);
    const SeqRule best = latent_reference(s, cfg_.reference_samples, mix_seed(cfg_.seed, 1));
    v = oracle_value_mc(best, s, cfg_.episodes, cfg_.seed);
  }
  reference_value_ = v.value;
  reference_se_ = v.se;
}

double Oracle::value(const BanditRule& rule) const {
  if (const auto* f = std::get_if<FiniteBanditSpec>(&spec_)) {
    if (cfg_.mode == OracleMode::kExact) return oracle_value_exact(rule, *f);
    return oracle_value_mc(rule, *f, cfg_.episodes, cfg_.seed).value;
  }
  if (const auto* c = std::get_if<ContinuousBanditSpec>(&spec_)) {
    return oracle_value_mc(rule, *c, cfg_.episodes, cfg_.seed).value;
  }
  fail(ErrorCode::kInvalidArgument, "a bandit rule cannot be scored on a sequential spec");
}

double Oracle::value(const SeqRule& rule) const {
  const auto* s = std::get_if<SequentialSpec>(&spec_);
  require(s != nullptr, "a sequential rule needs a sequential spec");
  return oracle_value_mc(rule, *s, cfg_.episodes, cfg_.seed).value;
}

double regret(const BanditRule& rule, const EnvSpec& spec, const OracleConfig& cfg,
              RegretReference reference) {
  return Oracle(spec, cfg, reference).regret(rule);
}

void ExperimentConfig::check() const {
  require(replications >= 1, "replications must be >= 1");
  require(n >= 10, "sample size must be >= 10");
  require(!kinds.empty(), "no policy classes requested");
  require(jobs >= 1, "jobs must be >= 1");
  estimator.check();
  const bool sequential = std::holds_alternative<SequentialSpec>(spec);
  for (PolicyClass k : kinds) {
    if (sequential) {
      require(is_sequential_class(k), "policy class " + std::string(to_string(k)) +
                                          " does not apply to sequential data");
    } else {
      require(is_bandit_class(k), "policy class " + std::string(to_string(k)) +
                                      " does not apply to bandit data");
    }
  }
}

void ExperimentReport::append(const ExperimentReport& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  samples.insert(samples.end(), other.samples.begin(), other.samples.end());
  seeds.insert(seeds.end(), other.seeds.begin(), other.seeds.end());
}

Summary summarize(const std::vector<double>& values) {
  Summary out;
  if (values.empty()) return out;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    ++k;
    const double d = v - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (v - mean);
  }
  out.mean = mean;
  out.sd = k > 1 ? std::sqrt(std::max(0.0, m2 / static_cast<double>(k - 1))) : 0.0;
  return out;
}

ExperimentReport run_replications(const ExperimentConfig& cfg) {
  cfg.check();
  const Oracle oracle(cfg.spec, cfg.oracle, cfg.reference);
  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<std::uint64_t> seeds(reps);
  for (std::size_t i = 0; i < reps; ++i) seeds[i] = cfg.seed + i;
  std::vector<std::vector<double>> regrets(reps);

  parallel_for(reps, cfg.jobs, seeds, "replication", [&](std::size_t i) {
    EstimatorConfig est = cfg.estimator;
    est.seed = seeds[i];
    std::vector<double>& out = regrets[i];
    if (const auto* seq = std::get_if<SequentialSpec>(&cfg.spec)) {
      const SequentialDataset data = sample(*seq, cfg.n, seeds[i]);
      SequentialLearner learner(data, est, cfg.backends);
      for (PolicyClass kind : cfg.kinds) {
        const SequentialFit fit = learner.learn(kind);
        out.push_back(oracle.regret(fit.rule()));
      }
      return;
    }
    const BanditDataset data = std::visit(
        [&](const auto& spec) -> BanditDataset {
          if constexpr (std::is_same_v<std::decay_t<decltype(spec)>, SequentialSpec>) {
            fail(ErrorCode::kInternal, "unreachable");
          } else {
            return sample(spec, cfg.n, seeds[i]);
          }
        },
        cfg.spec);
    const BridgeResult bridge = fit_bridge(bandit_problem(data), est, cfg.backends);
    for (PolicyClass kind : cfg.kinds) {
      const BanditFit fit = learn_with_bridge(data, kind, bridge, est, cfg.backends);
      out.push_back(oracle.regret(fit.rule()));
    }
  });

  ExperimentReport report;
  report.metric = "regret";
  report.seeds = seeds;
  report.reference_value = oracle.reference_value();
  for (std::size_t k = 0; k < cfg.kinds.size(); ++k) {
    std::vector<double> column(reps);
    for (std::size_t i = 0; i < reps; ++i) column[i] = regrets[i][k];
    const Summary s = summarize(column);
    report.rows.push_back(ReportRow{std::string(to_string(cfg.kinds[k])), cfg.setting,
                                    s.mean, s.sd, reps});
    report.samples.push_back(std::move(column));
  }
  return report;
}

ExperimentReport split_evaluate(const BanditDataset& data, const SplitConfig& cfg) {
  require(cfg.splits >= 1, "at least one split is required");
  require(!cfg.kinds.empty(), "no policy classes requested");
  for (PolicyClass k : cfg.kinds) {
    require(is_bandit_class(k), "policy class " + std::string(to_string(k)) +
                                    " does not apply to bandit data");
  }
  EstimatorConfig full_cfg = cfg.estimator;
  full_cfg.seed = cfg.seed;
  const BridgeResult full = fit_bridge(bandit_problem(data), full_cfg, cfg.backends);

  const auto m = static_cast<std::size_t>(cfg.splits);
  std::vector<std::uint64_t> seeds(m);
  for (std::size_t j = 0; j < m; ++j) seeds[j] = cfg.seed + j;
  std::vector<std::vector<double>> values(m);
  parallel_for(m, cfg.jobs, seeds, "split", [&](std::size_t j) {
    const auto [train, held_out] = random_split(data, cfg.train_fraction, seeds[j]);
    EstimatorConfig est = cfg.estimator;
    est.seed = seeds[j];
    const BridgeResult bridge = fit_bridge(bandit_problem(train), est, cfg.backends);
    for (PolicyClass kind : cfg.kinds) {
      const BanditFit fit = learn_with_bridge(train, kind, bridge, est, cfg.backends);
      values[j].push_back(estimate_value(fit.rule(), full.q, held_out));
    }
  });

  ExperimentReport report;
  report.metric = "value";
  report.seeds = seeds;
  for (std::size_t k = 0; k < cfg.kinds.size(); ++k) {
    std::vector<double> column(m);
    for (std::size_t j = 0; j < m; ++j) column[j] = values[j][k];
    const Summary s = summarize(column);
    report.rows.push_back(ReportRow{std::string(to_string(cfg.kinds[k])), "split", s.mean,
                                    s.sd / std::sqrt(static_cast<double>(m)), m});
    report.samples.push_back(std::move(column));
  }
  return report;
}

std::string render(const ExperimentReport& report, ReportFormat format,
                   const RenderOptions& options) {
  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << "kind,setting,mean,sd,n_reps\n";
    for (const ReportRow& r : report.rows) {
      require(r.kind.find(',') == std::string::npos &&
                  r.setting.find(',') == std::string::npos,
              "report labels must not contain commas");
      out << r.kind << ',' << r.setting << ',' << format_double(r.mean) << ','
          << format_double(r.sd) << ',' << r.n_reps << '\n';
    }
    return out.str();
  }

  std::vector<std::string> settings;
  std::vector<std::string> kinds;
  std::map<std::pair<std::string, std::string>, const ReportRow*> cells;
  for (const ReportRow& r : report.rows) {
    if (std::find(settings.begin(), settings.end(), r.setting) == settings.end()) {
      settings.push_back(r.setting);
    }
    if (std::find(kinds.begin(), kinds.end(), r.kind) == kinds.end()) {
      kinds.push_back(r.kind);
    }
    cells[{r.setting, r.kind}] = &r;
  }
  out << "| setting |";
  for (const std::string& k : kinds) out << ' ' << k << " |";
  out << "\n|---|";
  for (std::size_t k = 0; k < kinds.size(); ++k) out << "---:|";
  out << '\n';
  const bool lower_is_better = report.metric == "regret";
  for (const std::string& s : settings) {
    std::optional<double> best;
    for (const std::string& k : kinds) {
      auto it = cells.find({s, k});
      if (it == cells.end()) continue;
      const double v = std::stod(fixed(it->second->mean, options.decimals));
      if (!best || (lower_is_better ? v < *best : v > *best)) best = v;
    }
    out << "| " << s << " |";
    for (const std::string& k : kinds) {
      auto it = cells.find({s, k});
      if (it == cells.end()) {
        out << " |";
        continue;
      }
      const std::string shown = fixed(it->second->mean, options.decimals);
      out << ' ' << shown;
      if (options.mark_best && best && std::stod(shown) == *best) out << '*';
      if (options.show_sd) out << " (" << scientific(it->second->sd) << ')';
      out << " |";
    }
    out << '\n';
  }
  return out.str();
}

ExperimentReport parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "kind,setting,mean,sd,n_reps") {
    fail(ErrorCode::kData, "report CSV: unexpected header");
  }
  ExperimentReport report;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    if (f.size() != 5) {
      fail(ErrorCode::kData, "report CSV line " + std::to_string(line_no) +
                                 ": expected 5 fields");
    }
    ReportRow r;
    r.kind = f[0];
    r.setting = f[1];
    r.mean = parse_double(f[2]);
    r.sd = parse_double(f[3]);
    r.n_reps = static_cast<std::size_t>(parse_double(f[4]));
    report.rows.push_back(r);
  }
  return report;
}

PairedTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "paired test: samples differ in length");
  require(a.size() >= 2, "paired test needs at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const Summary s = summarize(d);
  PairedTest out;
  out.mean_difference = s.mean;
  out.df = static_cast<int>(d.size()) - 1;
  if (s.sd == 0.0) {
    out.t = s.mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : (s.mean < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0);
    out.p_value = s.mean > 0.0 ? 0.0 : 1.0;
    return out;
  }
  out.t = s.mean / (s.sd / std::sqrt(static_cast<double>(d.size())));
  const boost::math::students_t dist(static_cast<double>(out.df));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.t));
  return out;
}

}  // namespace superpol
