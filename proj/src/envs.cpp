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

#include "superpol/envs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>

#include "superpol/bandit.hpp"
#include "superpol/error.hpp"
#include "superpol/moments.hpp"
#include "superpol/rng.hpp"

namespace superpol {
namespace {

void check_probabilities(const std::vector<double>& p, std::size_t size,
                         const std::string& what) {
  require(p.size() == size, what + ": wrong number of probabilities");
  double sum = 0.0;
  for (double v : p) {
    require(v >= 0.0 && std::isfinite(v), what + ": negative probability");
    sum += v;
  }
  require(std::abs(sum - 1.0) < 1e-9, what + ": probabilities do not sum to 1");
}

void check_unit(double v, const std::string& what) {
  require(v >= 0.0 && v <= 1.0, what + " must lie in [0, 1]");
}

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> normalized(std::vector<double> w) {
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  return w;
}

std::vector<double> random_simplex(Rng& rng, std::size_t k) {
  std::vector<double> w(k);
  for (double& v : w) v = rng.uniform(0.05, 1.0);
  return normalized(std::move(w));
}

LevelKey concat(std::initializer_list<std::span<const double>> parts) {
  LevelKey out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

McValue summarize(double sum, double sum_sq, std::size_t m) {
  const double mean = sum / static_cast<double>(m);
  const double var =
      m > 1 ? std::max(0.0, (sum_sq - static_cast<double>(m) * mean * mean) /
                                static_cast<double>(m - 1))
            : 0.0;
  return McValue{mean, std::sqrt(var / static_cast<double>(m))};
}

int checked_action(int a, int num_actions) {
  if (a < 0 || a >= num_actions) {
    fail(ErrorCode::kInternal, "policy returned an out-of-range action");
  }
  return a;
}

// Independent streams for one finite-bandit draw.
struct FiniteStreams {
  Rng cell, action, z, w, reward;
  explicit FiniteStreams(std::uint64_t seed)
      : cell(mix_seed(seed, 1)), action(mix_seed(seed, 2)), z(mix_seed(seed, 3)),
        w(mix_seed(seed, 4)), reward(mix_seed(seed, 5)) {}
};

struct ContinuousStreams {
  Rng s, u, action, w, z, reward;
  explicit ContinuousStreams(std::uint64_t seed)
      : s(mix_seed(seed, 11)), u(mix_seed(seed, 12)), action(mix_seed(seed, 13)),
        w(mix_seed(seed, 14)), z(mix_seed(seed, 15)), reward(mix_seed(seed, 16)) {}
};

struct SequentialStreams {
  Rng u1, o0, o, w, flip, reward, transition, choice;
  explicit SequentialStreams(std::uint64_t seed)
      : u1(mix_seed(seed, 21)), o0(mix_seed(seed, 22)), o(mix_seed(seed, 23)),
        w(mix_seed(seed, 24)), flip(mix_seed(seed, 25)), reward(mix_seed(seed, 26)),
        transition(mix_seed(seed, 27)), choice(mix_seed(seed, 28)) {}
};

struct Episode {
  double o0 = 0.0;
  std::vector<double> u, o, w, reward, mean_reward;
  std::vector<int> behavior, action;
};

using Decide = std::function<int(const SeqContext&)>;

// Draws one episode. Every random number is consumed whatever the decisions
// are, so two rules see the same noise.
void simulate(const SequentialSpec& spec, SequentialStreams& rng,
              const Decide& decide, Episode& ep) {
  const auto horizon = static_cast<std::size_t>(spec.horizon);
  ep.u.assign(horizon, 0.0);
  ep.o.assign(horizon, 0.0);
  ep.w.assign(horizon, 0.0);
  ep.reward.assign(horizon, 0.0);
  ep.mean_reward.assign(horizon, 0.0);
  ep.behavior.assign(horizon, 0);
  ep.action.assign(horizon, 0);
  double u = rng.u1.bernoulli(0.5) ? 1.0 : -1.0;
  ep.o0 = u + 0.3 * rng.o0.normal();
  for (std::size_t t = 0; t < horizon; ++t) {
    ep.u[t] = u;
    ep.o[t] = 0.5 * u + 0.3 * rng.o.normal();
    ep.w[t] = u + 0.3 * rng.w.normal();
    const int base = u > 0.0 ? 1 : 0;
    ep.behavior[t] = rng.flip.bernoulli(spec.delta) ? 1 - base : base;
    const SeqContext ctx{static_cast<int>(t + 1),
                         std::span<const double>(ep.o.data(), t + 1),
                         std::span<const int>(ep.action.data(), t),
                         std::span<const int>(ep.behavior.data(), t + 1),
                         std::span<const double>(ep.u.data(), t + 1)};
    const int a = checked_action(decide(ctx), 2);
    ep.action[t] = a;
    ep.mean_reward[t] = spec.reward_scale * expit(u * (a - 0.5));
    ep.reward[t] = ep.mean_reward[t] + spec.reward_scale * rng.reward.uniform(-0.1, 0.1);
    const double noise = rng.transition.normal();
    u = std::clamp(0.5 * u + (a - 0.5), -1.0, 1.0) + spec.u_noise * noise;
  }
}

}  // namespace

void FiniteBanditSpec::check() const {
  require(num_actions >= 2, "finite spec needs at least 2 actions");
  require(!cells.empty(), "finite spec has no cells");
  require(noise_sd >= 0.0, "noise sd must be >= 0");
  double total = 0.0;
  for (const FiniteCell& c : cells) {
    require(c.s_level >= 0 && c.s_level < static_cast<int>(s_values.size()),
            "finite spec: state level out of range");
    require(c.u_level >= 0 && c.u_level < static_cast<int>(u_values.size()),
            "finite spec: latent level out of range");
    require(c.prob >= 0.0, "finite spec: negative cell probability");
    total += c.prob;
    check_probabilities(c.behavior, static_cast<std::size_t>(num_actions), "behavior");
    check_probabilities(c.z_probs, z_values.size(), "action proxy");
    check_probabilities(c.w_probs, w_values.size(), "reward proxy");
    require(c.mean_reward.size() == static_cast<std::size_t>(num_actions),
            "finite spec: mean reward size");
  }
  require(std::abs(total - 1.0) < 1e-9, "finite spec: cell probabilities do not sum to 1");
}

void ContinuousBanditSpec::check() const {
  check_unit(epsilon, "epsilon");
  require(noise_sd >= 0.0, "noise sd must be >= 0");
}

void SequentialSpec::check() const {
  require(horizon >= 1, "horizon must be >= 1");
  check_unit(delta, "delta");
  require(u_noise >= 0.0, "latent noise must be >= 0");
}

std::string spec_kind(const EnvSpec& spec) {
  if (const auto* f = std::get_if<FiniteBanditSpec>(&spec)) return f->name;
  if (std::holds_alternative<ContinuousBanditSpec>(spec)) return "continuous";
  return "sequential";
}

FiniteBanditSpec toy_spec(double epsilon, bool proxies_reveal_u) {
  check_unit(epsilon, "epsilon");
  FiniteBanditSpec spec;
  spec.name = "toy";
  spec.epsilon = epsilon;
  spec.s_values = {{0.0}, {1.0}};
  spec.u_values = {{0.0}, {1.0}};
  if (proxies_reveal_u) {
    spec.z_values = {{0.0}, {1.0}};
    spec.w_values = {{0.0}, {1.0}};
  } else {
    spec.z_values = {{0.0}};
    spec.w_values = {{0.0}};
  }
  for (int s = 0; s < 2; ++s) {
    for (int u = 0; u < 2; ++u) {
      FiniteCell c;
      c.s_level = s;
      c.u_level = u;
      c.prob = 0.25;
      c.behavior = u == 1 ? std::vector<double>{epsilon, 1.0 - epsilon}
                          : std::vector<double>{1.0 - epsilon, epsilon};
      if (proxies_reveal_u) {
        c.z_probs = u == 1 ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
        c.w_probs = c.z_probs;
      } else {
        c.z_probs = {1.0};
        c.w_probs = {1.0};
      }
      for (int a = 0; a < 2; ++a) {
        c.mean_reward.push_back(8.0 * (a - 0.5) * (s - 0.2) * (u - 0.3));
      }
      spec.cells.push_back(std::move(c));
    }
  }
  return spec;
}

FiniteBanditSpec discrete_spec(double epsilon) {
  check_unit(epsilon, "epsilon");
  FiniteBanditSpec spec;
  spec.name = "discrete";
  spec.epsilon = epsilon;
  spec.s_values = {{0.0}, {1.0}};
  spec.u_values = {{0.0}, {1.0}};
  spec.z_values = {{0.0}, {1.0}};
  spec.w_values = {{0.0}, {1.0}};
  spec.noise_sd = 0.5;
  for (int s = 0; s < 2; ++s) {
    for (int u = 0; u < 2; ++u) {
      FiniteCell c;
      c.s_level = s;
      c.u_level = u;
      c.prob = 0.25;
      c.behavior = u == 0 ? std::vector<double>{1.0 - epsilon, epsilon}
                          : std::vector<double>{epsilon, 1.0 - epsilon};
      c.z_probs = u == 0 ? std::vector<double>{0.6, 0.4} : std::vector<double>{0.4, 0.6};
      c.w_probs = c.z_probs;
      for (int a = 0; a < 2; ++a) c.mean_reward.push_back((u - 0.5) * (a - 0.5));
      spec.cells.push_back(std::move(c));
    }
  }
  return spec;
}

FiniteBanditSpec random_finite_spec(std::uint64_t seed, int num_actions) {
  require(num_actions >= 2, "random spec needs at least 2 actions");
  Rng rng(mix_seed(seed, 0x5eed));
  FiniteBanditSpec spec;
  spec.name = "random";
  spec.num_actions = num_actions;
  const std::size_t ns = 1 + rng.below(3);
  const std::size_t nu = 2 + rng.below(2);
  const std::size_t nz = 1 + rng.below(3);
  const std::size_t nw = 1 + rng.below(3);
  for (std::size_t k = 0; k < ns; ++k) spec.s_values.push_back({static_cast<double>(k)});
  for (std::size_t k = 0; k < nu; ++k) spec.u_values.push_back({static_cast<double>(k)});
  for (std::size_t k = 0; k < nz; ++k) spec.z_values.push_back({static_cast<double>(k)});
  for (std::size_t k = 0; k < nw; ++k) spec.w_values.push_back({static_cast<double>(k)});
  const std::vector<double> joint = random_simplex(rng, ns * nu);
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t u = 0; u < nu; ++u) {
      FiniteCell c;
      c.s_level = static_cast<int>(s);
      c.u_level = static_cast<int>(u);
      c.prob = joint[s * nu + u];
      if (rng.bernoulli(0.2)) {
        c.behavior.assign(static_cast<std::size_t>(num_actions), 0.0);
        c.behavior[rng.below(static_cast<std::size_t>(num_actions))] = 1.0;
      } else {
        c.behavior = random_simplex(rng, static_cast<std::size_t>(num_actions));
      }
      c.z_probs = random_simplex(rng, nz);
      c.w_probs = random_simplex(rng, nw);
      for (int a = 0; a < num_actions; ++a) c.mean_reward.push_back(rng.uniform(-1.0, 1.0));
      spec.cells.push_back(std::move(c));
    }
  }
  return spec;
}

FiniteBanditSpec random_proxy_spec(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x9a0c));
  FiniteBanditSpec spec;
  spec.name = "random_proxy";
  spec.s_values = {{0.0}, {1.0}};
  spec.u_values = {{0.0}, {1.0}};
  spec.z_values = {{0.0}, {1.0}};
  spec.w_values = {{0.0}, {1.0}};
  spec.noise_sd = 0.5;
  std::vector<double> joint(4);
  for (double& v : joint) v = rng.uniform(0.2, 0.3);
  joint = normalized(std::move(joint));
  for (int s = 0; s < 2; ++s) {
    for (int u = 0; u < 2; ++u) {
      FiniteCell c;
      c.s_level = s;
      c.u_level = u;
      c.prob = joint[static_cast<std::size_t>(2 * s + u)];
      const double p1 = rng.uniform(0.35, 0.65);
      c.behavior = {1.0 - p1, p1};
      const double z1 = u == 1 ? rng.uniform(0.85, 0.95) : rng.uniform(0.05, 0.15);
      const double w1 = u == 1 ? rng.uniform(0.85, 0.95) : rng.uniform(0.05, 0.15);
      c.z_probs = {1.0 - z1, z1};
      c.w_probs = {1.0 - w1, w1};
      for (int a = 0; a < 2; ++a) c.mean_reward.push_back(rng.uniform(-1.0, 1.0));
      spec.cells.push_back(std::move(c));
    }
  }
  return spec;
}

ToyValues toy_values(double epsilon) {
  const FiniteBanditSpec spec = toy_spec(epsilon);
  const ToyValues v{oracle_value_exact(behavior_rule(), spec),
                    oracle_value_exact(optimal_rule(spec, PolicyClass::kSOnly), spec),
                    oracle_value_exact(optimal_rule(spec, PolicyClass::kSA), spec)};
  const double closed[3] = {0.6 - 1.2 * epsilon, 0.4,
                            std::abs(0.7 - epsilon) + std::abs(epsilon - 0.3)};
  const double got[3] = {v.behavior, v.standard, v.super};
  for (int k = 0; k < 3; ++k) {
    if (std::abs(got[k] - closed[k]) > 1e-12) {
      fail(ErrorCode::kInternal, "toy enumeration disagrees with the closed form at eps=" +
                                     std::to_string(epsilon));
    }
  }
  return v;
}

BanditSample sample_latent(const FiniteBanditSpec& spec, std::size_t n,
                           std::uint64_t seed) {
  spec.check();
  require(n >= 1, "sample size must be >= 1");
  FiniteStreams rng(seed);
  std::vector<double> cell_probs;
  for (const FiniteCell& c : spec.cells) cell_probs.push_back(c.prob);
  const auto rows = static_cast<Eigen::Index>(n);
  BanditSample out;
  BanditDataset& d = out.data;
  d.num_actions = spec.num_actions;
  d.s.resize(rows, static_cast<Eigen::Index>(spec.s_values[0].size()));
  d.z.resize(rows, static_cast<Eigen::Index>(spec.z_values[0].size()));
  d.w.resize(rows, static_cast<Eigen::Index>(spec.w_values[0].size()));
  d.a.resize(n);
  d.r.resize(rows);
  out.u.resize(rows, static_cast<Eigen::Index>(spec.u_values[0].size()));
  const auto put = [](Matrix& m, Eigen::Index i, const std::vector<double>& v) {
    for (std::size_t k = 0; k < v.size(); ++k) m(i, static_cast<Eigen::Index>(k)) = v[k];
  };
  for (Eigen::Index i = 0; i < rows; ++i) {
    const FiniteCell& c = spec.cells[rng.cell.categorical(cell_probs)];
    const int a = static_cast<int>(rng.action.categorical(c.behavior));
    const std::size_t z = rng.z.categorical(c.z_probs);
    const std::size_t w = rng.w.categorical(c.w_probs);
    const double noise = rng.reward.normal();
    put(d.s, i, spec.s_values[static_cast<std::size_t>(c.s_level)]);
    put(d.z, i, spec.z_values[z]);
    put(d.w, i, spec.w_values[w]);
    put(out.u, i, spec.u_values[static_cast<std::size_t>(c.u_level)]);
    d.a[static_cast<std::size_t>(i)] = a;
    d.r(i) = c.mean_reward[static_cast<std::size_t>(a)] + spec.noise_sd * noise;
  }
  return out;
}

BanditSample sample_latent(const ContinuousBanditSpec& spec, std::size_t n,
                           std::uint64_t seed) {
  spec.check();
  require(n >= 1, "sample size must be >= 1");
  ContinuousStreams rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  BanditSample out;
  BanditDataset& d = out.data;
  d.num_actions = 2;
  d.s.resize(rows, 1);
  d.z.resize(rows, 1);
  d.w.resize(rows, 1);
  d.a.resize(n);
  d.r.resize(rows);
  out.u.resize(rows, 1);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double s = rng.s.normal();
    const double u = rng.u.normal();
    const int a = rng.action.bernoulli(u > 0.0 ? spec.epsilon : 1.0 - spec.epsilon) ? 1 : 0;
    d.s(i, 0) = s;
    d.w(i, 0) = s + 3.0 * u + rng.w.normal();
    d.z(i, 0) = 3.0 * s + u + rng.z.normal();
    d.a[static_cast<std::size_t>(i)] = a;
    d.r(i) = spec.reward_scale * (u * (a - 0.5) + spec.noise_sd * rng.reward.normal());
    out.u(i, 0) = u;
  }
  return out;
}

SequentialSample sample_latent(const SequentialSpec& spec, std::size_t n,
                               std::uint64_t seed) {
  spec.check();
  require(n >= 1, "sample size must be >= 1");
  SequentialStreams rng(seed);
  const auto rows = static_cast<Eigen::Index>(n);
  SequentialSample out;
  SequentialDataset& d = out.data;
  d.num_actions = 2;
  d.reward_bound = 1.1 * std::abs(spec.reward_scale);
  d.o0.resize(rows, 1);
  d.steps.resize(static_cast<std::size_t>(spec.horizon));
  for (StepBlock& step : d.steps) {
    step.o.resize(rows, 1);
    step.w.resize(rows, 1);
    step.r.resize(rows);
    step.a.resize(n);
  }
  out.u.resize(rows, spec.horizon);
  Episode ep;
  const Decide follow = [](const SeqContext& c) {
    return c.behavior_actions[static_cast<std::size_t>(c.t - 1)];
  };
  for (Eigen::Index i = 0; i < rows; ++i) {
    simulate(spec, rng, follow, ep);
    d.o0(i, 0) = ep.o0;
    for (int t = 0; t < spec.horizon; ++t) {
      StepBlock& step = d.steps[static_cast<std::size_t>(t)];
      const auto k = static_cast<std::size_t>(t);
      step.o(i, 0) = ep.o[k];
      step.w(i, 0) = ep.w[k];
      step.r(i) = ep.reward[k];
      step.a[static_cast<std::size_t>(i)] = ep.action[k];
      out.u(i, t) = ep.u[k];
    }
  }
  return out;
}

BanditDataset sample(const FiniteBanditSpec& spec, std::size_t n, std::uint64_t seed) {
  return sample_latent(spec, n, seed).data;
}

BanditDataset sample(const ContinuousBanditSpec& spec, std::size_t n,
                     std::uint64_t seed) {
  return sample_latent(spec, n, seed).data;
}

SequentialDataset sample(const SequentialSpec& spec, std::size_t n,
                         std::uint64_t seed) {
  return sample_latent(spec, n, seed).data;
}

double oracle_value_exact(const BanditRule& rule, const FiniteBanditSpec& spec) {
  spec.check();
  double value = 0.0;
  for (const FiniteCell& c : spec.cells) {
    if (c.prob == 0.0) continue;
    const auto& s = spec.s_values[static_cast<std::size_t>(c.s_level)];
    const auto& u = spec.u_values[static_cast<std::size_t>(c.u_level)];
    for (int rec = 0; rec < spec.num_actions; ++rec) {
      const double pb = c.behavior[static_cast<std::size_t>(rec)];
      if (pb == 0.0) continue;
      for (std::size_t z = 0; z < spec.z_values.size(); ++z) {
        const double pz = c.z_probs[z];
        if (pz == 0.0) continue;
        const int a = checked_action(rule(BanditContext{s, spec.z_values[z], rec, u}),
                                     spec.num_actions);
        value += c.prob * pb * pz * c.mean_reward[static_cast<std::size_t>(a)];
      }
    }
  }
  return value;
}

McValue oracle_value_mc(const BanditRule& rule, const FiniteBanditSpec& spec,
                        std::size_t episodes, std::uint64_t seed) {
  spec.check();
  require(episodes >= 100, "Monte-Carlo oracle needs at least 100 episodes");
  FiniteStreams rng(seed);
  std::vector<double> cell_probs;
  for (const FiniteCell& c : spec.cells) cell_probs.push_back(c.prob);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < episodes; ++i) {
    const FiniteCell& c = spec.cells[rng.cell.categorical(cell_probs)];
    const int rec = static_cast<int>(rng.action.categorical(c.behavior));
    const std::size_t z = rng.z.categorical(c.z_probs);
    const int a = checked_action(
        rule(BanditContext{spec.s_values[static_cast<std::size_t>(c.s_level)],
                           spec.z_values[z], rec,
                           spec.u_values[static_cast<std::size_t>(c.u_level)]}),
        spec.num_actions);
    const double r = c.mean_reward[static_cast<std::size_t>(a)];
    sum += r;
    sum_sq += r * r;
  }
  return summarize(sum, sum_sq, episodes);
}

McValue oracle_value_mc(const BanditRule& rule, const ContinuousBanditSpec& spec,
                        std::size_t episodes, std::uint64_t seed) {
  spec.check();
  require(episodes >= 100, "Monte-Carlo oracle needs at least 100 episodes");
  ContinuousStreams rng(seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < episodes; ++i) {
    const double s = rng.s.normal();
    const double u = rng.u.normal();
    const int rec = rng.action.bernoulli(u > 0.0 ? spec.epsilon : 1.0 - spec.epsilon) ? 1 : 0;
    const double z = 3.0 * s + u + rng.z.normal();
    const int a = checked_action(rule(BanditContext{std::span<const double>(&s, 1),
                                                    std::span<const double>(&z, 1),
                                                    rec, std::span<const double>(&u, 1)}),
                                 2);
    const double r = spec.reward_scale * u * (a - 0.5);
    sum += r;
    sum_sq += r * r;
  }
  return summarize(sum, sum_sq, episodes);
}

McValue oracle_value_mc(const SeqRule& rule, const SequentialSpec& spec,
                        std::size_t episodes, std::uint64_t seed) {
  spec.check();
  require(episodes >= 100, "Monte-Carlo oracle needs at least 100 episodes");
  SequentialStreams rng(seed);
  Episode ep;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < episodes; ++i) {
    simulate(spec, rng, rule, ep);
    double total = 0.0;
    for (double r : ep.mean_reward) total += r;
    sum += total;
    sum_sq += total * total;
  }
  return summarize(sum, sum_sq, episodes);
}

double sequential_exact_value(const SeqRule& rule, const SequentialSpec& spec) {
  spec.check();
  require(spec.u_noise == 0.0, "exact sequential value needs u_noise = 0");
  const auto horizon = static_cast<std::size_t>(spec.horizon);
  const std::vector<double> obs(horizon, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> us(horizon);
  std::vector<int> own(horizon);
  std::vector<int> behavior(horizon);
  std::function<double(std::size_t, double)> visit = [&](std::size_t t, double u) {
    if (t == horizon) return 0.0;
    us[t] = u;
    const int base = u > 0.0 ? 1 : 0;
    double value = 0.0;
    for (int flipped = 0; flipped < 2; ++flipped) {
      const double p = flipped ? spec.delta : 1.0 - spec.delta;
      if (p == 0.0) continue;
      behavior[t] = flipped ? 1 - base : base;
      const SeqContext ctx{static_cast<int>(t + 1),
                           std::span<const double>(obs.data(), t + 1),
                           std::span<const int>(own.data(), t),
                           std::span<const int>(behavior.data(), t + 1),
                           std::span<const double>(us.data(), t + 1)};
      const int a = checked_action(rule(ctx), 2);
      own[t] = a;
      const double next = std::clamp(0.5 * u + (a - 0.5), -1.0, 1.0);
      value += p * (spec.reward_scale * expit(u * (a - 0.5)) + visit(t + 1, next));
    }
    return value;
  };
  return 0.5 * visit(0, 1.0) + 0.5 * visit(0, -1.0);
}

BanditRule behavior_rule() {
  return [](const BanditContext& c) { return c.recommended; };
}

BanditRule optimal_rule(const FiniteBanditSpec& spec, std::optional<PolicyClass> cls) {
  spec.check();
  if (cls == PolicyClass::kBehavior) return behavior_rule();
  const bool latent = !cls.has_value();
  const bool uses_z = cls == PolicyClass::kSZ || cls == PolicyClass::kSuper;
  const bool uses_rec = cls == PolicyClass::kSA || cls == PolicyClass::kSuper;
  require(latent || is_bandit_class(*cls), "optimal_rule needs a bandit class");
  const auto key_of = [latent, uses_z, uses_rec](std::span<const double> s,
                                                 std::span<const double> z,
                                                 int rec, std::span<const double> u) {
    LevelKey key = latent ? concat({s, u}) : concat({s, uses_z ? z : std::span<const double>()});
    if (uses_rec) key.push_back(static_cast<double>(rec));
    return key;
  };
  std::map<LevelKey, std::vector<double>> totals;
  const std::size_t k = static_cast<std::size_t>(spec.num_actions);
  for (const FiniteCell& c : spec.cells) {
    const auto& s = spec.s_values[static_cast<std::size_t>(c.s_level)];
    const auto& u = spec.u_values[static_cast<std::size_t>(c.u_level)];
    for (int rec = 0; rec < spec.num_actions; ++rec) {
      const double pb = c.behavior[static_cast<std::size_t>(rec)];
      for (std::size_t z = 0; z < spec.z_values.size(); ++z) {
        const double w = c.prob * pb * c.z_probs[z];
        if (w == 0.0) continue;
        auto& t = totals[key_of(s, spec.z_values[z], rec, u)];
        t.resize(k, 0.0);
        for (std::size_t a = 0; a < k; ++a) t[a] += w * c.mean_reward[a];
      }
    }
  }
  auto choice = std::make_shared<std::map<LevelKey, int>>();
  for (const auto& [key, t] : totals) (*choice)[key] = argmax_first(t);
  return [choice, key_of](const BanditContext& c) {
    auto it = choice->find(key_of(c.s, c.z, c.recommended, c.u));
    return it == choice->end() ? 0 : it->second;
  };
}

BanditRule latent_reference(const ContinuousBanditSpec& spec, std::size_t samples,
                            std::uint64_t seed) {
  spec.check();
  require(samples >= 100, "reference fit needs at least 100 samples");
  ContinuousStreams rng(seed);
  Rng choose(mix_seed(seed, 17));
  std::vector<std::vector<double>> x(2), y(2);
  for (std::size_t i = 0; i < samples; ++i) {
    const double s = rng.s.normal();
    const double u = rng.u.normal();
    const int a = static_cast<int>(choose.below(2));
    const double r = spec.reward_scale * (u * (a - 0.5) + spec.noise_sd * rng.reward.normal());
    x[static_cast<std::size_t>(a)].insert(x[static_cast<std::size_t>(a)].end(), {u, s});
    y[static_cast<std::size_t>(a)].push_back(r);
  }
  auto models = std::make_shared<std::vector<ProjectionModel>>();
  for (std::size_t a = 0; a < 2; ++a) {
    const auto m = static_cast<Eigen::Index>(y[a].size());
    Matrix features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 2,
                                                     Eigen::RowMajor>>(x[a].data(), m, 2);
    models->push_back(fit_linear(features, Eigen::Map<const Vector>(y[a].data(), m)));
  }
  return [models](const BanditContext& c) {
    const std::vector<double> row{c.u[0], c.s[0]};
    const std::vector<double> scores{(*models)[0].predict_row(row),
                                     (*models)[1].predict_row(row)};
    return argmax_first(scores);
  };
}

SeqRule latent_reference(const SequentialSpec& spec, std::size_t samples,
                         std::uint64_t seed) {
  spec.check();
  require(samples >= 100, "reference fit needs at least 100 samples");
  SequentialStreams rng(seed);
  const auto horizon = static_cast<std::size_t>(spec.horizon);
  std::vector<Episode> episodes(samples);
  const Decide random = [&rng](const SeqContext&) {
    return static_cast<int>(rng.choice.below(2));
  };
  for (Episode& ep : episodes) simulate(spec, rng, random, ep);

  const auto features = [](std::span<const double> u, std::span<const double> o) {
    std::vector<double> f(u.begin(), u.end());
    f.insert(f.end(), o.begin(), o.end());
    return f;
  };
  // models[t][a] predicts reward-to-go from (u_1..u_t, o_1..o_t).
  auto models = std::make_shared<std::vector<std::vector<ProjectionModel>>>(horizon);
  std::vector<double> future(samples, 0.0);
  for (std::size_t t = horizon; t-- > 0;) {
    const auto width = static_cast<Eigen::Index>(2 * (t + 1));
    for (int a = 0; a < 2; ++a) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < samples; ++i) {
        if (episodes[i].action[t] == a) rows.push_back(i);
      }
      require(rows.size() > static_cast<std::size_t>(width) + 1,
              "reference fit: too few samples per action");
      Matrix x(static_cast<Eigen::Index>(rows.size()), width);
      Vector y(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t j = 0; j < rows.size(); ++j) {
        const Episode& ep = episodes[rows[j]];
        const std::vector<double> f = features(
            std::span<const double>(ep.u.data(), t + 1),
            std::span<const double>(ep.o.data(), t + 1));
        for (Eigen::Index k = 0; k < width; ++k) {
          x(static_cast<Eigen::Index>(j), k) = f[static_cast<std::size_t>(k)];
        }
        y(static_cast<Eigen::Index>(j)) = ep.reward[t] + future[rows[j]];
      }
      (*models)[t].push_back(fit_linear(x, y));
    }
    for (std::size_t i = 0; i < samples; ++i) {
      const Episode& ep = episodes[i];
      const std::vector<double> f = features(
          std::span<const double>(ep.u.data(), t + 1),
          std::span<const double>(ep.o.data(), t + 1));
      future[i] = std::max((*models)[t][0].predict_row(f), (*models)[t][1].predict_row(f));
    }
  }
  return [models, features](const SeqContext& c) {
    const auto t = static_cast<std::size_t>(c.t - 1);
    const std::vector<double> f = features(c.u, c.observations);
    const std::vector<double> scores{(*models)[t][0].predict_row(f),
                                     (*models)[t][1].predict_row(f)};
    return argmax_first(scores);
  };
}

CattReport catt_catc(const FiniteBanditSpec& spec, double tolerance) {
  spec.check();
  require(spec.num_actions == 2, "CATT/CATC needs binary actions");
  CattReport report;
  for (std::size_t s = 0; s < spec.s_values.size(); ++s) {
    double ps = 0.0, p1 = 0.0, p0 = 0.0, e1 = 0.0, e0 = 0.0;
    for (const FiniteCell& c : spec.cells) {
      if (c.s_level != static_cast<int>(s)) continue;
      const double effect = c.mean_reward[1] - c.mean_reward[0];
      ps += c.prob;
      p1 += c.prob * c.behavior[1];
      p0 += c.prob * c.behavior[0];
      e1 += c.prob * c.behavior[1] * effect;
      e0 += c.prob * c.behavior[0] * effect;
    }
    if (ps == 0.0) continue;
    CattRow row;
    row.s_level = static_cast<int>(s);
    row.prob = ps;
    row.treated = p1 / ps;
    if (p1 > 0.0) row.catt = e1 / p1;
    if (p0 > 0.0) row.catc = e0 / p0;
    const bool interior = row.catt && row.catc;
    const bool catt_neg = row.catt && *row.catt < -tolerance;
    const bool catt_pos = row.catt && *row.catt > tolerance;
    const bool catc_neg = row.catc && *row.catc < -tolerance;
    const bool catc_pos = row.catc && *row.catc > tolerance;
    if (interior && ((catt_neg && catc_pos) || (catt_pos && catc_neg))) {
      report.improves_on_standard = true;
    }
    if (catt_neg || catc_pos) report.improves_on_behavior = true;
    if (interior && catt_neg && catc_pos) report.improves_on_both = true;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace superpol
