// Copyright 2026 The mfgsolve Authors
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

#include "mfg/pasting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

#include "internal.hpp"
#include "mfg/analytic.hpp"
#include "mfg/parallel.hpp"

namespace mfg {
namespace internal {
namespace {

constexpr int kGenericPeriodLimit = 3;
constexpr int kFingerprintQuantiles = 16;

using Fingerprint = std::array<std::int64_t, kFingerprintQuantiles>;

Fingerprint fingerprint_measure(const EmpiricalMeasure& mu) {
  Fingerprint fp{};
  for (int j = 0; j < kFingerprintQuantiles; ++j) {
    const double u = (j + 0.5) / kFingerprintQuantiles;
    fp[static_cast<std::size_t>(j)] =
        std::llround(mu.quantile(u) * 1e6);
  }
  return fp;
}

std::uint64_t mix_hash(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t fingerprint_seed(std::uint64_t base, int stage,
                               const Fingerprint& fp) {
  std::uint64_t h = mix_hash(base, static_cast<std::uint64_t>(stage) + 1);
  for (std::int64_t q : fp) h = mix_hash(h, static_cast<std::uint64_t>(q));
  return h;
}

}  // namespace

// Shared state of one family of stage values g_0..g_k.
struct ValueStageSet {
  MfgProblem problem;  // full-horizon problem
  SolverOptions opts;
  int k = 1;
  bool closed_form = false;
  LqStageValues lq_values;

  struct CacheEntry {
    EmpiricalMeasure sub_equilibrium;
    LinearInterpolant value_interp;
    double range_lo = 0.0;
    double range_hi = 0.0;
  };
  std::map<std::pair<int, Fingerprint>, std::shared_ptr<const CacheEntry>> cache;
  std::mutex cache_mutex;

  double eval(int stage, double x, const EmpiricalMeasure& mu);
  MeasureFn solver_terminal(int stage);
  std::shared_ptr<const CacheEntry> entry(int stage, const EmpiricalMeasure& mu);
};

namespace {

// Scenario bundle for a nested one-period solve started from mu.
PathBundle bundle_from_measure(const EmpiricalMeasure& mu,
                               const MfgProblem& stage, int n,
                               std::uint64_t seed) {
  PathBundle bundle;
  bundle.n_paths = n;
  bundle.steps = 1;
  bundle.dim = 1;
  bundle.dt = stage.dt();
  bundle.seed = seed;
  const EmpiricalMeasure resampled = mu.resample_equal(static_cast<std::size_t>(n));
  bundle.initial.assign(resampled.points().begin(), resampled.points().end());
  bundle.increments.resize(static_cast<std::size_t>(n));
  const double root_dt = std::sqrt(bundle.dt);
  for (int p = 0; p < n; ++p) {
    PathRng rng = make_rng(seed, static_cast<std::uint64_t>(p), RngStream::kNoise);
    double z = 0.0;
    switch (stage.noise.kind) {
      case NoiseKind::gaussian:
        z = root_dt * rng.gaussian();
        break;
      case NoiseKind::rademacher:
        z = root_dt * rng.sign();
        break;
      case NoiseKind::zero:
        z = 0.0;
        break;
    }
    bundle.increments[static_cast<std::size_t>(p)] = z;
  }
  return bundle;
}

}  // namespace

std::shared_ptr<const ValueStageSet::CacheEntry> ValueStageSet::entry(
    int stage, const EmpiricalMeasure& mu) {
  const Fingerprint fp = fingerprint_measure(mu);
  const auto key = std::make_pair(stage, fp);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  // Build outside the lock; identical rebuilds are deterministic, so a rare
  // duplicate build is harmless.
  MfgProblem stage_prob = stage_problem(problem);
  SolverOptions sub_opts = opts;
  sub_opts.initial_measure.reset();
  sub_opts.estimate_exploitability = false;
  sub_opts.seed = fingerprint_seed(opts.seed, stage, fp);
  const PathBundle bundle =
      bundle_from_measure(mu, stage_prob, opts.sub_solve_paths, sub_opts.seed);
  // Terminal of the remaining game seen from this stage.
  const MeasureFn terminal = [this, stage](std::span<const double> x,
                                           const EmpiricalMeasure& m) {
    return eval(stage + 1, x[0], m);
  };
  const SinglePeriodSolution sol =
      solve_single_period(stage_prob, terminal, sub_opts, bundle);
  if (!sol.report.converged) {
    throw std::runtime_error("stage value: nested solve at stage " +
                             std::to_string(stage) + " did not converge");
  }

  auto built = std::make_shared<CacheEntry>(CacheEntry{
      sol.measure, LinearInterpolant(), 0.0, 0.0});
  std::lock_guard<std::mutex> lock(cache_mutex);
  const auto [it, inserted] = cache.emplace(key, std::move(built));
  return it->second;
}

double ValueStageSet::eval(int stage, double x, const EmpiricalMeasure& mu) {
  if (stage < 0 || stage > k) throw std::out_of_range("stage value: bad stage");
  if (closed_form) {
    const double d = x - mu.mean1();
    return lq_values.curvature[static_cast<std::size_t>(stage)] * d * d +
           lq_values.offset[static_cast<std::size_t>(stage)];
  }
  const std::span<const double> xs(&x, 1);
  if (stage == k) return problem.terminal_cost(xs, mu);
  const auto cached = entry(stage, mu);
  const EmpiricalMeasure& sub = cached->sub_equilibrium;
  MfgProblem stage_prob = stage_problem(problem);
  const QuadratureRule quad = select_quadrature(stage_prob, opts);
  const MeasureFn terminal = [this, stage](std::span<const double> y,
                                           const EmpiricalMeasure& m) {
    return eval(stage + 1, y[0], m);
  };
  const BestResponseObjective obj{stage_prob, mu, sub, terminal, quad};
  const double a = obj.minimize(x, opts.tol_action);
  return obj(x, a);
}

MeasureFn ValueStageSet::solver_terminal(int stage) {
  if (closed_form || stage == k) {
    return [this, stage](std::span<const double> x, const EmpiricalMeasure& m) {
      return eval(stage, x[0], m);
    };
  }
  // Generic stages answer dense solver queries through a per-measure
  // interpolant built over the query range.
  return [this, stage](std::span<const double> x, const EmpiricalMeasure& m) {
    const Fingerprint fp = fingerprint_measure(m);
    const auto key = std::make_pair(stage, fp);
    std::shared_ptr<const CacheEntry> cached;
    {
      std::lock_guard<std::mutex> lock(cache_mutex);
      const auto it = cache.find(key);
      if (it != cache.end()) cached = it->second;
    }
    if (!cached) {
      entry(stage, m);  // build the sub-equilibrium
      std::lock_guard<std::mutex> lock(cache_mutex);
      cached = cache.at(key);
    }
    if (!cached->value_interp.empty() && x[0] >= cached->range_lo &&
        x[0] <= cached->range_hi) {
      return cached->value_interp(x[0]);
    }
    if (cached->value_interp.empty()) {
      // Build a grid wide enough for every state the solver can query:
      // support of m, one period of bounded drift, and the noise spread.
      const auto values = m.sorted_values();
      const double dt = problem.dt();
      const double a_max =
          std::max(std::fabs(problem.action_lo[0]), std::fabs(problem.action_hi[0]));
      double b0_max = 0.0;
      if (problem.drift_b0) {
        for (double v : {values.front(), values.back(), m.mean1()}) {
          double b0 = 0.0;
          problem.drift_b0(std::span<const double>(&v, 1), m,
                           std::span<double>(&b0, 1));
          b0_max = std::max(b0_max, std::fabs(b0));
        }
      }
      const QuadratureRule quad = select_quadrature(stage_problem(problem), opts);
      double node_span = 0.0;
      for (double nd : quad.nodes) node_span = std::max(node_span, std::fabs(nd));
      const double reach = (a_max + 2.0 * b0_max) * dt + node_span;
      const double pad = 1e-6 + 0.01 * (values.back() - values.front() + reach);
      const double lo = values.front() - reach - pad;
      const double hi = values.back() + reach + pad;
      const int grid = std::max(opts.value_grid, 9);
      std::vector<double> xs(static_cast<std::size_t>(grid));
      std::vector<double> ys(static_cast<std::size_t>(grid));
      for (int j = 0; j < grid; ++j) {
        xs[static_cast<std::size_t>(j)] =
            lo + (hi - lo) * j / static_cast<double>(grid - 1);
      }
      parallel_blocks(static_cast<std::size_t>(grid),
                      [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t j = begin; j < end; ++j) {
          ys[j] = eval(stage, xs[j], m);
        }
      });
      auto widened = std::make_shared<CacheEntry>(CacheEntry{
          cached->sub_equilibrium,
          LinearInterpolant(std::move(xs), std::move(ys)), lo, hi});
      std::lock_guard<std::mutex> lock(cache_mutex);
      cache[key] = widened;
      cached = widened;
      if (x[0] >= cached->range_lo && x[0] <= cached->range_hi) {
        return cached->value_interp(x[0]);
      }
    }
    // Rare out-of-range query: fall back to the exact evaluation.
    return eval(stage, x[0], m);
  };
}

}  // namespace internal

double ValueFunctionStage::eval(double x, const EmpiricalMeasure& mu) const {
  if (!set_) throw std::logic_error("stage value: empty handle");
  return set_->eval(stage_, x, mu);
}

MeasureFn ValueFunctionStage::solver_terminal() const {
  if (!set_) throw std::logic_error("stage value: empty handle");
  // Keep the stage set alive for as long as the returned callable is used.
  auto keep_alive = set_;
  MeasureFn inner = set_->solver_terminal(stage_);
  return [keep_alive, inner = std::move(inner)](
             std::span<const double> x, const EmpiricalMeasure& m) {
    return inner(x, m);
  };
}

std::vector<ValueFunctionStage> make_value_stages(const MfgProblem& problem,
                                                  const SolverOptions& opts,
                                                  bool force_generic) {
  problem.validate();
  if (problem.dim != 1) {
    throw std::invalid_argument("stage values: requires dim == 1");
  }
  auto set = std::make_shared<internal::ValueStageSet>();
  set->problem = problem;
  set->opts = opts;
  set->opts.initial_measure.reset();
  set->k = problem.periods;
  set->closed_form = problem.lq.has_value() && !force_generic;
  if (set->closed_form) {
    set->lq_values = lq_g_recursion(*problem.lq, problem.periods, problem.dt());
  } else if (problem.periods > internal::kGenericPeriodLimit) {
    throw std::invalid_argument(
        "stage values: recursion budget exceeded; problems without closed-form "
        "stage values support at most 3 periods");
  }
  std::vector<ValueFunctionStage> stages;
  stages.reserve(static_cast<std::size_t>(problem.periods) + 1);
  for (int i = 0; i <= problem.periods; ++i) {
    stages.emplace_back(i, set);
  }
  return stages;
}

double value_function_eval(const ValueFunctionStage& stage, double x,
                           const EmpiricalMeasure& mu) {
  return stage.eval(x, mu);
}

MultiPeriodSolution paste_equilibrium(const MfgProblem& problem,
                                      const SolverOptions& opts,
                                      const PathBundle* paths,
                                      bool force_generic) {
  problem.validate();
  if (problem.dim != 1) {
    throw std::invalid_argument("paste: requires dim == 1");
  }
  if (problem.drift_general) {
    throw std::invalid_argument("paste: requires the separated drift a + b0");
  }
  PathBundle local;
  if (paths == nullptr) {
    local = sample_paths(problem, opts.n_paths, opts.seed);
    paths = &local;
  }
  if (paths->steps != problem.periods) {
    throw std::invalid_argument("paste: bundle steps must equal periods");
  }
  const int k = problem.periods;
  const double dt = problem.dt();
  std::vector<ValueFunctionStage> stages =
      make_value_stages(problem, opts, force_generic);

  MultiPeriodSolution out;
  out.flow.times.resize(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i) {
    out.flow.times[static_cast<std::size_t>(i)] = dt * i;
  }
  out.flow.measures.reserve(static_cast<std::size_t>(k) + 1);
  out.flow.measures.push_back(paths->initial_measure());

  MfgProblem stage_prob = internal::stage_problem(problem);
  std::vector<FeedbackPolicy::Stage> policy_stages;
  policy_stages.reserve(static_cast<std::size_t>(k));
  std::vector<double> current(paths->initial.begin(), paths->initial.end());

  for (int j = 0; j < k; ++j) {
    PathBundle stage_bundle;
    stage_bundle.n_paths = paths->n_paths;
    stage_bundle.steps = 1;
    stage_bundle.dim = 1;
    stage_bundle.dt = dt;
    stage_bundle.seed = paths->seed;
    stage_bundle.initial = current;
    stage_bundle.increments.resize(static_cast<std::size_t>(paths->n_paths));
    for (int p = 0; p < paths->n_paths; ++p) {
      stage_bundle.increments[static_cast<std::size_t>(p)] =
          paths->increment1(p, j);
    }
    SolverOptions stage_opts = opts;
    if (j > 0) stage_opts.initial_measure.reset();
    const MeasureFn terminal = stages[static_cast<std::size_t>(j) + 1].solver_terminal();
    SinglePeriodSolution sol = [&] {
      try {
        return solve_single_period(stage_prob, terminal, stage_opts, stage_bundle);
      } catch (const std::exception& e) {
        throw std::runtime_error("paste: stage " + std::to_string(j) +
                                 " failed: " + e.what());
      }
    }();
    if (!sol.report.converged) {
      throw std::runtime_error("paste: stage " + std::to_string(j) +
                               " did not converge within max_iters");
    }
    current.assign(sol.measure.points().begin(), sol.measure.points().end());
    out.flow.measures.push_back(sol.measure);
    policy_stages.push_back(sol.policy.stage(0));
    out.stage_reports.push_back(sol.report);
  }

  out.policy = FeedbackPolicy(std::move(policy_stages), problem.action_lo,
                              problem.action_hi);
  out.report.converged = true;
  out.report.residual = 0.0;
  out.report.iterations = 0;
  for (const EquilibriumReport& r : out.stage_reports) {
    out.report.converged = out.report.converged && r.converged;
    out.report.residual = std::max(out.report.residual, r.residual);
    out.report.iterations += r.iterations;
    out.report.residual_history.insert(out.report.residual_history.end(),
                                       r.residual_history.begin(),
                                       r.residual_history.end());
  }
  out.report.tolerance = out.stage_reports.empty()
                             ? 0.0
                             : out.stage_reports.front().tolerance;
  return out;
}

}  // namespace mfg
