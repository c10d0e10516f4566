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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mfg/analytic.hpp"
#include "mfg/measures.hpp"
#include "mfg/noise.hpp"
#include "mfg/policy.hpp"
#include "mfg/rng.hpp"

namespace mfg {

// Coefficient signatures. States and actions are passed as spans so scalar
// problems stay allocation free in inner loops.
using RunningFn =
    std::function<double(std::span<const double>, std::span<const double>)>;
using DriftFn = std::function<void(std::span<const double>,
                                   const EmpiricalMeasure&, std::span<double>)>;
using GeneralDriftFn =
    std::function<void(std::span<const double>, std::span<const double>,
                       const EmpiricalMeasure&, std::span<double>)>;
using InitialSampler = std::function<void(PathRng&, std::span<double>)>;

// Discrete-time mean field problem over k periods of length T / k:
//   X_{i+1} = X_i + (a_i + b0(X_i, m_i)) dt + sigma * dZ_{i+1},
// with running cost (L0(x, a) + F(x, m)) dt per period and terminal cost
// G(x, m). An optional non-separated drift b(x, a, m) replaces a + b0 inside
// the single-period operations only; multi-period simulation requires the
// separated form.
struct MfgProblem {
  int dim = 1;
  double horizon = 1.0;  // T
  int periods = 1;       // k
  NoiseSpec noise;
  std::vector<double> sigma = {1.0};  // d x d row-major volatility
  std::vector<double> action_lo = {-50.0};
  std::vector<double> action_hi = {50.0};

  DriftFn drift_b0;                  // null means zero
  GeneralDriftFn drift_general;      // optional, single-period only
  RunningFn running_cost;            // L0(x, a), required
  MeasureFn coupling_cost;           // F(x, m), null means zero
  MeasureFn terminal_cost;           // G(x, m), required
  InitialSampler initial_sampler;    // law of the initial state

  // Set when the instance belongs to the linear-quadratic family; enables
  // closed-form continuation values in the multi-period solver.
  std::optional<LqParams> lq;

  double dt() const { return horizon / periods; }
  double sigma_scalar() const { return sigma[0]; }
  void validate() const;
};

// Frozen scenario set: initial states and raw noise increments (not yet
// multiplied by sigma). Fully determined by (seed, n_paths, problem shape);
// every increment is generated counter-based from (seed, path, step), so the
// bundle is independent of iteration order and worker count.
struct PathBundle {
  int n_paths = 0;
  int steps = 0;
  int dim = 1;
  double dt = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> initial;     // n_paths x dim
  std::vector<double> increments;  // n_paths x steps x dim

  double initial1(int path) const { return initial[static_cast<std::size_t>(path) * dim]; }
  double increment1(int path, int step) const {
    return increments[(static_cast<std::size_t>(path) * steps + step) * dim];
  }
  std::span<const double> initial_at(int path) const;
  std::span<const double> increment_at(int path, int step) const;
  // Equal-weight law of the initial states.
  EmpiricalMeasure initial_measure() const;
};

PathBundle sample_paths(const MfgProblem& problem, int n_paths,
                        std::uint64_t seed);

// All 2^k sign paths of the rademacher increment law, in binary order (bit i
// of the path index gives the sign of increment i). Requires rademacher
// noise, dim 1 and k <= 20.
PathBundle enumerate_rademacher_paths(const MfgProblem& problem);

// Aggregates fine increments into coarse periods; coarse_steps must divide
// bundle.steps. Initial states are shared.
PathBundle coarsen_paths(const PathBundle& fine, int coarse_steps);

// Simulated states under a feedback policy, n_paths x (steps + 1) x dim.
struct Trajectories {
  int n_paths = 0;
  int steps = 0;
  int dim = 1;
  std::vector<double> states;

  double at1(int path, int step) const {
    return states[(static_cast<std::size_t>(path) * (steps + 1) + step) * dim];
  }
  std::span<const double> at(int path, int step) const;
  // Equal-weight law of the states at one time index.
  EmpiricalMeasure measure_at(int step) const;
};

Trajectories simulate_state(const MfgProblem& problem,
                            const FeedbackPolicy& policy,
                            const MeasureFlow& flow, const PathBundle& paths);

// Monte Carlo estimate of the total cost of a feedback policy against a
// measure flow, with its standard error.
struct CostEstimate {
  double value = 0.0;
  double stderr_mean = 0.0;
};
CostEstimate total_cost(const MfgProblem& problem, const FeedbackPolicy& policy,
                        const MeasureFlow& flow, const PathBundle& paths);

// Built-in initial samplers.
InitialSampler gaussian_initial(double mean, double stddev);
InitialSampler point_initial(double x0);

}  // namespace mfg
