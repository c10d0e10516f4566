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

#include <span>
#include <vector>

#include "mfg/model.hpp"
#include "mfg/single_period.hpp"

namespace mfg {

// Refinement study of the time discretization. One Brownian path set is
// sampled on the reference grid; every coarser level k sees the same paths
// through increment aggregation. Each level is solved by the backward-
// equation method and compared against the reference-level solution through
// piecewise-constant control/measure interpolations and the frozen-drift
// state interpolation on the reference grid.
struct SweepResult {
  std::vector<int> ks;
  int k_ref = 0;
  std::vector<char> converged;  // per level; failed levels excluded from fits
  std::vector<int> iterations;
  // Max over reference grid times of W2 between interpolated flows.
  std::vector<double> flow_gaps;
  // E int_0^T |a^k(t) - a^ref(t)|^2 dt with piecewise-constant controls.
  std::vector<double> control_gaps;
  std::vector<double> control_gap_stderr;
  // E sup over grid times |Xhat^k_t - X^ref_t|^2.
  std::vector<double> state_gaps;
  std::vector<double> state_gap_stderr;
  // Log-log least-squares slopes over converged positive-gap levels; NaN
  // when fewer than 3 such levels remain.
  double control_slope = 0.0;
  double state_slope = 0.0;
  double flow_slope = 0.0;
};

// Requires ks strictly increasing, each dividing k_ref, and k_ref >= 8 max(ks).
SweepResult donsker_sweep(const MfgProblem& problem, std::span<const int> ks,
                          int k_ref, const SolverOptions& opts);

// Ordinary least-squares slope of log(gap) against log(k).
// Requires at least 3 points and strictly positive gaps.
double fit_rate(std::span<const double> ks, std::span<const double> gaps);

}  // namespace mfg
