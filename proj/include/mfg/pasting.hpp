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

#include <memory>
#include <vector>

#include "mfg/single_period.hpp"

namespace mfg {

namespace internal {
struct ValueStageSet;
}  // namespace internal

// Stage value g_i: the optimal remaining cost of the game over periods
// i..k-1 started from law mu, as a function of the state. g_k is the terminal
// cost; earlier stages are defined backward by one-period optimization
// against the sub-equilibrium of the remaining game. Evaluations share a
// cache of per-(stage, measure-fingerprint) sub-equilibria.
class ValueFunctionStage {
 public:
  ValueFunctionStage() = default;
  ValueFunctionStage(int stage, std::shared_ptr<internal::ValueStageSet> set)
      : stage_(stage), set_(std::move(set)) {}

  int stage() const { return stage_; }
  double eval(double x, const EmpiricalMeasure& mu) const;

  // Measure-function view of this stage, backed by a per-measure interpolant
  // so that dense evaluation inside stage solvers stays cheap.
  MeasureFn solver_terminal() const;

 private:
  int stage_ = 0;
  std::shared_ptr<internal::ValueStageSet> set_;
};

// Builds g_0..g_k. Linear-quadratic instances use the closed-form quadratic
// recursion unless force_generic is set; generic instances use the recursive
// definition and are limited to k <= 3.
std::vector<ValueFunctionStage> make_value_stages(const MfgProblem& problem,
                                                  const SolverOptions& opts,
                                                  bool force_generic = false);

double value_function_eval(const ValueFunctionStage& stage, double x,
                           const EmpiricalMeasure& mu);

struct MultiPeriodSolution {
  FeedbackPolicy policy;
  MeasureFlow flow;
  std::vector<EquilibriumReport> stage_reports;
  EquilibriumReport report;  // aggregate: all stages converged, max residual
};

// Multi-period equilibrium by backward value stages and forward per-period
// fixed points on a shared scenario bundle. A null bundle samples
// opts.n_paths scenarios from the problem with opts.seed. Throws if any
// stage fails to converge, identifying the stage.
MultiPeriodSolution paste_equilibrium(const MfgProblem& problem,
                                      const SolverOptions& opts,
                                      const PathBundle* paths = nullptr,
                                      bool force_generic = false);

}  // namespace mfg
