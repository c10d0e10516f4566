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

#include <functional>
#include <vector>

#include "mfg/measures.hpp"
#include "mfg/model.hpp"
#include "mfg/quadrature.hpp"
#include "mfg/single_period.hpp"

namespace mfg::internal {

// Derivative-free scalar minimization over [lo, hi] (Brent's method).
double brent_minimize(const std::function<double(double)>& f, double lo,
                      double hi, double tol);

// Quadrature rule for the effective one-period noise sigma * dZ of a
// one-period problem, honoring the configured quadrature kind.
QuadratureRule select_quadrature(const MfgProblem& problem,
                                 const SolverOptions& opts);

// One-period best-response machinery shared by the fixed-point and pasting
// solvers. mu is the initial law, m the candidate equilibrium law.
struct BestResponseObjective {
  const MfgProblem& problem;
  const EmpiricalMeasure& mu;
  const EmpiricalMeasure& m;
  const MeasureFn& terminal;
  const QuadratureRule& quad;

  double operator()(double x, double a) const;
  double minimize(double x, double tol) const;
};

// Evenly rank-spaced knots (including both extremes) over a sorted sample.
std::vector<double> quantile_knots(std::span<const double> sorted_values,
                                   int count);

// Fits the one-period best response on quantile knots of the initial cloud.
FeedbackPolicy fit_best_response_policy(const MfgProblem& problem,
                                        const EmpiricalMeasure& mu,
                                        const EmpiricalMeasure& m,
                                        const MeasureFn& terminal,
                                        const QuadratureRule& quad,
                                        const SolverOptions& opts);

// One-period push-forward of the bundle's initial states under a policy.
std::vector<double> push_forward_states(const MfgProblem& problem,
                                        const FeedbackPolicy& policy,
                                        const EmpiricalMeasure& mu,
                                        const PathBundle& paths);

// Per-path one-period costs L(xi, a(xi), mu) dt + terminal(X, m).
std::vector<double> single_period_path_costs(const MfgProblem& problem,
                                             const FeedbackPolicy& policy,
                                             const EmpiricalMeasure& mu,
                                             const EmpiricalMeasure& m,
                                             const MeasureFn& terminal,
                                             const PathBundle& paths);

// Exact 1-Wasserstein distance between equal-size equal-weight clouds.
double w1_equal_clouds(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

// One-period restriction of a multi-period problem (period length dt).
MfgProblem stage_problem(const MfgProblem& problem);

}  // namespace mfg::internal
