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
#include <limits>
#include <optional>

#include "mfg/model.hpp"

namespace mfg {

enum class QuadratureKind { auto_select, gauss_hermite, common_random };
enum class Conditioner { regression, exact_tree };

// Knobs shared by the fixed-point, pasting and backward-equation solvers.
struct SolverOptions {
  // Fixed-point iteration.
  double damping = 0.5;  // weight on the new iterate, in (0, 1]
  int max_iters = 200;
  // Stopping tolerance on the 1-Wasserstein residual; when unset it defaults
  // to 1e-3 * (1 + first absolute moment of the initial iterate).
  std::optional<double> tol_fixed_point;
  double tol_action = 1e-8;  // pointwise optimizer tolerance

  // Expectation over one noise increment inside best responses.
  QuadratureKind quadrature = QuadratureKind::auto_select;
  int gh_nodes = 21;
  int crn_draws = 512;

  // Abort threshold for diverging iterations: iterates whose moment_p-th
  // moment exceeds moment_cap raise an error.
  double moment_cap = std::numeric_limits<double>::infinity();
  double moment_p = 2.0;

  // Fitted feedback maps are built on this many quantile knots.
  int policy_knots = 129;

  // Conditional-expectation estimator for the backward equation.
  int basis_degree = 3;
  int basis_bumps = 2;
  double ridge = 1e-8;
  Conditioner conditioner = Conditioner::regression;

  // Sampling: top-level scenario count when no bundle is supplied, nested
  // (per-stage) sub-solve scenario count, and the seed for both.
  std::uint64_t seed = 0;
  int n_paths = 10000;
  int sub_solve_paths = 2048;

  // Grid size of the per-measure stage-value interpolants used inside
  // multi-period stage solvers.
  int value_grid = 1025;

  // Optional override of the first fixed-point iterate.
  std::optional<EmpiricalMeasure> initial_measure;

  // Estimate the equilibrium exploitability in the returned report.
  bool estimate_exploitability = true;
};

struct EquilibriumReport {
  int iterations = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  double tolerance = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  double exploitability = std::numeric_limits<double>::quiet_NaN();
  double exploitability_stderr = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> residual_history;
};

struct SinglePeriodSolution {
  FeedbackPolicy policy;
  EmpiricalMeasure measure;
  EquilibriumReport report;
};

// Minimizer of the one-period objective
//   L0(x, a) + F(x, mu) + E[terminal(x + b(x, a, mu) dt + sigma dZ, m)] / dt
// over the action box, where mu is the law of the initial state and m the
// candidate equilibrium law. Scalar states use Brent's method; higher
// dimensions use projected gradient descent with restarts.
double best_response_pointwise(double x, const EmpiricalMeasure& mu,
                               const EmpiricalMeasure& m,
                               const MeasureFn& terminal,
                               const MfgProblem& problem,
                               const SolverOptions& opts);

// Damped fixed-point iteration on the one-period best-response map with
// frozen scenarios. The returned measure is the push-forward of the initial
// states under the returned policy, so measure and policy are consistent.
SinglePeriodSolution solve_single_period(const MfgProblem& problem,
                                         const MeasureFn& terminal,
                                         const SolverOptions& opts,
                                         const PathBundle& paths);

// Cost of the given policy minus the cost of the fitted best response to m,
// both against the same frozen scenarios. Nonnegative up to Monte Carlo and
// optimizer error when m is an equilibrium.
double exploitability(const MfgProblem& problem, const FeedbackPolicy& policy,
                      const EmpiricalMeasure& m, const MeasureFn& terminal,
                      const PathBundle& paths, const SolverOptions& opts,
                      double* stderr_out = nullptr);

}  // namespace mfg
