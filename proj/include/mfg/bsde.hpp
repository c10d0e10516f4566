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

#include <cstddef>
#include <functional>
#include <vector>

#include "mfg/measures.hpp"
#include "mfg/model.hpp"
#include "mfg/pasting.hpp"
#include "mfg/single_period.hpp"

namespace mfg {

// Pointwise control criterion h(x, a, m, z) = L0(x, a) + F(x, m) + z a / sigma
// whose infimum over the action box drives the backward value recursion.
// Scalar states and actions.
double hamiltonian(const MfgProblem& problem, double x, double a,
                   const EmpiricalMeasure& m, double z);

struct HamiltonianMin {
  double action = 0.0;
  double value = 0.0;
};

// Minimizer of a -> hamiltonian(x, a, m, z) over the action box. For
// L0 = c a^2 the exact solution is the clamp of -z / (2 c sigma) to the box.
HamiltonianMin minimize_hamiltonian(const MfgProblem& problem, double x,
                                    const EmpiricalMeasure& m, double z,
                                    double tol = 1e-10);

enum class BsdeStorage { full, lean };

// Solution of the backward value recursion along uncontrolled paths:
//   y at the last step is the terminal cost,
//   z[i] = E[y[i+1] dZ | state]/dt,  y[i] = E[y[i+1] | state] + dt * H.
// Row-major flat arrays: y and states are n_paths x (steps+1), z is
// n_paths x steps. With lean storage only states, diagnostics, the
// conditional-expectation evaluators and value_estimate are kept.
struct BsdeSolution {
  int n_paths = 0;
  int steps = 0;
  std::vector<double> y;
  std::vector<double> z;
  std::vector<double> states;
  // Per-step magnitude of the correlation between the martingale residual
  // y[i+1] - E[y[i+1]|state] - z[i] dZ and the noise increment.
  std::vector<double> orth_residual;
  double value_estimate = 0.0;  // mean of y at step 0
  bool rank_warning = false;    // a regression needed a stiffer ridge
  // Fitted conditional-expectation evaluators z_i(state); empty per step in
  // exact-tree mode (tree estimates are per-node, not a curve).
  std::vector<std::function<double(double)>> z_function;

  double y_at(int path, int step) const {
    return y[static_cast<std::size_t>(path) * (static_cast<std::size_t>(steps) + 1) +
             static_cast<std::size_t>(step)];
  }
  double z_at(int path, int step) const {
    return z[static_cast<std::size_t>(path) * static_cast<std::size_t>(steps) +
             static_cast<std::size_t>(step)];
  }
  double state_at(int path, int step) const {
    return states[static_cast<std::size_t>(path) * (static_cast<std::size_t>(steps) + 1) +
                  static_cast<std::size_t>(step)];
  }
};

// Backward value recursion for a frozen measure flow, on uncontrolled paths
// simulated from the bundle (state drift b0 only; the control enters through
// the driver). Conditional expectations use either least-squares regression
// on the current state (polynomial basis plus Gaussian bumps, ridge
// regularized, one shared Gram for the y and z solves) or exact sign-prefix
// group averaging on enumerated two-point noise trees.
BsdeSolution solve_bsde(const MfgProblem& problem, const MeasureFlow& flow,
                        const PathBundle& paths, const SolverOptions& opts,
                        BsdeStorage storage = BsdeStorage::full);

// Change-of-measure weights exp(sum_j beta_j dZ_{j+1}/sigma - |beta_j/sigma|^2 dt/2)
// for a feedback policy beta evaluated along the uncontrolled paths.
// Accumulated in log space.
struct GirsanovWeights {
  int n_paths = 0;
  int steps = 0;
  std::vector<double> log_increments;  // n_paths x steps, row-major
  std::vector<double> states;          // uncontrolled states, n_paths x (steps+1)

  double log_increment(int path, int step) const {
    return log_increments[static_cast<std::size_t>(path) * static_cast<std::size_t>(steps) +
                          static_cast<std::size_t>(step)];
  }
  double state_at(int path, int step) const {
    return states[static_cast<std::size_t>(path) * (static_cast<std::size_t>(steps) + 1) +
                  static_cast<std::size_t>(step)];
  }
  // Density after the first `upto` steps (all steps for the full weight).
  double partial(int path, int upto) const;
  double weight(int path) const { return partial(path, steps); }
  std::vector<double> weights() const;
  double mean_weight() const;
};

GirsanovWeights girsanov_weights(const MfgProblem& problem,
                                 const FeedbackPolicy& policy,
                                 const PathBundle& paths,
                                 const MeasureFlow& flow);

// Equilibrium iteration on the measure flow: bootstrap the flow from the
// uncontrolled dynamics, then alternate a backward value sweep (policy =
// pointwise Hamiltonian minimizer against the fitted z curve), a forward
// resimulation under the extracted policy, and damped per-slice quantile
// mixing, until the worst per-slice 1-Wasserstein update falls below
// tolerance. An injected bundle fixes the scenario noise.
MultiPeriodSolution solve_mfg_bsde(const MfgProblem& problem,
                                   const SolverOptions& opts,
                                   const PathBundle* paths = nullptr);

}  // namespace mfg
