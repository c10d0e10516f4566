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

#include <vector>

namespace mfg {

// Linear-quadratic family: state x' = x + a * dt + noise, running cost
// c * a^2 + c_l * (x - mean)^2 per unit time, terminal cost (x - mean)^2.
struct LqParams {
  double control_cost = 1.0;   // c, strictly positive
  double coupling_cost = 1.0;  // c_l, nonnegative
  double noise_var = 0.25;     // variance of one period's noise contribution
  double xi_mean = 0.0;        // E[initial state]
  double xi_var = 1.0;         // Var[initial state]
};

// One period, unit period length. The optimal feedback is
// a(x) = policy_coeff * (mean - x) and the equilibrium state law is the
// initial law contracted toward its mean plus the period noise.
struct LqSinglePeriod {
  double policy_coeff = 0.0;      // 1 / (1 + c)
  double equilibrium_mean = 0.0;  // E[initial]
  double equilibrium_var = 0.0;   // (c/(1+c))^2 Var[initial] + noise_var
};
LqSinglePeriod lq_single_period(const LqParams& params);

// Two periods, unit period length. The stage-1 continuation value is
// g1_curvature * (x - mean)^2 + g1_offset; the optimal feedback at stage i is
// stage_i coeff times (mean - x).
struct LqTwoPeriod {
  double g1_curvature = 0.0;  // c_l + c / (1 + c)
  double g1_offset = 0.0;     // noise_var
  double stage1_coeff = 0.0;  // g1_curvature / (c + g1_curvature)
  double stage2_coeff = 0.0;  // 1 / (1 + c)
  double m1_mean = 0.0;       // mean of the intermediate equilibrium measure
};
LqTwoPeriod lq_two_period(const LqParams& params);

// Backward quadratic recursion for any horizon. Stage values are
// g_i(x, m) = curvature[i] * (x - mean(m))^2 + offset[i]; the optimal
// feedback over period i (from t_i to t_{i+1}) is
// a_i(x) = policy_coeff[i] * (mean - x). Entries run i = 0..k for the values
// and i = 0..k-1 for the feedback. period_dt scales the recursion for period
// lengths other than one; params.noise_var stays the per-period variance.
struct LqStageValues {
  std::vector<double> curvature;     // q_0..q_k, q_k = 1
  std::vector<double> offset;        // r_0..r_k, r_k = 0
  std::vector<double> policy_coeff;  // stage feedback gains
};
LqStageValues lq_g_recursion(const LqParams& params, int k,
                             double period_dt = 1.0);

// Margin of the sufficient condition for single-period uniqueness of the
// saturating-drift family b = k * tanh(a): positive exactly when
// c > k^2 + k.
double tanh_uniqueness_margin(double control_cost, double drift_scale);

// A-priori bound on the p-th moment of any equilibrium candidate, from the
// growth constants of the coefficients. Solvers can use it as an abort
// threshold for diverging fixed-point iterations.
struct GrowthConstants {
  double drift_growth = 1.0;      // bound constant of the drift
  double running_growth = 1.0;    // growth constant of the running cost
  double terminal_growth = 1.0;   // growth constant of the terminal cost
  double convexity = 1.0;         // strong convexity constant in the action
  double p = 2.0;                 // moment order, > 1
  double q = 2.0;                 // growth order, >= 1
};
double a_priori_moment_bound(const GrowthConstants& gc, double e_xi_p,
                             double e_noise_p, double e_xi_q, double e_noise_q,
                             double dt);

}  // namespace mfg
