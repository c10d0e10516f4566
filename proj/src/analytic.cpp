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

#include "mfg/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace mfg {
namespace {

void check_params(const LqParams& p) {
  if (p.control_cost <= 0.0) {
    throw std::invalid_argument("lq: control cost must be positive");
  }
  if (p.coupling_cost < 0.0) {
    throw std::invalid_argument("lq: coupling cost must be nonnegative");
  }
  if (p.noise_var < 0.0 || p.xi_var < 0.0) {
    throw std::invalid_argument("lq: variances must be nonnegative");
  }
}

}  // namespace

LqSinglePeriod lq_single_period(const LqParams& params) {
  check_params(params);
  const double c = params.control_cost;
  LqSinglePeriod out;
  out.policy_coeff = 1.0 / (1.0 + c);
  out.equilibrium_mean = params.xi_mean;
  const double shrink = c / (1.0 + c);
  out.equilibrium_var = shrink * shrink * params.xi_var + params.noise_var;
  return out;
}

LqTwoPeriod lq_two_period(const LqParams& params) {
  check_params(params);
  const double c = params.control_cost;
  LqTwoPeriod out;
  out.g1_curvature = params.coupling_cost + c / (1.0 + c);
  out.g1_offset = params.noise_var;
  out.stage1_coeff = out.g1_curvature / (c + out.g1_curvature);
  out.stage2_coeff = 1.0 / (1.0 + c);
  out.m1_mean = params.xi_mean;
  return out;
}

LqStageValues lq_g_recursion(const LqParams& params, int k, double period_dt) {
  check_params(params);
  if (k <= 0) throw std::invalid_argument("lq: k must be positive");
  if (period_dt <= 0.0) {
    throw std::invalid_argument("lq: period length must be positive");
  }
  const double c = params.control_cost;
  const double cl = params.coupling_cost;
  const double dt = period_dt;
  LqStageValues out;
  const std::size_t kk = static_cast<std::size_t>(k);
  out.curvature.assign(kk + 1, 0.0);
  out.offset.assign(kk + 1, 0.0);
  out.policy_coeff.assign(kk, 0.0);
  out.curvature[kk] = 1.0;
  out.offset[kk] = 0.0;
  for (std::size_t i = kk; i-- > 0;) {
    const double q_next = out.curvature[i + 1];
    out.policy_coeff[i] = q_next / (c + q_next * dt);
    out.curvature[i] = cl * dt + c * q_next / (c + q_next * dt);
    out.offset[i] = out.offset[i + 1] + q_next * params.noise_var;
  }
  return out;
}

double tanh_uniqueness_margin(double control_cost, double drift_scale) {
  if (control_cost <= 0.0) {
    throw std::invalid_argument("tanh margin: control cost must be positive");
  }
  if (drift_scale < 0.0) {
    throw std::invalid_argument("tanh margin: drift scale must be nonnegative");
  }
  return control_cost - drift_scale * drift_scale - drift_scale;
}

double a_priori_moment_bound(const GrowthConstants& gc, double e_xi_p,
                             double e_noise_p, double e_xi_q, double e_noise_q,
                             double dt) {
  if (gc.p <= 1.0 || gc.q < 1.0) {
    throw std::invalid_argument("moment bound: need p > 1 and q >= 1");
  }
  if (gc.convexity <= 0.0 || dt <= 0.0) {
    throw std::invalid_argument("moment bound: need positive convexity and dt");
  }
  const double cost_growth =
      2.0 * std::max(gc.running_growth,
                     std::max(std::pow(16.0, gc.q) * gc.drift_growth, 1.0)) *
      (1.0 + e_xi_q + e_noise_q);
  return std::pow(4.0, gc.p) *
         (2.0 + e_xi_p + (cost_growth + gc.terminal_growth) / (gc.convexity * dt) +
          e_noise_p);
}

}  // namespace mfg
