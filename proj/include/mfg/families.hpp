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

#include "mfg/model.hpp"

namespace mfg {

// Scalar linear-quadratic instance:
//   drift a, running cost c a^2 + c_l (x - mean)^2, terminal (x - mean)^2,
//   initial state Normal(xi_mean, xi_std^2).
struct LqConfig {
  double c = 1.0;
  double c_l = 1.0;
  double sigma = 0.5;
  double xi_mean = 0.0;
  double xi_std = 1.0;
  double horizon = 1.0;
  int periods = 1;
  double action_lo = -50.0;
  double action_hi = 50.0;
  NoiseKind noise = NoiseKind::gaussian;
};
MfgProblem make_lq_problem(const LqConfig& config);

// Saturating-drift instance: drift k tanh(a) (non-separated), running cost
// c a^2, terminal (x - mean)^2. Single period only.
struct TanhConfig {
  double c = 3.0;
  double drift_scale = 1.0;  // k
  double sigma = 0.5;
  double xi_mean = 0.0;
  double xi_std = 1.0;
  double horizon = 1.0;
  double action_lo = -50.0;
  double action_hi = 50.0;
  NoiseKind noise = NoiseKind::gaussian;
};
MfgProblem make_tanh_problem(const TanhConfig& config);

// Polynomial coefficient tables for custom scalar instances. The coupling and
// terminal costs are linear combinations of the listed terms; the drift
// offset is a polynomial in x plus a multiple of the mean.
struct PolyCost {
  double constant = 0.0;
  double x = 0.0;
  double x2 = 0.0;
  double x_mean = 0.0;        // x * mean(m)
  double mean = 0.0;          // mean(m)
  double mean2 = 0.0;         // mean(m)^2
  double centered2 = 0.0;     // (x - mean(m))^2
  double eval(double xv, double mv) const {
    const double d = xv - mv;
    return constant + x * xv + x2 * xv * xv + x_mean * xv * mv + mean * mv +
           mean2 * mv * mv + centered2 * d * d;
  }
  bool empty() const {
    return constant == 0.0 && x == 0.0 && x2 == 0.0 && x_mean == 0.0 &&
           mean == 0.0 && mean2 == 0.0 && centered2 == 0.0;
  }
};

struct PolyConfig {
  double control_cost = 1.0;          // running cost control_cost * a^2
  PolyCost coupling;                  // F(x, m)
  PolyCost terminal;                  // G(x, m)
  std::vector<double> drift_poly;     // b0(x, m) = sum_j drift_poly[j] x^j ...
  double drift_mean = 0.0;            //            + drift_mean * mean(m)
  double sigma = 0.5;
  double xi_mean = 0.0;
  double xi_std = 1.0;
  double horizon = 1.0;
  int periods = 1;
  double action_lo = -50.0;
  double action_hi = 50.0;
  NoiseKind noise = NoiseKind::gaussian;
};
MfgProblem make_poly_problem(const PolyConfig& config);

}  // namespace mfg
