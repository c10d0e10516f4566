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

#include "mfg/families.hpp"

#include <cmath>
#include <stdexcept>

namespace mfg {

MfgProblem make_lq_problem(const LqConfig& config) {
  if (config.c <= 0.0) throw std::invalid_argument("lq: c must be positive");
  if (config.c_l < 0.0) throw std::invalid_argument("lq: c_l must be nonnegative");
  if (config.sigma < 0.0) throw std::invalid_argument("lq: sigma must be nonnegative");
  if (config.xi_std < 0.0) throw std::invalid_argument("lq: xi_std must be nonnegative");
  MfgProblem p;
  p.dim = 1;
  p.horizon = config.horizon;
  p.periods = config.periods;
  p.noise.kind = config.noise;
  p.sigma = {config.sigma};
  p.action_lo = {config.action_lo};
  p.action_hi = {config.action_hi};
  const double c = config.c;
  const double cl = config.c_l;
  p.running_cost = [c](std::span<const double>, std::span<const double> a) {
    return c * a[0] * a[0];
  };
  if (cl != 0.0) {
    p.coupling_cost = [cl](std::span<const double> x, const EmpiricalMeasure& m) {
      const double d = x[0] - m.mean1();
      return cl * d * d;
    };
  }
  p.terminal_cost = [](std::span<const double> x, const EmpiricalMeasure& m) {
    const double d = x[0] - m.mean1();
    return d * d;
  };
  p.initial_sampler = gaussian_initial(config.xi_mean, config.xi_std);
  LqParams lq;
  lq.control_cost = config.c;
  lq.coupling_cost = config.c_l;
  lq.noise_var = config.sigma * config.sigma * (config.horizon / config.periods);
  lq.xi_mean = config.xi_mean;
  lq.xi_var = config.xi_std * config.xi_std;
  p.lq = lq;
  return p;
}

MfgProblem make_tanh_problem(const TanhConfig& config) {
  if (config.c <= 0.0) throw std::invalid_argument("tanh: c must be positive");
  if (config.drift_scale < 0.0) {
    throw std::invalid_argument("tanh: drift scale must be nonnegative");
  }
  MfgProblem p;
  p.dim = 1;
  p.horizon = config.horizon;
  p.periods = 1;
  p.noise.kind = config.noise;
  p.sigma = {config.sigma};
  p.action_lo = {config.action_lo};
  p.action_hi = {config.action_hi};
  const double c = config.c;
  const double scale = config.drift_scale;
  p.running_cost = [c](std::span<const double>, std::span<const double> a) {
    return c * a[0] * a[0];
  };
  p.terminal_cost = [](std::span<const double> x, const EmpiricalMeasure& m) {
    const double d = x[0] - m.mean1();
    return d * d;
  };
  p.drift_general = [scale](std::span<const double>, std::span<const double> a,
                            const EmpiricalMeasure&, std::span<double> out) {
    out[0] = scale * std::tanh(a[0]);
  };
  p.initial_sampler = gaussian_initial(config.xi_mean, config.xi_std);
  return p;
}

MfgProblem make_poly_problem(const PolyConfig& config) {
  if (config.control_cost <= 0.0) {
    throw std::invalid_argument("poly: control cost must be positive");
  }
  MfgProblem p;
  p.dim = 1;
  p.horizon = config.horizon;
  p.periods = config.periods;
  p.noise.kind = config.noise;
  p.sigma = {config.sigma};
  p.action_lo = {config.action_lo};
  p.action_hi = {config.action_hi};
  const double c = config.control_cost;
  p.running_cost = [c](std::span<const double>, std::span<const double> a) {
    return c * a[0] * a[0];
  };
  if (!config.coupling.empty()) {
    const PolyCost f = config.coupling;
    p.coupling_cost = [f](std::span<const double> x, const EmpiricalMeasure& m) {
      return f.eval(x[0], m.mean1());
    };
  }
  const PolyCost g = config.terminal;
  p.terminal_cost = [g](std::span<const double> x, const EmpiricalMeasure& m) {
    return g.eval(x[0], m.mean1());
  };
  if (!config.drift_poly.empty() || config.drift_mean != 0.0) {
    const std::vector<double> poly = config.drift_poly;
    const double dm = config.drift_mean;
    p.drift_b0 = [poly, dm](std::span<const double> x, const EmpiricalMeasure& m,
                            std::span<double> out) {
      double v = 0.0;
      double xp = 1.0;
      for (double coef : poly) {
        v += coef * xp;
        xp *= x[0];
      }
      out[0] = v + dm * m.mean1();
    };
  }
  p.initial_sampler = gaussian_initial(config.xi_mean, config.xi_std);
  return p;
}

}  // namespace mfg
