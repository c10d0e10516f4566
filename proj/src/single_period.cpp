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

#include "mfg/single_period.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "internal.hpp"
#include "mfg/parallel.hpp"

namespace mfg {
namespace internal {

double brent_minimize(const std::function<double(double)>& f, double lo,
                      double hi, double tol) {
  if (lo > hi) throw std::invalid_argument("brent: empty interval");
  if (lo == hi) return lo;
  constexpr double kGolden = 0.3819660112501051;
  constexpr double kEps = 1e-12;
  double a = lo, b = hi;
  double x = a + kGolden * (b - a);
  double w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double m = 0.5 * (a + b);
    const double tol1 = kEps * std::fabs(x) + tol / 3.0;
    const double tol2 = 2.0 * tol1;
    if (std::fabs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool parabolic = false;
    if (std::fabs(e) > tol1) {
      // Parabola through (v, fv), (w, fw), (x, fx).
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::fabs(q);
      const double e_old = e;
      e = d;
      if (std::fabs(p) < std::fabs(0.5 * q * e_old) && p > q * (a - x) &&
          p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (x < m) ? tol1 : -tol1;
        parabolic = true;
      }
    }
    if (!parabolic) {
      e = (x < m) ? b - x : a - x;
      d = kGolden * e;
    }
    const double u = (std::fabs(d) >= tol1) ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  // Prefer an endpoint if it does at least as well: box minima often sit on
  // the boundary, where the interior iteration cannot land exactly.
  const double flo = f(lo), fhi = f(hi);
  if (flo <= fx && flo <= fhi) return lo;
  if (fhi <= fx) return hi;
  return x;
}

QuadratureRule select_quadrature(const MfgProblem& problem,
                                 const SolverOptions& opts) {
  const double eff_std = problem.sigma_scalar() * std::sqrt(problem.dt());
  switch (opts.quadrature) {
    case QuadratureKind::gauss_hermite:
      return gauss_hermite_rule(opts.gh_nodes, eff_std);
    case QuadratureKind::common_random:
      return common_random_rule(problem.noise.kind, eff_std, opts.crn_draws,
                                opts.seed);
    case QuadratureKind::auto_select:
      break;
  }
  switch (problem.noise.kind) {
    case NoiseKind::gaussian:
      return gauss_hermite_rule(opts.gh_nodes, eff_std);
    case NoiseKind::rademacher:
    case NoiseKind::zero:
      return exact_discrete_rule(problem.noise.kind, eff_std);
  }
  throw std::logic_error("unreachable");
}

double BestResponseObjective::operator()(double x, double a) const {
  const double dt = problem.dt();
  const std::span<const double> xs(&x, 1);
  const std::span<const double> as(&a, 1);
  double drift = 0.0;
  if (problem.drift_general) {
    problem.drift_general(xs, as, mu, std::span<double>(&drift, 1));
  } else {
    drift = a;
    if (problem.drift_b0) {
      double b0 = 0.0;
      problem.drift_b0(xs, mu, std::span<double>(&b0, 1));
      drift += b0;
    }
  }
  double running = problem.running_cost(xs, as);
  if (problem.coupling_cost) running += problem.coupling_cost(xs, mu);
  const double base = x + drift * dt;
  double expect = 0.0;
  for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
    const double xn = base + quad.nodes[q];
    expect += quad.weights[q] * terminal(std::span<const double>(&xn, 1), m);
  }
  return running * dt + expect;
}

double BestResponseObjective::minimize(double x, double tol) const {
  return brent_minimize([&](double a) { return (*this)(x, a); },
                        problem.action_lo[0], problem.action_hi[0], tol);
}

std::vector<double> quantile_knots(std::span<const double> sorted_values,
                                   int count) {
  const std::size_t n = sorted_values.size();
  if (n == 0) throw std::invalid_argument("knots: empty sample");
  const std::size_t want = static_cast<std::size_t>(std::max(count, 2));
  std::vector<double> knots;
  knots.reserve(want);
  if (n <= want) {
    knots.assign(sorted_values.begin(), sorted_values.end());
  } else {
    for (std::size_t j = 0; j < want; ++j) {
      const std::size_t idx = (j * (n - 1)) / (want - 1);
      knots.push_back(sorted_values[idx]);
    }
  }
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  return knots;
}

FeedbackPolicy fit_best_response_policy(const MfgProblem& problem,
                                        const EmpiricalMeasure& mu,
                                        const EmpiricalMeasure& m,
                                        const MeasureFn& terminal,
                                        const QuadratureRule& quad,
                                        const SolverOptions& opts) {
  if (problem.dim != 1) {
    throw std::invalid_argument("policy fit: requires dim == 1");
  }
  std::vector<double> xs = quantile_knots(mu.sorted_values(), opts.policy_knots);
  std::vector<double> as(xs.size());
  const BestResponseObjective obj{problem, mu, m, terminal, quad};
  parallel_blocks(xs.size(), [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      as[i] = obj.minimize(xs[i], opts.tol_action);
    }
  });
  std::vector<FeedbackPolicy::Stage> stages;
  stages.emplace_back(LinearInterpolant(std::move(xs), std::move(as)));
  return FeedbackPolicy(std::move(stages), problem.action_lo, problem.action_hi);
}

std::vector<double> push_forward_states(const MfgProblem& problem,
                                        const FeedbackPolicy& policy,
                                        const EmpiricalMeasure& mu,
                                        const PathBundle& paths) {
  const double dt = problem.dt();
  const double sigma = problem.sigma_scalar();
  std::vector<double> out(static_cast<std::size_t>(paths.n_paths));
  parallel_blocks(static_cast<std::size_t>(paths.n_paths),
                  [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t p = begin; p < end; ++p) {
      const double x = paths.initial1(static_cast<int>(p));
      const double a = policy.eval(0, x);
      double drift = 0.0;
      const std::span<const double> xs(&x, 1);
      const std::span<const double> as(&a, 1);
      if (problem.drift_general) {
        problem.drift_general(xs, as, mu, std::span<double>(&drift, 1));
      } else {
        drift = a;
        if (problem.drift_b0) {
          double b0 = 0.0;
          problem.drift_b0(xs, mu, std::span<double>(&b0, 1));
          drift += b0;
        }
      }
      out[p] = x + drift * dt + sigma * paths.increment1(static_cast<int>(p), 0);
    }
  });
  return out;
}

std::vector<double> single_period_path_costs(const MfgProblem& problem,
                                             const FeedbackPolicy& policy,
                                             const EmpiricalMeasure& mu,
                                             const EmpiricalMeasure& m,
                                             const MeasureFn& terminal,
                                             const PathBundle& paths) {
  const double dt = problem.dt();
  const std::vector<double> next =
      push_forward_states(problem, policy, mu, paths);
  std::vector<double> costs(static_cast<std::size_t>(paths.n_paths));
  parallel_blocks(static_cast<std::size_t>(paths.n_paths),
                  [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t p = begin; p < end; ++p) {
      const double x = paths.initial1(static_cast<int>(p));
      const double a = policy.eval(0, x);
      const std::span<const double> xs(&x, 1);
      const std::span<const double> as(&a, 1);
      double running = problem.running_cost(xs, as);
      if (problem.coupling_cost) running += problem.coupling_cost(xs, mu);
      costs[p] = running * dt +
                 terminal(std::span<const double>(&next[p], 1), m);
    }
  });
  return costs;
}

double w1_equal_clouds(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  return wasserstein(a, b, 1.0);
}

MfgProblem stage_problem(const MfgProblem& problem) {
  MfgProblem stage = problem;
  stage.horizon = problem.dt();
  stage.periods = 1;
  return stage;
}

}  // namespace internal

namespace {

// Projected gradient descent with restarts for multi-dimensional actions.
double pgd_best_response(std::span<const double> x, const EmpiricalMeasure& mu,
                         const EmpiricalMeasure& m, const MeasureFn& terminal,
                         const MfgProblem& problem, const SolverOptions& opts,
                         std::vector<double>* a_out) {
  const int d = problem.dim;
  const double dt = problem.dt();
  const QuadratureRule quad = internal::select_quadrature(problem, opts);
  auto objective = [&](std::span<const double> a) {
    std::vector<double> drift(static_cast<std::size_t>(d), 0.0);
    if (problem.drift_general) {
      problem.drift_general(x, a, mu, drift);
    } else {
      for (int c = 0; c < d; ++c) drift[static_cast<std::size_t>(c)] = a[static_cast<std::size_t>(c)];
      if (problem.drift_b0) {
        std::vector<double> b0(static_cast<std::size_t>(d), 0.0);
        problem.drift_b0(x, mu, b0);
        for (int c = 0; c < d; ++c) drift[static_cast<std::size_t>(c)] += b0[static_cast<std::size_t>(c)];
      }
    }
    double running = problem.running_cost(x, a);
    if (problem.coupling_cost) running += problem.coupling_cost(x, mu);
    // Apply the same scalar quadrature rule independently per coordinate.
    double expect = 0.0;
    std::vector<double> xn(static_cast<std::size_t>(d));
    for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
      for (int c = 0; c < d; ++c) {
        xn[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)] +
                                          drift[static_cast<std::size_t>(c)] * dt +
                                          quad.nodes[q];
      }
      expect += quad.weights[q] * terminal(xn, m);
    }
    return running * dt + expect;
  };

  std::vector<double> best_a(static_cast<std::size_t>(d));
  double best_f = std::numeric_limits<double>::infinity();
  std::vector<double> a(static_cast<std::size_t>(d));
  std::vector<double> grad(static_cast<std::size_t>(d));
  std::vector<double> trial(static_cast<std::size_t>(d));
  PathRng rng = make_rng(opts.seed, 0, RngStream::kScenario);
  for (int restart = 0; restart < 20; ++restart) {
    for (int c = 0; c < d; ++c) {
      const double lo = problem.action_lo[static_cast<std::size_t>(c)];
      const double hi = problem.action_hi[static_cast<std::size_t>(c)];
      a[static_cast<std::size_t>(c)] =
          restart == 0 ? 0.5 * (lo + hi) : lo + (hi - lo) * rng.uniform();
    }
    double fa = objective(a);
    double step = 1.0;
    for (int iter = 0; iter < 200; ++iter) {
      const double h = 1e-6;
      for (int c = 0; c < d; ++c) {
        const double saved = a[static_cast<std::size_t>(c)];
        a[static_cast<std::size_t>(c)] = saved + h;
        const double fp = objective(a);
        a[static_cast<std::size_t>(c)] = saved - h;
        const double fm = objective(a);
        a[static_cast<std::size_t>(c)] = saved;
        grad[static_cast<std::size_t>(c)] = (fp - fm) / (2.0 * h);
      }
      bool improved = false;
      while (step > 1e-12) {
        for (int c = 0; c < d; ++c) {
          trial[static_cast<std::size_t>(c)] = std::clamp(
              a[static_cast<std::size_t>(c)] - step * grad[static_cast<std::size_t>(c)],
              problem.action_lo[static_cast<std::size_t>(c)],
              problem.action_hi[static_cast<std::size_t>(c)]);
        }
        const double ft = objective(trial);
        if (ft < fa - 1e-15) {
          a = trial;
          fa = ft;
          improved = true;
          step *= 1.5;
          break;
        }
        step *= 0.5;
      }
      if (!improved || step <= opts.tol_action) break;
    }
    if (fa < best_f) {
      best_f = fa;
      best_a = a;
    }
  }
  if (a_out != nullptr) *a_out = best_a;
  return best_a[0];
}

}  // namespace

double best_response_pointwise(double x, const EmpiricalMeasure& mu,
                               const EmpiricalMeasure& m,
                               const MeasureFn& terminal,
                               const MfgProblem& problem,
                               const SolverOptions& opts) {
  problem.validate();
  if (problem.dim != 1) {
    return pgd_best_response(std::span<const double>(&x, 1), mu, m, terminal,
                             problem, opts, nullptr);
  }
  const QuadratureRule quad = internal::select_quadrature(problem, opts);
  const internal::BestResponseObjective obj{problem, mu, m, terminal, quad};
  return obj.minimize(x, opts.tol_action);
}

SinglePeriodSolution solve_single_period(const MfgProblem& problem,
                                         const MeasureFn& terminal,
                                         const SolverOptions& opts,
                                         const PathBundle& paths) {
  problem.validate();
  if (problem.periods != 1) {
    throw std::invalid_argument("solve_single_period: problem must have one period");
  }
  if (problem.dim != 1) {
    throw std::invalid_argument("solve_single_period: requires dim == 1");
  }
  if (paths.steps != 1 || paths.n_paths <= 0) {
    throw std::invalid_argument("solve_single_period: need a one-step bundle");
  }
  if (opts.damping <= 0.0 || opts.damping > 1.0) {
    throw std::invalid_argument("solve_single_period: damping outside (0, 1]");
  }
  if (opts.max_iters < 1) {
    throw std::invalid_argument("solve_single_period: max_iters must be >= 1");
  }
  const EmpiricalMeasure mu = paths.initial_measure();
  const QuadratureRule quad = internal::select_quadrature(problem, opts);

  // First iterate: explicit override or the uncontrolled push-forward.
  EmpiricalMeasure iterate = [&] {
    if (opts.initial_measure.has_value()) {
      const EmpiricalMeasure& m0 = *opts.initial_measure;
      if (m0.dim() != 1) {
        throw std::invalid_argument("solve_single_period: m0 must be scalar");
      }
      return m0;
    }
    FeedbackPolicy zero = FeedbackPolicy::constant(
        1, std::clamp(0.0, problem.action_lo[0], problem.action_hi[0]),
        problem.action_lo[0], problem.action_hi[0]);
    return EmpiricalMeasure::equal(
        internal::push_forward_states(problem, zero, mu, paths), 1);
  }();

  const double tol = opts.tol_fixed_point.has_value()
                         ? *opts.tol_fixed_point
                         : 1e-3 * (1.0 + iterate.abs_moment(1.0));

  EquilibriumReport report;
  report.tolerance = tol;
  FeedbackPolicy policy;
  std::optional<EmpiricalMeasure> pushed;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (iterate.abs_moment(opts.moment_p) > opts.moment_cap) {
      throw std::runtime_error(
          "solve_single_period: iterate moment exceeds the a-priori cap; "
          "fixed-point iteration is diverging");
    }
    policy = internal::fit_best_response_policy(problem, mu, iterate, terminal,
                                                quad, opts);
    pushed = EmpiricalMeasure::equal(
        internal::push_forward_states(problem, policy, mu, paths), 1);
    if (pushed->abs_moment(opts.moment_p) > opts.moment_cap) {
      throw std::runtime_error(
          "solve_single_period: push-forward moment exceeds the a-priori cap; "
          "fixed-point iteration is diverging");
    }
    const double residual = internal::w1_equal_clouds(iterate, *pushed);
    report.residual_history.push_back(residual);
    report.iterations = iter + 1;
    report.residual = residual;
    if (residual < tol) {
      report.converged = true;
      break;
    }
    iterate = quantile_mix(iterate, *pushed, opts.damping);
  }

  SinglePeriodSolution solution{std::move(policy), std::move(*pushed),
                                std::move(report)};
  if (opts.estimate_exploitability) {
    double se = 0.0;
    solution.report.exploitability =
        exploitability(problem, solution.policy, solution.measure, terminal,
                       paths, opts, &se);
    solution.report.exploitability_stderr = se;
  }
  return solution;
}

double exploitability(const MfgProblem& problem, const FeedbackPolicy& policy,
                      const EmpiricalMeasure& m, const MeasureFn& terminal,
                      const PathBundle& paths, const SolverOptions& opts,
                      double* stderr_out) {
  problem.validate();
  if (problem.dim != 1) {
    throw std::invalid_argument("exploitability: requires dim == 1");
  }
  const EmpiricalMeasure mu = paths.initial_measure();
  const QuadratureRule quad = internal::select_quadrature(problem, opts);
  const FeedbackPolicy best = internal::fit_best_response_policy(
      problem, mu, m, terminal, quad, opts);
  const std::vector<double> cost_policy = internal::single_period_path_costs(
      problem, policy, mu, m, terminal, paths);
  const std::vector<double> cost_best = internal::single_period_path_costs(
      problem, best, mu, m, terminal, paths);
  std::vector<double> diff(cost_policy.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = cost_policy[i] - cost_best[i];
  }
  const MeanStderr ms = mean_and_stderr(diff);
  if (stderr_out != nullptr) *stderr_out = ms.stderr_mean;
  return ms.mean;
}

}  // namespace mfg
