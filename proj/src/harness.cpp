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

#include "mfg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfg/bsde.hpp"
#include "mfg/parallel.hpp"

namespace mfg {
namespace {

MfgProblem with_periods(const MfgProblem& problem, int periods) {
  MfgProblem out = problem;
  out.periods = periods;
  if (out.lq.has_value()) {
    out.lq->noise_var = out.sigma_scalar() * out.sigma_scalar() *
                        (out.horizon / static_cast<double>(periods));
  }
  return out;
}

struct GapAccumulator {
  double control_sq_dt = 0.0;  // sum over grid of |da|^2 * dt_fine
  double state_sup_sq = 0.0;   // sup over grid of |dX|^2
};

}  // namespace

double fit_rate(std::span<const double> ks, std::span<const double> gaps) {
  if (ks.size() != gaps.size()) {
    throw std::invalid_argument("fit_rate: ks and gaps must have equal length");
  }
  if (ks.size() < 3) {
    throw std::invalid_argument("fit_rate: need at least 3 points");
  }
  std::vector<double> lx(ks.size());
  std::vector<double> ly(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!(ks[i] > 0.0) || !(gaps[i] > 0.0)) {
      throw std::invalid_argument(
          "fit_rate: ks and gaps must be strictly positive");
    }
    lx[i] = std::log(ks[i]);
    ly[i] = std::log(gaps[i]);
  }
  const double mx = pairwise_sum(lx) / static_cast<double>(lx.size());
  const double my = pairwise_sum(ly) / static_cast<double>(ly.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) {
    throw std::invalid_argument("fit_rate: ks must not be all equal");
  }
  return sxy / sxx;
}

SweepResult donsker_sweep(const MfgProblem& problem, std::span<const int> ks,
                          int k_ref, const SolverOptions& opts) {
  if (ks.empty()) throw std::invalid_argument("donsker_sweep: empty k list");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1) throw std::invalid_argument("donsker_sweep: k must be >= 1");
    if (i > 0 && ks[i] <= ks[i - 1]) {
      throw std::invalid_argument("donsker_sweep: ks must be strictly increasing");
    }
    if (k_ref % ks[i] != 0) {
      throw std::invalid_argument(
          "donsker_sweep: every k must divide k_ref (nested grids)");
    }
  }
  if (k_ref < 8 * ks.back()) {
    throw std::invalid_argument("donsker_sweep: k_ref must be >= 8 * max(ks)");
  }
  if (problem.dim != 1) {
    throw std::invalid_argument("donsker_sweep: only scalar states are supported");
  }

  const MfgProblem ref_problem = with_periods(problem, k_ref);
  const PathBundle fine = sample_paths(ref_problem, opts.n_paths, opts.seed);
  const int n = fine.n_paths;
  const double dt_fine = fine.dt;
  const double sigma = problem.sigma_scalar();

  const MultiPeriodSolution ref = solve_mfg_bsde(ref_problem, opts, &fine);
  if (!ref.report.converged) {
    throw std::runtime_error("donsker_sweep: reference solve did not converge");
  }
  const Trajectories ref_traj = simulate_state(ref_problem, ref.policy, ref.flow, fine);

  // Reference control along its own trajectory, per path and reference step.
  std::vector<double> ref_action(static_cast<std::size_t>(n) *
                                 static_cast<std::size_t>(k_ref));
  parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end,
                                                   std::size_t) {
    for (std::size_t p = begin; p < end; ++p) {
      for (int j = 0; j < k_ref; ++j) {
        ref_action[p * static_cast<std::size_t>(k_ref) + static_cast<std::size_t>(j)] =
            ref.policy.eval(static_cast<std::size_t>(j),
                            ref_traj.at1(static_cast<int>(p), j));
      }
    }
  });

  SweepResult result;
  result.k_ref = k_ref;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t li = 0; li < ks.size(); ++li) {
    const int k = ks[li];
    const int ratio = k_ref / k;
    const MfgProblem coarse_problem = with_periods(problem, k);
    const PathBundle coarse = coarsen_paths(fine, k);

    result.ks.push_back(k);
    MultiPeriodSolution sol;
    try {
      sol = solve_mfg_bsde(coarse_problem, opts, &coarse);
    } catch (const std::exception&) {
      sol.report.converged = false;
    }
    result.converged.push_back(sol.report.converged ? 1 : 0);
    result.iterations.push_back(sol.report.iterations);
    if (!sol.report.converged) {
      result.flow_gaps.push_back(nan);
      result.control_gaps.push_back(nan);
      result.control_gap_stderr.push_back(nan);
      result.state_gaps.push_back(nan);
      result.state_gap_stderr.push_back(nan);
      continue;
    }

    const Trajectories traj = simulate_state(coarse_problem, sol.policy, sol.flow, coarse);

    // Pathwise gaps on the reference grid, with the coarse drift frozen over
    // each coarse period and the shared noise refilled at fine resolution.
    std::vector<double> control_per_path(static_cast<std::size_t>(n));
    std::vector<double> state_per_path(static_cast<std::size_t>(n));
    parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end,
                                                     std::size_t) {
      for (std::size_t ps = begin; ps < end; ++ps) {
        const int p = static_cast<int>(ps);
        GapAccumulator acc;
        for (int i = 0; i < k; ++i) {
          const double xk = traj.at1(p, i);
          const double a_k = sol.policy.eval(static_cast<std::size_t>(i), xk);
          double b0 = 0.0;
          if (problem.drift_b0) {
            problem.drift_b0(std::span<const double>(&xk, 1),
                             sol.flow.measures[static_cast<std::size_t>(i)],
                             std::span<double>(&b0, 1));
          }
          const double drift = a_k + b0;
          double noise_acc = 0.0;
          for (int q = 0; q < ratio; ++q) {
            const int j = i * ratio + q;
            const double da =
                a_k - ref_action[ps * static_cast<std::size_t>(k_ref) +
                                 static_cast<std::size_t>(j)];
            acc.control_sq_dt += da * da * dt_fine;
            noise_acc += fine.increment1(p, j);
            const double xhat = xk + drift * dt_fine * (q + 1) + sigma * noise_acc;
            const double dx = xhat - ref_traj.at1(p, j + 1);
            acc.state_sup_sq = std::max(acc.state_sup_sq, dx * dx);
          }
        }
        control_per_path[ps] = acc.control_sq_dt;
        state_per_path[ps] = acc.state_sup_sq;
      }
    });
    const MeanStderr cg = mean_and_stderr(control_per_path);
    const MeanStderr sg = mean_and_stderr(state_per_path);
    result.control_gaps.push_back(cg.mean);
    result.control_gap_stderr.push_back(cg.stderr_mean);
    result.state_gaps.push_back(sg.mean);
    result.state_gap_stderr.push_back(sg.stderr_mean);

    double flow_gap = 0.0;
    for (int j = 1; j <= k_ref; ++j) {
      // Piecewise-constant interpolation: on [t_i, t_{i+1}) the coarse flow
      // holds measure i; at T both flows hold their terminal measure.
      const int coarse_idx = (j == k_ref) ? k : j / ratio;
      const double w2 =
          wasserstein(sol.flow.measures[static_cast<std::size_t>(coarse_idx)],
                      ref.flow.measures[static_cast<std::size_t>(j)], 2.0);
      flow_gap = std::max(flow_gap, w2);
    }
    result.flow_gaps.push_back(flow_gap);
  }

  const auto fit_or_nan = [&](const std::vector<double>& gaps) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      if (result.converged[i] != 0 && std::isfinite(gaps[i]) && gaps[i] > 0.0) {
        xs.push_back(static_cast<double>(result.ks[i]));
        ys.push_back(gaps[i]);
      }
    }
    if (xs.size() < 3) return nan;
    return fit_rate(xs, ys);
  };
  result.control_slope = fit_or_nan(result.control_gaps);
  result.state_slope = fit_or_nan(result.state_gaps);
  result.flow_slope = fit_or_nan(result.flow_gaps);
  return result;
}

}  // namespace mfg
