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

#include "mfg/bsde.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "internal.hpp"
#include "mfg/interp.hpp"
#include "mfg/parallel.hpp"

namespace mfg {
namespace {

constexpr int kHamiltonianKnots = 513;

std::size_t idx2(int path, int step, int cols) {
  return static_cast<std::size_t>(path) * static_cast<std::size_t>(cols) +
         static_cast<std::size_t>(step);
}

// Uncontrolled state paths Y_{i+1} = Y_i + b0(Y_i, m_i) dt + sigma dZ,
// flattened n_paths x (steps+1).
std::vector<double> simulate_uncontrolled(const MfgProblem& problem,
                                          const MeasureFlow& flow,
                                          const PathBundle& paths) {
  const int n = paths.n_paths;
  const int k = paths.steps;
  const double dt = paths.dt;
  const double sigma = problem.sigma_scalar();
  std::vector<double> states(static_cast<std::size_t>(n) *
                             (static_cast<std::size_t>(k) + 1));
  for (int p = 0; p < n; ++p) states[idx2(p, 0, k + 1)] = paths.initial1(p);
  for (int i = 0; i < k; ++i) {
    const EmpiricalMeasure& m = flow.measures[static_cast<std::size_t>(i)];
    parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin,
                                                     std::size_t end,
                                                     std::size_t) {
      for (std::size_t p = begin; p < end; ++p) {
        const int pi = static_cast<int>(p);
        const double y = states[idx2(pi, i, k + 1)];
        double b0 = 0.0;
        if (problem.drift_b0) {
          problem.drift_b0(std::span<const double>(&y, 1), m,
                           std::span<double>(&b0, 1));
        }
        const double next = y + b0 * dt + sigma * paths.increment1(pi, i);
        if (!std::isfinite(next)) {
          throw std::runtime_error(
              "solve_bsde: non-finite uncontrolled state encountered");
        }
        states[idx2(pi, i + 1, k + 1)] = next;
      }
    });
  }
  return states;
}

// Fixed-order (block-wise then pairwise) reduction of per-block partials so
// the result does not depend on the worker count.
std::vector<double> combine_partials(const std::vector<std::vector<double>>& parts,
                                     std::size_t width) {
  std::vector<double> out(width, 0.0);
  std::vector<double> lane(parts.size());
  for (std::size_t e = 0; e < width; ++e) {
    for (std::size_t b = 0; b < parts.size(); ++b) lane[b] = parts[b][e];
    out[e] = pairwise_sum(lane);
  }
  return out;
}

struct Basis {
  double mean = 0.0;
  double scale = 1.0;
  int degree = 3;
  int bumps = 2;
  bool degenerate = false;  // constant state: conditional mean == plain mean

  int size() const { return degenerate ? 1 : degree + 1 + bumps; }

  void features(double y, double* out) const {
    if (degenerate) {
      out[0] = 1.0;
      return;
    }
    const double s = (y - mean) / scale;
    out[0] = 1.0;
    double pw = 1.0;
    for (int d = 1; d <= degree; ++d) {
      pw *= s;
      out[d] = pw;
    }
    if (bumps >= 1) out[degree + 1] = std::exp(-0.5 * (s - 1.0) * (s - 1.0));
    if (bumps >= 2) out[degree + 2] = std::exp(-0.5 * (s + 1.0) * (s + 1.0));
  }
};

struct Fit {
  Basis basis;
  std::vector<double> coef;

  double operator()(double y) const {
    double buf[16];
    basis.features(y, buf);
    double acc = 0.0;
    for (int j = 0; j < basis.size(); ++j) acc += coef[static_cast<std::size_t>(j)] * buf[j];
    return acc;
  }
};

Basis make_basis(std::span<const double> states, int stride, int col, int n,
                 int degree, int bumps) {
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) vals[static_cast<std::size_t>(p)] = states[idx2(p, col, stride)];
  const double mean = pairwise_sum(vals) / n;
  std::vector<double> sq(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    const double d = vals[static_cast<std::size_t>(p)] - mean;
    sq[static_cast<std::size_t>(p)] = d * d;
  }
  const double var = pairwise_sum(sq) / n;
  Basis b;
  b.mean = mean;
  b.degree = degree;
  b.bumps = bumps;
  const double sd = std::sqrt(std::max(var, 0.0));
  if (sd < 1e-12 * (1.0 + std::abs(mean))) {
    b.degenerate = true;
    b.scale = 1.0;
  } else {
    b.scale = sd;
  }
  return b;
}

// Least-squares fits of the conditional mean of y and of the conditional
// covariation z = E[y dZ | state] / dt against one shared Gram matrix. The z
// target is centered by the fitted conditional mean, (y - yhat(state)) dZ/dt,
// which has the same conditional expectation (E[yhat dZ | state] = 0) but a
// per-sample variance smaller by O(1/dt); without this control variate the z
// fit drowns in simulation noise and the -z^2 term of the optimized driver
// compounds the error backward through the sweep.
struct TwoFits {
  Fit first;   // conditional mean of y
  Fit second;  // z curve
  bool rank_warning = false;
};

TwoFits fit_two(const Basis& basis, std::span<const double> states, int stride,
                int col, int n, std::span<const double> y_target,
                const PathBundle& paths, int step, double dt, double ridge) {
  const int nb = basis.size();
  const std::size_t nbs = static_cast<std::size_t>(nb);
  const std::size_t blocks =
      (static_cast<std::size_t>(n) + parallel_block_size() - 1) / parallel_block_size();
  const std::size_t width = nbs * nbs + nbs;
  // Both fits regress the target with its mean removed and add the mean back
  // to the constant coefficient afterwards, so the ridge penalty never
  // shrinks the intercept: a constant target is reproduced exactly instead
  // of being biased by O(ridge / gram eigenvalue).
  const double ybar = pairwise_sum(y_target) / n;
  std::vector<std::vector<double>> parts(std::max<std::size_t>(blocks, 1),
                                         std::vector<double>(width, 0.0));
  parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end,
                                                   std::size_t block) {
    std::vector<double>& part = parts[block];
    double phi[16];
    for (std::size_t p = begin; p < end; ++p) {
      basis.features(states[idx2(static_cast<int>(p), col, stride)], phi);
      for (std::size_t a = 0; a < nbs; ++a) {
        for (std::size_t b = a; b < nbs; ++b) part[a * nbs + b] += phi[a] * phi[b];
        part[nbs * nbs + a] += phi[a] * (y_target[p] - ybar);
      }
    }
  });
  const std::vector<double> sums = combine_partials(parts, width);

  Eigen::MatrixXd gram(nb, nb);
  for (int a = 0; a < nb; ++a) {
    for (int b = a; b < nb; ++b) {
      const double v = sums[static_cast<std::size_t>(a) * nbs + static_cast<std::size_t>(b)] / n;
      gram(a, b) = v;
      gram(b, a) = v;
    }
  }
  Eigen::VectorXd rhs1(nb);
  for (int a = 0; a < nb; ++a) {
    rhs1(a) = sums[nbs * nbs + static_cast<std::size_t>(a)] / n;
  }

  TwoFits out;
  out.first.basis = basis;
  out.second.basis = basis;
  double lambda = ridge;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd reg = gram;
    for (int a = 0; a < nb; ++a) reg(a, a) += lambda;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(reg);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const Eigen::VectorXd c1 = ldlt.solve(rhs1);
      if (c1.allFinite()) {
        out.first.coef.assign(c1.data(), c1.data() + nb);
        out.first.coef[0] += ybar;
        // Second pass: centered z target against the same Gram factor.
        std::vector<double> ztarget(static_cast<std::size_t>(n));
        parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin,
                                                         std::size_t end,
                                                         std::size_t) {
          for (std::size_t p = begin; p < end; ++p) {
            const double x = states[idx2(static_cast<int>(p), col, stride)];
            ztarget[p] = (y_target[p] - out.first(x)) *
                         paths.increment1(static_cast<int>(p), step) / dt;
          }
        });
        const double zbar = pairwise_sum(ztarget) / n;
        std::vector<std::vector<double>> zparts(
            std::max<std::size_t>(blocks, 1), std::vector<double>(nbs, 0.0));
        parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin,
                                                         std::size_t end,
                                                         std::size_t block) {
          std::vector<double>& part = zparts[block];
          double phi[16];
          for (std::size_t p = begin; p < end; ++p) {
            const double x = states[idx2(static_cast<int>(p), col, stride)];
            basis.features(x, phi);
            for (std::size_t a = 0; a < nbs; ++a) {
              part[a] += phi[a] * (ztarget[p] - zbar);
            }
          }
        });
        const std::vector<double> zsums = combine_partials(zparts, nbs);
        Eigen::VectorXd rhs2(nb);
        for (int a = 0; a < nb; ++a) {
          rhs2(a) = zsums[static_cast<std::size_t>(a)] / n;
        }
        const Eigen::VectorXd c2 = ldlt.solve(rhs2);
        if (c2.allFinite()) {
          out.second.coef.assign(c2.data(), c2.data() + nb);
          out.second.coef[0] += zbar;
          return out;
        }
      }
    }
    if (attempt >= 2) {
      throw std::runtime_error(
          "solve_bsde: conditional-expectation regression is singular");
    }
    lambda *= 1e3;
    out.rank_warning = true;
  }
}

// Exact conditional expectations on enumerated two-point noise trees: paths
// sharing the sign prefix of their first `step` increments share the
// conditioning node.
struct TreeGroups {
  std::vector<double> mean1;  // per path
  std::vector<double> mean2;
};

TreeGroups tree_condition(const PathBundle& paths, int step,
                          std::span<const double> target1,
                          std::span<const double> target2) {
  const int n = paths.n_paths;
  struct Acc {
    double s1 = 0.0;
    double s2 = 0.0;
    long count = 0;
  };
  std::vector<std::uint64_t> keys(static_cast<std::size_t>(n), 0);
  std::map<std::uint64_t, Acc> groups;
  for (int p = 0; p < n; ++p) {
    std::uint64_t key = 0;
    for (int j = 0; j < step; ++j) {
      key = (key << 1) | (paths.increment1(p, j) > 0.0 ? 1u : 0u);
    }
    keys[static_cast<std::size_t>(p)] = key;
    Acc& acc = groups[key];
    acc.s1 += target1[static_cast<std::size_t>(p)];
    acc.s2 += target2[static_cast<std::size_t>(p)];
    acc.count += 1;
  }
  TreeGroups out;
  out.mean1.resize(static_cast<std::size_t>(n));
  out.mean2.resize(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    const Acc& acc = groups[keys[static_cast<std::size_t>(p)]];
    out.mean1[static_cast<std::size_t>(p)] = acc.s1 / static_cast<double>(acc.count);
    out.mean2[static_cast<std::size_t>(p)] = acc.s2 / static_cast<double>(acc.count);
  }
  return out;
}

std::vector<double> uniform_knots(double lo, double hi, int count) {
  if (!(hi > lo)) return {lo};
  count = std::max(count, 2);
  std::vector<double> knots(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    knots[static_cast<std::size_t>(j)] =
        lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(count - 1);
  }
  return knots;
}

// Piecewise-linear curve through scattered (state, value) samples, averaging
// values that share a state (recombining tree nodes).
LinearInterpolant scatter_interp(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t i = 0;
  while (i < pts.size()) {
    std::size_t j = i;
    double acc = 0.0;
    while (j < pts.size() && pts[j].first - pts[i].first <= 1e-12 * (1.0 + std::abs(pts[i].first))) {
      acc += pts[j].second;
      ++j;
    }
    xs.push_back(pts[i].first);
    ys.push_back(acc / static_cast<double>(j - i));
    i = j;
  }
  return LinearInterpolant(std::move(xs), std::move(ys));
}

double pearson_abs_corr(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t blocks = (n + parallel_block_size() - 1) / parallel_block_size();
  std::vector<std::vector<double>> parts(std::max<std::size_t>(blocks, 1),
                                         std::vector<double>(5, 0.0));
  parallel_blocks(n, [&](std::size_t begin, std::size_t end, std::size_t block) {
    std::vector<double>& part = parts[block];
    for (std::size_t p = begin; p < end; ++p) {
      part[0] += a[p];
      part[1] += b[p];
      part[2] += a[p] * a[p];
      part[3] += b[p] * b[p];
      part[4] += a[p] * b[p];
    }
  });
  const std::vector<double> s = combine_partials(parts, 5);
  const double nn = static_cast<double>(n);
  const double cov = s[4] / nn - (s[0] / nn) * (s[1] / nn);
  const double va = s[2] / nn - (s[0] / nn) * (s[0] / nn);
  const double vb = s[3] / nn - (s[1] / nn) * (s[1] / nn);
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return std::abs(cov / std::sqrt(va * vb));
}

void validate_bsde_inputs(const MfgProblem& problem, const MeasureFlow& flow,
                          const PathBundle& paths, const SolverOptions& opts) {
  problem.validate();
  if (problem.dim != 1) {
    throw std::invalid_argument("solve_bsde: only scalar states are supported");
  }
  if (problem.drift_general) {
    throw std::invalid_argument(
        "solve_bsde: requires the separated drift a + b0(x, m)");
  }
  if (problem.sigma_scalar() <= 0.0) {
    throw std::invalid_argument("solve_bsde: sigma must be positive");
  }
  if (paths.steps < 1 || paths.n_paths < 1) {
    throw std::invalid_argument("solve_bsde: empty path bundle");
  }
  if (flow.measures.size() != static_cast<std::size_t>(paths.steps) + 1) {
    throw std::invalid_argument(
        "solve_bsde: flow must carry one measure per grid time");
  }
  if (std::abs(flow.horizon() / paths.steps - paths.dt) >
      1e-9 * (1.0 + paths.dt)) {
    throw std::invalid_argument("solve_bsde: flow grid does not match bundle dt");
  }
  if (opts.basis_degree < 1 || opts.basis_degree > 6) {
    throw std::invalid_argument("solve_bsde: basis_degree outside [1, 6]");
  }
  if (opts.basis_bumps < 0 || opts.basis_bumps > 2) {
    throw std::invalid_argument("solve_bsde: basis_bumps outside [0, 2]");
  }
  if (opts.conditioner == Conditioner::exact_tree) {
    if (problem.noise.kind != NoiseKind::rademacher) {
      throw std::invalid_argument(
          "solve_bsde: exact-tree conditioning needs two-point noise");
    }
    if (paths.steps > 62) {
      throw std::invalid_argument(
          "solve_bsde: exact-tree conditioning supports at most 62 steps");
    }
    double lo = paths.initial1(0);
    double hi = lo;
    for (int p = 1; p < paths.n_paths; ++p) {
      lo = std::min(lo, paths.initial1(p));
      hi = std::max(hi, paths.initial1(p));
    }
    if (hi - lo > 1e-12 * (1.0 + std::abs(lo))) {
      throw std::invalid_argument(
          "solve_bsde: exact-tree conditioning needs a common initial state");
    }
  }
}

// One backward sweep. When policy_stages is non-null, also extracts the
// per-step feedback map knots via the Hamiltonian minimizer.
BsdeSolution backward_sweep(const MfgProblem& problem, const MeasureFlow& flow,
                            const PathBundle& paths, const SolverOptions& opts,
                            BsdeStorage storage,
                            std::vector<FeedbackPolicy::Stage>* policy_stages) {
  validate_bsde_inputs(problem, flow, paths, opts);
  const int n = paths.n_paths;
  const int k = paths.steps;
  const double dt = paths.dt;
  const bool full = storage == BsdeStorage::full;
  const bool tree = opts.conditioner == Conditioner::exact_tree;

  BsdeSolution sol;
  sol.n_paths = n;
  sol.steps = k;
  sol.states = simulate_uncontrolled(problem, flow, paths);
  sol.orth_residual.assign(static_cast<std::size_t>(k), 0.0);
  sol.z_function.resize(static_cast<std::size_t>(k));
  if (full) {
    sol.y.assign(static_cast<std::size_t>(n) * (static_cast<std::size_t>(k) + 1), 0.0);
    sol.z.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(k), 0.0);
  }
  if (policy_stages != nullptr) {
    policy_stages->assign(static_cast<std::size_t>(k), LinearInterpolant({0.0}, {0.0}));
  }

  const EmpiricalMeasure& m_terminal = flow.measures[static_cast<std::size_t>(k)];
  std::vector<double> y_next(static_cast<std::size_t>(n));
  parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end,
                                                   std::size_t) {
    for (std::size_t p = begin; p < end; ++p) {
      const double y = sol.states[idx2(static_cast<int>(p), k, k + 1)];
      y_next[p] = problem.terminal_cost(std::span<const double>(&y, 1), m_terminal);
    }
  });
  if (full) {
    for (int p = 0; p < n; ++p) sol.y[idx2(p, k, k + 1)] = y_next[static_cast<std::size_t>(p)];
  }

  std::vector<double> y_curr(static_cast<std::size_t>(n));
  std::vector<double> z_target(static_cast<std::size_t>(n));
  std::vector<double> z_val(static_cast<std::size_t>(n));
  std::vector<double> cond_y(static_cast<std::size_t>(n));
  std::vector<double> residual(static_cast<std::size_t>(n));

  for (int i = k - 1; i >= 0; --i) {
    const EmpiricalMeasure& m_i = flow.measures[static_cast<std::size_t>(i)];
    double state_lo = sol.states[idx2(0, i, k + 1)];
    double state_hi = state_lo;
    for (int p = 1; p < n; ++p) {
      const double y = sol.states[idx2(p, i, k + 1)];
      state_lo = std::min(state_lo, y);
      state_hi = std::max(state_hi, y);
    }

    std::function<double(double)> z_curve;
    if (tree) {
      parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin,
                                                       std::size_t end,
                                                       std::size_t) {
        for (std::size_t p = begin; p < end; ++p) {
          z_target[p] = y_next[p] * paths.increment1(static_cast<int>(p), i) / dt;
        }
      });
      const TreeGroups groups = tree_condition(paths, i, y_next, z_target);
      cond_y = groups.mean1;
      z_val = groups.mean2;
      // Exact per-path Hamiltonian evaluation; tree bundles are small.
      parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin,
                                                       std::size_t end,
                                                       std::size_t) {
        for (std::size_t p = begin; p < end; ++p) {
          const double y = sol.states[idx2(static_cast<int>(p), i, k + 1)];
          const HamiltonianMin hm =
              minimize_hamiltonian(problem, y, m_i, z_val[p], opts.tol_action);
          y_curr[p] = cond_y[p] + dt * hm.value;
        }
      });
      std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(n));
      for (int p = 0; p < n; ++p) {
        pts[static_cast<std::size_t>(p)] = {sol.states[idx2(p, i, k + 1)],
                                            z_val[static_cast<std::size_t>(p)]};
      }
      const LinearInterpolant zi = scatter_interp(std::move(pts));
      z_curve = [zi](double y) { return zi(y); };
      sol.z_function[static_cast<std::size_t>(i)] = z_curve;
    } else {
      const Basis basis =
          make_basis(sol.states, k + 1, i, n, opts.basis_degree, opts.basis_bumps);
      const TwoFits fits = fit_two(basis, sol.states, k + 1, i, n, y_next,
                                   paths, i, dt, opts.ridge);
      sol.rank_warning = sol.rank_warning || fits.rank_warning;
      const Fit& y_fit = fits.first;
      const Fit& z_fit = fits.second;
      parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin,
                                                       std::size_t end,
                                                       std::size_t) {
        for (std::size_t p = begin; p < end; ++p) {
          const double y = sol.states[idx2(static_cast<int>(p), i, k + 1)];
          cond_y[p] = y_fit(y);
          z_val[p] = z_fit(y);
        }
      });
      // The optimized Hamiltonian along the fitted z-curve is a smooth
      // one-variable function of the state; tabulate it once per step.
      const std::vector<double> hk = uniform_knots(state_lo, state_hi, kHamiltonianKnots);
      std::vector<double> hv(hk.size());
      parallel_blocks(hk.size(), [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t j = begin; j < end; ++j) {
          hv[j] = minimize_hamiltonian(problem, hk[j], m_i, z_fit(hk[j]),
                                       opts.tol_action)
                      .value;
        }
      });
      const LinearInterpolant h_interp(hk, hv);
      parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin,
                                                       std::size_t end,
                                                       std::size_t) {
        for (std::size_t p = begin; p < end; ++p) {
          const double y = sol.states[idx2(static_cast<int>(p), i, k + 1)];
          y_curr[p] = cond_y[p] + dt * h_interp(y);
        }
      });
      // Outside the sampled state range the polynomial tail of the fit is
      // unsupported by data; freeze the curve at the boundary value there.
      const double lo_clamp = state_lo;
      const double hi_clamp = state_hi;
      z_curve = [z_fit, lo_clamp, hi_clamp](double y) {
        return z_fit(std::clamp(y, lo_clamp, hi_clamp));
      };
      sol.z_function[static_cast<std::size_t>(i)] = z_curve;
    }

    parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end,
                                                     std::size_t) {
      for (std::size_t p = begin; p < end; ++p) {
        residual[p] = y_next[p] - cond_y[p] -
                      z_val[p] * paths.increment1(static_cast<int>(p), i);
      }
    });
    std::vector<double> dz(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) dz[static_cast<std::size_t>(p)] = paths.increment1(p, i);
    // When the conditional decomposition is exact (two-point trees, values
    // inside the regression span) the residual is zero to round-off and its
    // correlation with anything is meaningless; report zero instead of the
    // round-off ratio.
    double res_scale = 0.0;
    double y_scale = 0.0;
    for (int p = 0; p < n; ++p) {
      res_scale = std::max(res_scale, std::abs(residual[static_cast<std::size_t>(p)]));
      y_scale = std::max(y_scale, std::abs(y_next[static_cast<std::size_t>(p)]));
    }
    sol.orth_residual[static_cast<std::size_t>(i)] =
        res_scale <= 1e-10 * (1.0 + y_scale)
            ? 0.0
            : pearson_abs_corr(residual, dz);

    if (policy_stages != nullptr) {
      const double pad = 0.15 * (state_hi - state_lo) + 1e-12;
      const std::vector<double> knots =
          uniform_knots(state_lo - pad, state_hi + pad, opts.policy_knots);
      std::vector<double> actions(knots.size());
      parallel_blocks(knots.size(), [&](std::size_t begin, std::size_t end,
                                        std::size_t) {
        for (std::size_t j = begin; j < end; ++j) {
          actions[j] = minimize_hamiltonian(problem, knots[j], m_i,
                                            z_curve(knots[j]), opts.tol_action)
                           .action;
        }
      });
      (*policy_stages)[static_cast<std::size_t>(i)] =
          LinearInterpolant(knots, std::move(actions));
    }

    if (full) {
      for (int p = 0; p < n; ++p) {
        sol.y[idx2(p, i, k + 1)] = y_curr[static_cast<std::size_t>(p)];
        sol.z[idx2(p, i, k)] = z_val[static_cast<std::size_t>(p)];
      }
    }
    std::swap(y_next, y_curr);
  }

  sol.value_estimate = pairwise_sum(y_next) / n;
  if (!full) {
    // Keep the time-0 values so the value estimate stays auditable.
    sol.y = std::move(y_next);
  }
  return sol;
}

}  // namespace

double hamiltonian(const MfgProblem& problem, double x, double a,
                   const EmpiricalMeasure& m, double z) {
  const std::span<const double> xs(&x, 1);
  const std::span<const double> as(&a, 1);
  double h = problem.running_cost(xs, as);
  if (problem.coupling_cost) h += problem.coupling_cost(xs, m);
  return h + z * a / problem.sigma_scalar();
}

HamiltonianMin minimize_hamiltonian(const MfgProblem& problem, double x,
                                    const EmpiricalMeasure& m, double z,
                                    double tol) {
  if (problem.dim != 1) {
    throw std::invalid_argument(
        "minimize_hamiltonian: only scalar actions are supported");
  }
  const double lo = problem.action_lo[0];
  const double hi = problem.action_hi[0];
  HamiltonianMin out;
  if (hi - lo < 1e-15) {
    out.action = lo;
    out.value = hamiltonian(problem, x, lo, m, z);
    return out;
  }
  out.action = internal::brent_minimize(
      [&](double a) { return hamiltonian(problem, x, a, m, z); }, lo, hi, tol);
  out.value = hamiltonian(problem, x, out.action, m, z);
  return out;
}

BsdeSolution solve_bsde(const MfgProblem& problem, const MeasureFlow& flow,
                        const PathBundle& paths, const SolverOptions& opts,
                        BsdeStorage storage) {
  return backward_sweep(problem, flow, paths, opts, storage, nullptr);
}

double GirsanovWeights::partial(int path, int upto) const {
  double acc = 0.0;
  for (int j = 0; j < upto; ++j) acc += log_increment(path, j);
  return std::exp(acc);
}

std::vector<double> GirsanovWeights::weights() const {
  std::vector<double> out(static_cast<std::size_t>(n_paths));
  for (int p = 0; p < n_paths; ++p) out[static_cast<std::size_t>(p)] = weight(p);
  return out;
}

double GirsanovWeights::mean_weight() const {
  return pairwise_sum(weights()) / n_paths;
}

GirsanovWeights girsanov_weights(const MfgProblem& problem,
                                 const FeedbackPolicy& policy,
                                 const PathBundle& paths,
                                 const MeasureFlow& flow) {
  problem.validate();
  if (problem.dim != 1) {
    throw std::invalid_argument("girsanov_weights: only scalar states are supported");
  }
  if (problem.sigma_scalar() <= 0.0) {
    throw std::invalid_argument("girsanov_weights: sigma must be positive");
  }
  if (flow.measures.size() != static_cast<std::size_t>(paths.steps) + 1) {
    throw std::invalid_argument(
        "girsanov_weights: flow must carry one measure per grid time");
  }
  if (policy.stages() < paths.steps) {
    throw std::invalid_argument("girsanov_weights: policy has too few stages");
  }
  const int n = paths.n_paths;
  const int k = paths.steps;
  const double dt = paths.dt;
  const double sigma = problem.sigma_scalar();

  GirsanovWeights out;
  out.n_paths = n;
  out.steps = k;
  out.states = simulate_uncontrolled(problem, flow, paths);
  out.log_increments.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(k), 0.0);
  parallel_blocks(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end,
                                                   std::size_t) {
    for (std::size_t p = begin; p < end; ++p) {
      const int pi = static_cast<int>(p);
      for (int j = 0; j < k; ++j) {
        const double y = out.states[idx2(pi, j, k + 1)];
        const double theta = policy.eval(static_cast<std::size_t>(j), y) / sigma;
        out.log_increments[idx2(pi, j, k)] =
            theta * paths.increment1(pi, j) - 0.5 * theta * theta * dt;
      }
    }
  });
  return out;
}

MultiPeriodSolution solve_mfg_bsde(const MfgProblem& problem,
                                   const SolverOptions& opts,
                                   const PathBundle* paths) {
  problem.validate();
  if (problem.dim != 1) {
    throw std::invalid_argument("solve_mfg_bsde: only scalar states are supported");
  }
  if (problem.drift_general) {
    throw std::invalid_argument(
        "solve_mfg_bsde: requires the separated drift a + b0(x, m)");
  }
  if (opts.damping <= 0.0 || opts.damping > 1.0) {
    throw std::invalid_argument("solve_mfg_bsde: damping outside (0, 1]");
  }
  if (opts.max_iters < 1) {
    throw std::invalid_argument("solve_mfg_bsde: max_iters must be >= 1");
  }

  PathBundle sampled;
  if (paths == nullptr) {
    sampled = sample_paths(problem, opts.n_paths, opts.seed);
    paths = &sampled;
  }
  if (paths->steps != problem.periods) {
    throw std::invalid_argument(
        "solve_mfg_bsde: bundle step count must equal the period count");
  }
  const int k = paths->steps;
  const double dt = paths->dt;

  const EmpiricalMeasure initial = paths->initial_measure();
  const double tol = opts.tol_fixed_point.has_value()
                         ? *opts.tol_fixed_point
                         : 1e-3 * (1.0 + initial.abs_moment(1));

  // Bootstrap flow: uncontrolled particle system, one slice at a time so each
  // b0 evaluation sees the current slice's law.
  MeasureFlow flow;
  flow.times.resize(static_cast<std::size_t>(k) + 1);
  for (int i = 0; i <= k; ++i) flow.times[static_cast<std::size_t>(i)] = dt * i;
  flow.measures.reserve(static_cast<std::size_t>(k) + 1);
  flow.measures.push_back(initial);
  {
    const double sigma = problem.sigma_scalar();
    std::vector<double> current(initial.points().begin(), initial.points().end());
    std::vector<double> next(current.size());
    for (int i = 0; i < k; ++i) {
      const EmpiricalMeasure& m = flow.measures.back();
      parallel_blocks(current.size(), [&](std::size_t begin, std::size_t end,
                                          std::size_t) {
        for (std::size_t p = begin; p < end; ++p) {
          const double y = current[p];
          double b0 = 0.0;
          if (problem.drift_b0) {
            problem.drift_b0(std::span<const double>(&y, 1), m,
                             std::span<double>(&b0, 1));
          }
          next[p] = y + b0 * dt + sigma * paths->increment1(static_cast<int>(p), i);
        }
      });
      flow.measures.push_back(EmpiricalMeasure::equal(next, 1));
      std::swap(current, next);
    }
  }

  MultiPeriodSolution out;
  out.report.tolerance = tol;
  std::vector<FeedbackPolicy::Stage> stages;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const BsdeSolution sweep =
        backward_sweep(problem, flow, *paths, opts, BsdeStorage::lean, &stages);
    out.policy = FeedbackPolicy(stages, problem.action_lo, problem.action_hi);
    const Trajectories traj = simulate_state(problem, out.policy, flow, *paths);

    std::vector<EmpiricalMeasure> candidates;
    candidates.reserve(static_cast<std::size_t>(k));
    double residual = 0.0;
    for (int i = 1; i <= k; ++i) {
      candidates.push_back(traj.measure_at(i));
      const EmpiricalMeasure& cand = candidates.back();
      if (cand.abs_moment(opts.moment_p) > opts.moment_cap) {
        throw std::runtime_error(
            "solve_mfg_bsde: iterate moment exceeds the a-priori cap; "
            "fixed-point iteration is diverging");
      }
      residual = std::max(
          residual,
          internal::w1_equal_clouds(flow.measures[static_cast<std::size_t>(i)], cand));
    }
    out.report.residual = residual;
    out.report.residual_history.push_back(residual);
    out.report.iterations = iter + 1;
    if (residual < tol) {
      out.report.converged = true;
      for (int i = 1; i <= k; ++i) {
        flow.measures[static_cast<std::size_t>(i)] =
            std::move(candidates[static_cast<std::size_t>(i) - 1]);
      }
      break;
    }
    for (int i = 1; i <= k; ++i) {
      flow.measures[static_cast<std::size_t>(i)] =
          quantile_mix(flow.measures[static_cast<std::size_t>(i)],
                       candidates[static_cast<std::size_t>(i) - 1], opts.damping);
    }
  }
  out.flow = std::move(flow);
  return out;
}

}  // namespace mfg
