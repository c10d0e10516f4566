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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mfg/bsde.hpp"
#include "mfg/families.hpp"
#include "mfg/interp.hpp"
#include "mfg/measures.hpp"
#include "mfg/model.hpp"
#include "mfg/pasting.hpp"
#include "mfg/policy.hpp"
#include "mfg/single_period.hpp"
#include "support/tree_oracle.hpp"

namespace {

std::vector<double> gaussian_points(double mean, double stddev, int n,
                                    unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(mean, stddev);
  std::vector<double> pts(static_cast<std::size_t>(n));
  for (double& v : pts) v = normal(rng);
  return pts;
}

mfg::MeasureFlow flat_flow(int steps, double horizon,
                           const mfg::EmpiricalMeasure& m) {
  mfg::MeasureFlow flow;
  const double dt = horizon / steps;
  for (int i = 0; i <= steps; ++i) {
    flow.times.push_back(dt * i);
    flow.measures.push_back(m);
  }
  return flow;
}

double naive_mean(std::span<const double> xs) {
  double acc = 0.0;
  for (double v : xs) acc += v;
  return acc / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("hamiltonian matches the quadratic closed form") {
  mfg::LqConfig cfg;
  cfg.c = 1.0;
  cfg.c_l = 1.0;
  cfg.sigma = 1.0;
  cfg.action_lo = -1.0;
  cfg.action_hi = 1.0;
  const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);
  const mfg::EmpiricalMeasure m = mfg::EmpiricalMeasure::equal({0.3}, 1);

  for (double x : {-1.0, 0.2, 2.0}) {
    for (double a : {-0.9, 0.0, 0.7}) {
      for (double z : {-2.0, 0.0, 1.5}) {
        const double expected = a * a + (x - 0.3) * (x - 0.3) + z * a;
        CHECK(mfg::hamiltonian(problem, x, a, m, z) ==
              doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }

  // Unconstrained minimizer -z / (2 c sigma), clamped to the action box.
  const mfg::HamiltonianMin at_zero =
      mfg::minimize_hamiltonian(problem, 0.5, m, 0.0);
  CHECK(std::abs(at_zero.action) < 1e-7);
  CHECK(at_zero.value == doctest::Approx(0.04).epsilon(1e-9));

  const mfg::HamiltonianMin interior =
      mfg::minimize_hamiltonian(problem, 0.3, m, 1.0);
  CHECK(interior.action == doctest::Approx(-0.5).epsilon(1e-7));
  CHECK(interior.value == doctest::Approx(-0.25).epsilon(1e-8));

  const mfg::HamiltonianMin clamped_lo =
      mfg::minimize_hamiltonian(problem, 0.3, m, 4.0);
  CHECK(clamped_lo.action == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(clamped_lo.value == doctest::Approx(1.0 - 4.0).epsilon(1e-6));

  const mfg::HamiltonianMin clamped_hi =
      mfg::minimize_hamiltonian(problem, 0.3, m, -4.0);
  CHECK(clamped_hi.action == doctest::Approx(1.0).epsilon(1e-6));

  // A zero-width action box pins the minimizer.
  mfg::MfgProblem pinned = mfg::make_lq_problem(cfg);
  pinned.action_lo = {0.0};
  pinned.action_hi = {0.0};
  const mfg::HamiltonianMin fixed =
      mfg::minimize_hamiltonian(pinned, 0.8, m, 3.0);
  CHECK(fixed.action == 0.0);
  CHECK(fixed.value == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("constant terminal cost propagates flat values and zero gains") {
  mfg::PolyConfig cfg;
  cfg.control_cost = 1.0;
  cfg.terminal.constant = 2.5;
  cfg.sigma = 0.5;
  cfg.xi_mean = 0.1;
  cfg.xi_std = 1.0;
  cfg.horizon = 1.5;
  cfg.periods = 3;
  const mfg::MfgProblem problem = mfg::make_poly_problem(cfg);

  const mfg::PathBundle paths = mfg::sample_paths(problem, 2000, 5);
  const mfg::MeasureFlow flow =
      flat_flow(3, 1.5, mfg::EmpiricalMeasure::equal({0.0}, 1));
  mfg::SolverOptions opts;
  const mfg::BsdeSolution sol = mfg::solve_bsde(problem, flow, paths, opts);

  CHECK(sol.n_paths == 2000);
  CHECK(sol.steps == 3);
  for (int p = 0; p < sol.n_paths; p += 97) {
    for (int i = 0; i <= 3; ++i) {
      CHECK(sol.y_at(p, i) == doctest::Approx(2.5).epsilon(1e-8));
    }
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(sol.z_at(p, i)) < 1e-8);
    }
  }
  CHECK(sol.value_estimate == doctest::Approx(2.5).epsilon(1e-9));
  for (double r : sol.orth_residual) CHECK(r < 1e-6);
  CHECK_FALSE(sol.rank_warning);
}

TEST_CASE("linear terminal cost reproduces the affine backward recursion") {
  // Linear terminal value G(x) = x with unit volatility keeps the adjoint
  // variable constant at 1, and a steep quadratic penalty centered at kappa
  // pins the optimized drift: the driver collapses to kappa * z + O(1/M).
  // Closed form: y_i = x_i + kappa * (T - t_i), z_i = 1.
  const double kappa = 0.5;
  const double big = 1e7;
  mfg::MfgProblem problem;
  problem.dim = 1;
  problem.horizon = 1.0;
  problem.periods = 4;
  problem.sigma = {1.0};
  problem.action_lo = {-5.0};
  problem.action_hi = {5.0};
  problem.running_cost = [=](std::span<const double>,
                             std::span<const double> a) {
    const double d = a[0] - kappa;
    return big * d * d;
  };
  problem.terminal_cost = [](std::span<const double> x,
                             const mfg::EmpiricalMeasure&) { return x[0]; };
  problem.initial_sampler = mfg::gaussian_initial(0.2, 1.0);
  problem.validate();

  const int n = 20000;
  const mfg::PathBundle paths = mfg::sample_paths(problem, n, 7);
  const mfg::MeasureFlow flow =
      flat_flow(4, 1.0, mfg::EmpiricalMeasure::equal({0.0}, 1));
  mfg::SolverOptions opts;
  const mfg::BsdeSolution sol = mfg::solve_bsde(problem, flow, paths, opts);

  const double dt = 0.25;
  double max_y_err = 0.0;
  double max_z_err = 0.0;
  double sum_y_err = 0.0;
  double sum_z_err = 0.0;
  int count = 0;
  for (int p = 0; p < n; p += 211) {
    for (int i = 0; i < 4; ++i) {
      const double t = dt * i;
      const double oracle_y = sol.state_at(p, i) + kappa * (1.0 - t);
      const double y_err = std::abs(sol.y_at(p, i) - oracle_y);
      const double z_err = std::abs(sol.z_at(p, i) - 1.0);
      max_y_err = std::max(max_y_err, y_err);
      max_z_err = std::max(max_z_err, z_err);
      sum_y_err += y_err;
      sum_z_err += z_err;
      ++count;
    }
  }
  CHECK(max_y_err < 0.05);
  CHECK(max_z_err < 0.08);
  CHECK(sum_y_err / count < 0.02);
  CHECK(sum_z_err / count < 0.03);
  CHECK(sol.value_estimate == doctest::Approx(0.2 + kappa).epsilon(0.05));
}

TEST_CASE("exact tree conditioning matches full enumeration") {
  mfg::LqConfig cfg;
  cfg.c = 1.0;
  cfg.c_l = 1.0;
  cfg.sigma = 0.5;
  cfg.xi_mean = 0.3;
  cfg.xi_std = 0.0;
  cfg.horizon = 1.0;
  cfg.periods = 4;
  cfg.noise = mfg::NoiseKind::rademacher;
  const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);

  const mfg::PathBundle paths = mfg::enumerate_rademacher_paths(problem);
  REQUIRE(paths.n_paths == 16);
  REQUIRE(paths.steps == 4);

  // Arbitrary (but fixed) mean-field flow: small clouds with drifting means.
  mfg::MeasureFlow flow;
  std::mt19937_64 rng(40);
  std::normal_distribution<double> normal(0.0, 0.6);
  std::vector<double> flow_means;
  for (int i = 0; i <= 4; ++i) {
    std::vector<double> pts(50);
    const double center = 0.3 + 0.04 * i;
    for (double& v : pts) v = center + normal(rng);
    flow.times.push_back(0.25 * i);
    flow.measures.push_back(mfg::EmpiricalMeasure::equal(pts, 1));
    flow_means.push_back(flow.measures.back().mean1());
  }

  mfg::SolverOptions opts;
  opts.conditioner = mfg::Conditioner::exact_tree;
  const mfg::BsdeSolution sol = mfg::solve_bsde(problem, flow, paths, opts);

  tree_oracle::TreeParams tp;
  tp.c = 1.0;
  tp.c_l = 1.0;
  tp.sigma = 0.5;
  tp.action_lo = -50.0;
  tp.action_hi = 50.0;
  tp.dt = 0.25;
  tp.x0 = 0.3;
  tp.flow_means = flow_means;
  const tree_oracle::TreeValues oracle = tree_oracle::enumerate_tree(tp, 4);

  double max_dy = 0.0;
  double max_dz = 0.0;
  for (int p = 0; p < paths.n_paths; ++p) {
    std::size_t node = 0;
    for (int i = 0; i < 4; ++i) {
      max_dy = std::max(max_dy,
                        std::abs(sol.y_at(p, i) - oracle.y[static_cast<std::size_t>(i)][node]));
      max_dz = std::max(max_dz,
                        std::abs(sol.z_at(p, i) - oracle.z[static_cast<std::size_t>(i)][node]));
      const int bit = paths.increment1(p, i) > 0.0 ? 1 : 0;
      node = 2 * node + static_cast<std::size_t>(bit);
    }
    max_dy = std::max(max_dy, std::abs(sol.y_at(p, 4) - oracle.y[4][node]));
  }
  CHECK(max_dy < 1e-10);
  CHECK(max_dz < 1e-10);

  // Two-point noise admits an exact decomposition into conditional mean and
  // covariation, so the regression residual vanishes identically.
  for (double r : sol.orth_residual) CHECK(r < 1e-12);

  // The per-step covariation curve is recoverable as a function of the state.
  REQUIRE(sol.z_function.size() == 4);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(static_cast<bool>(sol.z_function[static_cast<std::size_t>(i)]));
    const double probe = sol.state_at(3, i);
    CHECK(std::isfinite(sol.z_function[static_cast<std::size_t>(i)](probe)));
  }
}

TEST_CASE("exact tree conditioning rejects unsupported inputs") {
  mfg::LqConfig cfg;
  cfg.periods = 2;
  cfg.xi_std = 0.0;
  const mfg::MfgProblem gaussian_problem = mfg::make_lq_problem(cfg);
  const mfg::PathBundle gpaths = mfg::sample_paths(gaussian_problem, 64, 1);
  const mfg::MeasureFlow flow =
      flat_flow(2, 1.0, mfg::EmpiricalMeasure::equal({0.0}, 1));
  mfg::SolverOptions opts;
  opts.conditioner = mfg::Conditioner::exact_tree;
  CHECK_THROWS_AS(mfg::solve_bsde(gaussian_problem, flow, gpaths, opts),
                  std::invalid_argument);

  cfg.noise = mfg::NoiseKind::rademacher;
  cfg.xi_std = 1.0;  // random initial states: no common tree root
  const mfg::MfgProblem spread = mfg::make_lq_problem(cfg);
  const mfg::PathBundle spaths = mfg::sample_paths(spread, 64, 1);
  CHECK_THROWS_WITH_AS(mfg::solve_bsde(spread, flow, spaths, opts),
                       doctest::Contains("common initial"),
                       std::invalid_argument);
}

TEST_CASE("change-of-measure weights match per-path closed forms") {
  mfg::LqConfig cfg;
  cfg.sigma = 0.5;
  cfg.periods = 4;
  const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);
  const int n = 20000;
  const mfg::PathBundle paths = mfg::sample_paths(problem, n, 23);
  const mfg::MeasureFlow flow =
      flat_flow(4, 1.0, mfg::EmpiricalMeasure::equal({0.0}, 1));

  SUBCASE("zero drift gives unit weights exactly") {
    const mfg::FeedbackPolicy zero =
        mfg::FeedbackPolicy::constant(4, 0.0, -50.0, 50.0);
    const mfg::GirsanovWeights w =
        mfg::girsanov_weights(problem, zero, paths, flow);
    for (int p = 0; p < n; p += 509) CHECK(w.weight(p) == 1.0);
    CHECK(w.mean_weight() == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("constant drift matches the exponential martingale") {
    const double beta = 0.36;
    const double theta = beta / 0.5;
    const mfg::FeedbackPolicy flat =
        mfg::FeedbackPolicy::constant(4, beta, -50.0, 50.0);
    const mfg::GirsanovWeights w =
        mfg::girsanov_weights(problem, flat, paths, flow);

    double log_sum = 0.0;
    for (int p = 0; p < n; ++p) {
      double manual = 0.0;
      for (int j = 0; j < 4; ++j) {
        manual += theta * paths.increment1(p, j) -
                  0.5 * theta * theta * 0.25;
      }
      CHECK(w.weight(p) ==
            doctest::Approx(std::exp(manual)).epsilon(1e-12));
      CHECK(w.partial(p, 4) == doctest::Approx(w.weight(p)).epsilon(1e-15));
      log_sum += manual;
    }
    // log-weight mean is -theta^2 T / 2 with standard deviation theta sqrt(T).
    const double log_mean = log_sum / n;
    CHECK(std::abs(log_mean + 0.5 * theta * theta) <
          3.0 * theta / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(w.mean_weight() - 1.0) <
          3.0 / std::sqrt(static_cast<double>(n)));
  }

  SUBCASE("random bounded feedback drifts keep unit mean weight") {
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> amp(-0.3, 0.3);
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<mfg::FeedbackPolicy::Stage> stages;
      for (int i = 0; i < 4; ++i) {
        std::vector<double> xs;
        std::vector<double> as;
        for (double x = -6.0; x <= 6.0 + 1e-9; x += 0.5) {
          xs.push_back(x);
          as.push_back(amp(rng));
        }
        stages.emplace_back(mfg::LinearInterpolant(xs, as));
      }
      const mfg::FeedbackPolicy policy(stages, {-0.3}, {0.3});
      const mfg::GirsanovWeights w =
          mfg::girsanov_weights(problem, policy, paths, flow);
      CHECK(std::abs(w.mean_weight() - 1.0) <
            3.0 / std::sqrt(static_cast<double>(n)));
    }
  }

  SUBCASE("a policy with too few stages is rejected") {
    const mfg::FeedbackPolicy stub =
        mfg::FeedbackPolicy::constant(3, 0.1, -50.0, 50.0);
    CHECK_THROWS_AS(mfg::girsanov_weights(problem, stub, paths, flow),
                    std::invalid_argument);
  }
}

TEST_CASE("reweighted uncontrolled states track the controlled law") {
  mfg::LqConfig cfg;
  cfg.sigma = 0.5;
  cfg.periods = 2;
  const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);
  const int n = 20000;
  const mfg::PathBundle paths = mfg::sample_paths(problem, n, 31);
  const mfg::MeasureFlow flow =
      flat_flow(2, 1.0, mfg::EmpiricalMeasure::equal({0.0}, 1));

  const mfg::FeedbackPolicy policy =
      mfg::FeedbackPolicy::constant(2, 0.2, -50.0, 50.0);
  const mfg::GirsanovWeights w =
      mfg::girsanov_weights(problem, policy, paths, flow);
  const mfg::Trajectories direct =
      mfg::simulate_state(problem, policy, flow, paths);

  for (int step : {1, 2}) {
    std::vector<double> pts(static_cast<std::size_t>(n));
    std::vector<double> wts(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int p = 0; p < n; ++p) {
      pts[static_cast<std::size_t>(p)] = w.state_at(p, step);
      const double wp = w.partial(p, step);
      wts[static_cast<std::size_t>(p)] = wp;
      total += wp;
    }
    for (double& v : wts) v /= total;
    const mfg::EmpiricalMeasure reweighted(pts, wts, 1);
    const mfg::EmpiricalMeasure direct_m = direct.measure_at(step);
    CHECK(mfg::wasserstein(reweighted, direct_m, 1) < 0.02);
  }
}

TEST_CASE("decoupled problem converges in a fixed number of sweeps") {
  mfg::PolyConfig cfg;
  cfg.control_cost = 1.0;
  cfg.terminal.x2 = 1.0;
  cfg.sigma = 0.5;
  cfg.xi_mean = 0.0;
  cfg.xi_std = 1.0;
  cfg.horizon = 1.0;
  cfg.periods = 2;
  const mfg::MfgProblem problem = mfg::make_poly_problem(cfg);

  mfg::SolverOptions opts;
  opts.damping = 1.0;
  opts.n_paths = 4000;
  opts.seed = 3;
  const mfg::MultiPeriodSolution sol = mfg::solve_mfg_bsde(problem, opts);
  CHECK(sol.report.converged);
  CHECK(sol.report.iterations <= 3);
  // No coupling: the optimal feedback pulls toward zero at every stage.
  CHECK(std::abs(sol.policy.eval(0, 0.0)) < 0.05);
  CHECK(sol.policy.eval(0, 2.0) < -0.2);
  CHECK(sol.policy.eval(1, -2.0) > 0.2);
}

TEST_CASE("single-period equilibrium agrees with the closed form") {
  mfg::LqConfig cfg;
  cfg.c = 10.0;
  cfg.c_l = 1.0;
  cfg.sigma = 0.5;
  cfg.periods = 1;
  const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);
  const int n = 20000;
  const mfg::PathBundle paths = mfg::sample_paths(problem, n, 11);

  mfg::SolverOptions opts;
  opts.n_paths = n;
  opts.seed = 11;
  const mfg::MultiPeriodSolution sol =
      mfg::solve_mfg_bsde(problem, opts, &paths);
  CHECK(sol.report.converged);

  // Equilibrium mean stays at E[xi] = 0; the optimal gain is q/(c + q dt)
  // with q = 1, so X_1 = (1 - g) xi + sigma dZ for the same noise.
  const double gain = 1.0 / 11.0;
  std::vector<double> oracle(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    oracle[static_cast<std::size_t>(p)] =
        (1.0 - gain) * paths.initial1(p) + 0.5 * paths.increment1(p, 0);
  }
  const mfg::EmpiricalMeasure oracle_m = mfg::EmpiricalMeasure::equal(oracle, 1);
  CHECK(mfg::wasserstein(sol.flow.measures[1], oracle_m, 2) < 0.03);
  CHECK(std::abs(sol.flow.measures[1].mean1()) <
        3.0 / std::sqrt(static_cast<double>(n)) + 0.01);
}

TEST_CASE("value process mean matches the simulated equilibrium cost") {
  mfg::LqConfig cfg;
  cfg.c = 10.0;
  cfg.c_l = 1.0;
  cfg.sigma = 0.5;
  cfg.periods = 2;
  const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);
  const int n = 20000;
  const mfg::PathBundle paths = mfg::sample_paths(problem, n, 17);

  mfg::SolverOptions opts;
  opts.n_paths = n;
  opts.seed = 17;
  const mfg::MultiPeriodSolution sol =
      mfg::solve_mfg_bsde(problem, opts, &paths);
  REQUIRE(sol.report.converged);

  const mfg::BsdeSolution sweep = mfg::solve_bsde(problem, sol.flow, paths, opts);
  const mfg::CostEstimate cost =
      mfg::total_cost(problem, sol.policy, sol.flow, paths);
  CHECK(std::abs(sweep.value_estimate - cost.value) <
        3.0 * cost.stderr_mean + 0.05);

  // The extracted feedback minimizes the Hamiltonian along the fitted
  // covariation curve at sampled states.
  std::mt19937_64 rng(70);
  std::uniform_int_distribution<int> pick_path(0, n - 1);
  std::uniform_int_distribution<int> pick_step(0, 1);
  std::uniform_real_distribution<double> pick_action(-2.0, 2.0);
  for (int probe = 0; probe < 100; ++probe) {
    const int p = pick_path(rng);
    const int i = pick_step(rng);
    const double x = sweep.state_at(p, i);
    const double z = sweep.z_at(p, i);
    const mfg::EmpiricalMeasure& m =
        sol.flow.measures[static_cast<std::size_t>(i)];
    const mfg::HamiltonianMin best = mfg::minimize_hamiltonian(problem, x, m, z);
    for (int r = 0; r < 3; ++r) {
      const double a = pick_action(rng);
      CHECK(best.value <= mfg::hamiltonian(problem, x, a, m, z) + 1e-8);
    }
  }
}

TEST_CASE("regression residuals stay uncorrelated with the driving noise") {
  SUBCASE("two-point noise: the identity is exact") {
    mfg::LqConfig cfg;
    cfg.sigma = 0.5;
    cfg.periods = 3;
    cfg.noise = mfg::NoiseKind::rademacher;
    const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);
    const int n = 4096;
    const mfg::PathBundle paths = mfg::sample_paths(problem, n, 29);
    const mfg::MeasureFlow flow =
        flat_flow(3, 1.0, mfg::EmpiricalMeasure::equal({0.0}, 1));
    mfg::SolverOptions opts;
    const mfg::BsdeSolution sol = mfg::solve_bsde(problem, flow, paths, opts);
    const double bound = 3.0 / std::sqrt(static_cast<double>(n));
    for (double r : sol.orth_residual) {
      CHECK(r < bound);
      // With two-point increments the squared increment is constant, so the
      // least-squares normal equations cancel the correlation up to the ridge
      // perturbation of the fit (small but not round-off zero).
      CHECK(r < 0.01);
    }
  }

  SUBCASE("gaussian noise: diagnostic stays within the inflated envelope") {
    // For gaussian increments the residual legitimately carries the
    // orthogonal-martingale component ~ (dZ^2 - dt), whose product with dZ
    // has heavy tails; the plug-in correlation then concentrates around a
    // multiple of 1/sqrt(n) rather than below 3/sqrt(n).
    mfg::LqConfig cfg;
    cfg.sigma = 0.5;
    cfg.periods = 2;
    const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);
    const int n = 20000;
    const mfg::PathBundle paths = mfg::sample_paths(problem, n, 37);
    const mfg::MeasureFlow flow =
        flat_flow(2, 1.0, mfg::EmpiricalMeasure::equal({0.0}, 1));
    mfg::SolverOptions opts;
    const mfg::BsdeSolution sol = mfg::solve_bsde(problem, flow, paths, opts);
    for (double r : sol.orth_residual) {
      CHECK(r < 30.0 / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST_CASE("storage modes expose consistent bookkeeping") {
  mfg::LqConfig cfg;
  cfg.sigma = 0.5;
  cfg.periods = 2;
  const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);
  const int n = 3000;
  const mfg::PathBundle paths = mfg::sample_paths(problem, n, 41);
  const mfg::MeasureFlow flow =
      flat_flow(2, 1.0, mfg::EmpiricalMeasure::equal({0.0}, 1));
  mfg::SolverOptions opts;

  const mfg::BsdeSolution full = mfg::solve_bsde(problem, flow, paths, opts);
  const mfg::BsdeSolution lean =
      mfg::solve_bsde(problem, flow, paths, opts, mfg::BsdeStorage::lean);

  CHECK(full.y.size() == static_cast<std::size_t>(n) * 3);
  CHECK(full.z.size() == static_cast<std::size_t>(n) * 2);
  CHECK(lean.z.empty());
  CHECK(lean.y.size() == static_cast<std::size_t>(n));
  CHECK(lean.value_estimate == full.value_estimate);
  CHECK(lean.states == full.states);
  REQUIRE(lean.z_function.size() == 2);
  CHECK(static_cast<bool>(lean.z_function[0]));

  std::vector<double> y0(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) y0[static_cast<std::size_t>(p)] = full.y_at(p, 0);
  CHECK(full.value_estimate == doctest::Approx(naive_mean(y0)).epsilon(1e-12));

  // Terminal slice equals the terminal cost path by path.
  const mfg::EmpiricalMeasure& mt = flow.measures[2];
  for (int p = 0; p < n; p += 173) {
    const double x = full.state_at(p, 2);
    CHECK(full.y_at(p, 2) ==
          problem.terminal_cost(std::span<const double>(&x, 1), mt));
  }
  CHECK_FALSE(full.rank_warning);
}

TEST_CASE("equilibrium iteration input validation") {
  mfg::LqConfig cfg;
  cfg.periods = 2;
  const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);

  mfg::SolverOptions bad = {};
  bad.damping = 0.0;
  CHECK_THROWS_AS(mfg::solve_mfg_bsde(problem, bad), std::invalid_argument);
  bad.damping = 1.5;
  CHECK_THROWS_AS(mfg::solve_mfg_bsde(problem, bad), std::invalid_argument);

  mfg::SolverOptions opts;
  opts.n_paths = 500;
  const mfg::PathBundle wrong = mfg::sample_paths(problem, 500, 1);
  mfg::MfgProblem three = problem;
  three.periods = 3;
  CHECK_THROWS_AS(mfg::solve_mfg_bsde(three, opts, &wrong),
                  std::invalid_argument);

  // A non-converged run reports rather than throws.
  mfg::SolverOptions tight;
  tight.n_paths = 500;
  tight.max_iters = 1;
  tight.tol_fixed_point = 1e-15;
  const mfg::MultiPeriodSolution sol = mfg::solve_mfg_bsde(problem, tight);
  CHECK_FALSE(sol.report.converged);
  CHECK(sol.report.iterations == 1);
}
