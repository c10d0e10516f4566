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

#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "doctest.h"
#include "mfg/families.hpp"
#include "mfg/interp.hpp"
#include "mfg/model.hpp"
#include "mfg/policy.hpp"

namespace {

mfg::MeasureFlow point_flow(const mfg::MfgProblem& problem, double at) {
  mfg::MeasureFlow flow;
  const int k = problem.periods;
  for (int i = 0; i <= k; ++i) {
    flow.times.push_back(problem.dt() * i);
    flow.measures.push_back(mfg::EmpiricalMeasure::equal({at}));
  }
  return flow;
}

double sample_cov(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) cov += (a[i] - ma) * (b[i] - mb);
  return cov / static_cast<double>(n);
}

double cov_stderr(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double prod = (a[i] - ma) * (b[i] - mb);
    var += prod * prod;
  }
  var /= static_cast<double>(n);
  return std::sqrt(var / static_cast<double>(n));
}

}  // namespace

TEST_CASE("problem validation rejects malformed definitions") {
  mfg::LqConfig config;
  auto problem = mfg::make_lq_problem(config);
  CHECK_NOTHROW(problem.validate());
  auto bad = problem;
  bad.periods = 0;
  CHECK_THROWS(bad.validate());
  bad = problem;
  bad.horizon = -1.0;
  CHECK_THROWS(bad.validate());
  bad = problem;
  bad.action_lo = {1.0};  // box no longer contains 0
  CHECK_THROWS(bad.validate());
  bad = problem;
  bad.terminal_cost = nullptr;
  CHECK_THROWS(bad.validate());
  bad = problem;
  bad.sigma = {1.0, 0.0};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("path sampling is reproducible and counter-based") {
  mfg::LqConfig config;
  config.periods = 3;
  config.horizon = 1.5;
  const auto problem = mfg::make_lq_problem(config);
  const auto a = mfg::sample_paths(problem, 200, 42);
  const auto b = mfg::sample_paths(problem, 200, 42);
  CHECK(a.initial == b.initial);
  CHECK(a.increments == b.increments);
  const auto c = mfg::sample_paths(problem, 200, 43);
  CHECK(a.increments != c.increments);
  // Growing the bundle leaves existing path indices untouched.
  const auto big = mfg::sample_paths(problem, 400, 42);
  for (int p = 0; p < 200; ++p) {
    CHECK(big.initial1(p) == a.initial1(p));
    for (int i = 0; i < a.steps; ++i) {
      CHECK(big.increment1(p, i) == a.increment1(p, i));
    }
  }
}

TEST_CASE("gaussian increments match the per-step variance") {
  mfg::LqConfig config;
  config.periods = 4;
  config.horizon = 1.0;  // dt = 0.25
  const auto problem = mfg::make_lq_problem(config);
  const int n = 100000;
  const auto bundle = mfg::sample_paths(problem, n, 7);
  const double dt = problem.dt();
  for (int step = 0; step < 4; ++step) {
    double mean = 0.0, var = 0.0;
    for (int p = 0; p < n; ++p) mean += bundle.increment1(p, step);
    mean /= n;
    for (int p = 0; p < n; ++p) {
      const double d = bundle.increment1(p, step) - mean;
      var += d * d;
    }
    var /= n;
    CHECK(std::fabs(mean) < 3.0 * std::sqrt(dt / n));
    CHECK(std::fabs(var - dt) < 3.0 * std::sqrt(2.0 / n) * dt);
  }
}

TEST_CASE("rademacher and zero noise have exact supports") {
  mfg::LqConfig config;
  config.periods = 4;
  config.horizon = 1.0;
  config.noise = mfg::NoiseKind::rademacher;
  const auto problem = mfg::make_lq_problem(config);
  const auto bundle = mfg::sample_paths(problem, 500, 3);
  const double root_dt = std::sqrt(problem.dt());
  int ups = 0;
  for (int p = 0; p < bundle.n_paths; ++p) {
    for (int i = 0; i < bundle.steps; ++i) {
      const double inc = bundle.increment1(p, i);
      CHECK(std::fabs(std::fabs(inc) - root_dt) == 0.0);
      ups += inc > 0.0 ? 1 : 0;
    }
  }
  CHECK(ups > 800);  // both signs occur
  CHECK(ups < 1200);

  mfg::LqConfig zero_config = config;
  zero_config.noise = mfg::NoiseKind::zero;
  const auto zero_bundle = mfg::sample_paths(mfg::make_lq_problem(zero_config), 50, 3);
  for (double v : zero_bundle.increments) CHECK(v == 0.0);
}

TEST_CASE("increments are uncorrelated with lagged path functionals") {
  mfg::LqConfig config;
  config.periods = 3;
  const auto problem = mfg::make_lq_problem(config);
  const int n = 50000;
  const auto bundle = mfg::sample_paths(problem, n, 11);
  // Functions of (xi, Z up to t_2) against the step-2 increment.
  std::vector<double> target(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) target[static_cast<std::size_t>(p)] = bundle.increment1(p, 2);
  std::vector<std::vector<double>> lags(5, std::vector<double>(static_cast<std::size_t>(n)));
  for (int p = 0; p < n; ++p) {
    const double xi = bundle.initial1(p);
    const double z1 = bundle.increment1(p, 0);
    const double z2 = bundle.increment1(p, 1);
    lags[0][static_cast<std::size_t>(p)] = xi;
    lags[1][static_cast<std::size_t>(p)] = z1;
    lags[2][static_cast<std::size_t>(p)] = z1 + z2;
    lags[3][static_cast<std::size_t>(p)] = std::sin(xi + z1);
    lags[4][static_cast<std::size_t>(p)] = std::fabs(z2) * xi;
  }
  for (const auto& lag : lags) {
    CHECK(std::fabs(sample_cov(lag, target)) < 3.0 * cov_stderr(lag, target) + 1e-12);
  }
}

TEST_CASE("state simulation follows the Euler recursion exactly") {
  // No drift, zero policy: X = xi + sigma Z.
  mfg::LqConfig config;
  config.periods = 3;
  config.sigma = 0.7;
  const auto problem = mfg::make_lq_problem(config);
  const auto bundle = mfg::sample_paths(problem, 100, 5);
  const auto policy = mfg::FeedbackPolicy::constant(3, 0.0, -50.0, 50.0);
  const auto flow = point_flow(problem, 0.0);
  const auto traj = mfg::simulate_state(problem, policy, flow, bundle);
  for (int p = 0; p < 100; ++p) {
    double z = 0.0;
    CHECK(traj.at1(p, 0) == bundle.initial1(p));
    for (int i = 1; i <= 3; ++i) {
      z += bundle.increment1(p, i - 1);
      CHECK(traj.at1(p, i) ==
            doctest::Approx(bundle.initial1(p) + 0.7 * z).epsilon(1e-14));
    }
  }
}

TEST_CASE("constant drift with zero noise gives the deterministic ramp") {
  mfg::PolyConfig config;
  config.control_cost = 1.0;
  config.terminal.x2 = 1.0;
  config.drift_poly = {1.0};  // b0 = 1
  config.horizon = 2.0;
  config.periods = 2;
  config.noise = mfg::NoiseKind::zero;
  config.xi_mean = 0.0;
  config.xi_std = 0.0;
  const auto problem = mfg::make_poly_problem(config);
  const auto bundle = mfg::sample_paths(problem, 4, 1);
  const auto policy = mfg::FeedbackPolicy::constant(2, 0.0, -50.0, 50.0);
  const auto traj = mfg::simulate_state(problem, policy, point_flow(problem, 0.0), bundle);
  for (int p = 0; p < 4; ++p) {
    CHECK(traj.at1(p, 0) == doctest::Approx(0.0));
    CHECK(traj.at1(p, 1) == doctest::Approx(1.0));
    CHECK(traj.at1(p, 2) == doctest::Approx(2.0));
  }
}

TEST_CASE("optimal linear-quadratic feedback reproduces the closed-form state") {
  mfg::LqConfig config;
  config.c = 1.0;
  config.sigma = 0.5;
  const auto problem = mfg::make_lq_problem(config);
  const auto bundle = mfg::sample_paths(problem, 1000, 9);
  // Feedback (E[xi] - x) / (1 + c) as an interpolant over wide knots.
  const double coeff = 1.0 / (1.0 + config.c);
  std::vector<double> xs = {-40.0, 40.0};
  std::vector<double> ys = {coeff * (0.0 - -40.0), coeff * (0.0 - 40.0)};
  mfg::FeedbackPolicy policy({mfg::LinearInterpolant(xs, ys)}, {-50.0}, {50.0});
  const auto traj = mfg::simulate_state(problem, policy, point_flow(problem, 0.0), bundle);
  for (int p = 0; p < 1000; ++p) {
    const double xi = bundle.initial1(p);
    const double expected = xi / 2.0 + 0.5 * bundle.increment1(p, 0);
    CHECK(traj.at1(p, 1) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("total cost handles constant costs exactly") {
  // A zero-action policy silences the quadratic control cost, leaving only
  // the constant terms.
  mfg::PolyConfig config;
  config.control_cost = 1.0;
  config.terminal.constant = 1.0;
  config.periods = 3;
  config.horizon = 1.5;
  const auto problem = mfg::make_poly_problem(config);
  const auto bundle = mfg::sample_paths(problem, 64, 2);
  const auto policy = mfg::FeedbackPolicy::constant(3, 0.0, -50.0, 50.0);
  const auto flow = point_flow(problem, 0.0);
  CHECK(mfg::total_cost(problem, policy, flow, bundle).value ==
        doctest::Approx(1.0).epsilon(1e-14));

  mfg::PolyConfig running = config;
  running.terminal.constant = 0.0;
  running.coupling.constant = 1.0;
  const auto problem2 = mfg::make_poly_problem(running);
  CHECK(mfg::total_cost(problem2, policy, flow, bundle).value ==
        doctest::Approx(1.5).epsilon(1e-14));  // sum of dt equals the horizon
}

TEST_CASE("total cost is affine in the terminal cost") {
  mfg::PolyConfig base;
  base.control_cost = 0.5;
  base.periods = 2;
  base.horizon = 1.0;
  base.terminal.x2 = 0.0;
  const auto bundle = mfg::sample_paths(mfg::make_poly_problem(base), 500, 4);
  const auto policy = mfg::FeedbackPolicy::constant(2, 0.2, -50.0, 50.0);
  auto with_terminal = [&](mfg::PolyCost t) {
    mfg::PolyConfig c = base;
    c.terminal = t;
    const auto problem = mfg::make_poly_problem(c);
    return mfg::total_cost(problem, policy, point_flow(problem, 0.4), bundle).value;
  };
  mfg::PolyCost g1;
  g1.x2 = 1.0;
  mfg::PolyCost g2;
  g2.x = 2.0;
  g2.constant = 3.0;
  mfg::PolyCost sum;
  sum.x2 = 1.0;
  sum.x = 2.0;
  sum.constant = 3.0;
  mfg::PolyCost zero;
  const double lhs = with_terminal(sum);
  const double rhs = with_terminal(g1) + with_terminal(g2) - with_terminal(zero);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("optimal feedback beats the zero policy at the analytic cost levels") {
  mfg::LqConfig config;
  config.c = 1.0;
  config.c_l = 1.0;
  config.sigma = 0.5;
  const auto problem = mfg::make_lq_problem(config);
  const auto bundle = mfg::sample_paths(problem, 20000, 21);
  // Equilibrium flow: terminal measure is the closed-form equilibrium cloud.
  std::vector<double> eq_points(20000);
  for (int p = 0; p < 20000; ++p) {
    eq_points[static_cast<std::size_t>(p)] =
        0.5 * bundle.initial1(p) + 0.5 * bundle.increment1(p, 0);
  }
  mfg::MeasureFlow flow;
  flow.times = {0.0, 1.0};
  std::vector<double> init_points(20000);
  for (int p = 0; p < 20000; ++p) init_points[static_cast<std::size_t>(p)] = bundle.initial1(p);
  flow.measures = {mfg::EmpiricalMeasure::equal(init_points),
                   mfg::EmpiricalMeasure::equal(eq_points)};

  std::vector<double> xs = {-40.0, 40.0};
  std::vector<double> ys = {20.0, -20.0};  // (0 - x) / 2
  mfg::FeedbackPolicy optimal({mfg::LinearInterpolant(xs, ys)}, {-50.0}, {50.0});
  const auto zero = mfg::FeedbackPolicy::constant(1, 0.0, -50.0, 50.0);

  const auto opt_cost = mfg::total_cost(problem, optimal, flow, bundle);
  const auto zero_cost = mfg::total_cost(problem, zero, flow, bundle);
  CHECK(opt_cost.value < zero_cost.value);
  // Analytic values: E[a^2] + E[xi^2] + E[(xi/2 + Z)^2] = 0.25 + 1 + 0.5 and
  // 0 + 1 + E[(xi + Z)^2] = 1 + 1.25. The flow's terminal mean is itself
  // noisy, so allow a small additional tolerance on top of 3 path stderrs.
  CHECK(std::fabs(opt_cost.value - 1.75) < 3.0 * opt_cost.stderr_mean + 0.02);
  CHECK(std::fabs(zero_cost.value - 2.25) < 3.0 * zero_cost.stderr_mean + 0.02);
}

TEST_CASE("rademacher enumeration lists every sign combination once") {
  mfg::LqConfig config;
  config.periods = 3;
  config.noise = mfg::NoiseKind::rademacher;
  config.xi_mean = 0.4;
  config.xi_std = 0.0;  // common starting point
  auto problem = mfg::make_lq_problem(config);
  const auto bundle = mfg::enumerate_rademacher_paths(problem);
  CHECK(bundle.n_paths == 8);
  CHECK(bundle.steps == 3);
  std::set<std::vector<int>> combos;
  for (int p = 0; p < 8; ++p) {
    CHECK(bundle.initial1(p) == doctest::Approx(0.4));
    std::vector<int> signs;
    for (int i = 0; i < 3; ++i) signs.push_back(bundle.increment1(p, i) > 0 ? 1 : 0);
    combos.insert(signs);
  }
  CHECK(combos.size() == 8);

  auto gauss = mfg::make_lq_problem(mfg::LqConfig{});
  CHECK_THROWS(mfg::enumerate_rademacher_paths(gauss));
}

TEST_CASE("coarsening aggregates increments over nested grids") {
  mfg::LqConfig config;
  config.periods = 8;
  const auto problem = mfg::make_lq_problem(config);
  const auto fine = mfg::sample_paths(problem, 50, 13);
  const auto coarse = mfg::coarsen_paths(fine, 2);
  CHECK(coarse.steps == 2);
  CHECK(coarse.dt == doctest::Approx(0.5));
  for (int p = 0; p < 50; ++p) {
    CHECK(coarse.initial1(p) == fine.initial1(p));
    for (int j = 0; j < 2; ++j) {
      double sum = 0.0;
      for (int i = 0; i < 4; ++i) sum += fine.increment1(p, j * 4 + i);
      CHECK(coarse.increment1(p, j) == doctest::Approx(sum).epsilon(1e-14));
    }
  }
  CHECK_THROWS(mfg::coarsen_paths(fine, 3));   // does not divide
  CHECK_THROWS(mfg::coarsen_paths(fine, 16));  // finer than source
}

TEST_CASE("trajectory measures carry the path cross-sections") {
  mfg::LqConfig config;
  config.periods = 2;
  config.horizon = 1.0;
  const auto problem = mfg::make_lq_problem(config);
  const auto bundle = mfg::sample_paths(problem, 30, 1);
  const auto policy = mfg::FeedbackPolicy::constant(2, 0.0, -50.0, 50.0);
  const auto traj = mfg::simulate_state(problem, policy, point_flow(problem, 0.0), bundle);
  const auto m1 = traj.measure_at(1);
  CHECK(m1.size() == 30);
  double mean = 0.0;
  for (int p = 0; p < 30; ++p) mean += traj.at1(p, 1);
  mean /= 30.0;
  CHECK(m1.mean1() == doctest::Approx(mean).epsilon(1e-12));
}
