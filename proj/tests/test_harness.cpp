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
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mfg/families.hpp"
#include "mfg/harness.hpp"

TEST_CASE("fit_rate recovers exact power laws") {
  const std::vector<double> ks = {2.0, 4.0, 8.0, 16.0, 32.0};

  std::vector<double> inverse(ks.size());
  std::vector<double> half(ks.size());
  std::vector<double> flat(ks.size());
  std::vector<double> steep(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    inverse[i] = 3.7 / ks[i];
    half[i] = 0.9 / std::sqrt(ks[i]);
    flat[i] = 1.25;
    steep[i] = 5.0 * std::pow(ks[i], -1.7);
  }
  CHECK(mfg::fit_rate(ks, inverse) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(mfg::fit_rate(ks, half) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(mfg::fit_rate(ks, flat) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mfg::fit_rate(ks, steep) == doctest::Approx(-1.7).epsilon(1e-12));

  // A perturbed power law still lands near the generating exponent.
  const std::vector<double> noisy = {1.02 / 2.0, 0.97 / 4.0, 1.01 / 8.0,
                                     0.99 / 16.0, 1.0 / 32.0};
  const double slope = mfg::fit_rate(ks, noisy);
  CHECK(slope < -0.9);
  CHECK(slope > -1.1);
}

TEST_CASE("fit_rate input validation") {
  const std::vector<double> two_ks = {2.0, 4.0};
  const std::vector<double> two_gaps = {1.0, 0.5};
  CHECK_THROWS_AS(mfg::fit_rate(two_ks, two_gaps), std::invalid_argument);

  const std::vector<double> ks = {2.0, 4.0, 8.0};
  const std::vector<double> bad_gap = {1.0, 0.0, 0.25};
  CHECK_THROWS_AS(mfg::fit_rate(ks, bad_gap), std::invalid_argument);
  const std::vector<double> neg_gap = {1.0, -0.5, 0.25};
  CHECK_THROWS_AS(mfg::fit_rate(ks, neg_gap), std::invalid_argument);

  const std::vector<double> mismatch = {1.0, 0.5};
  CHECK_THROWS_AS(mfg::fit_rate(ks, mismatch), std::invalid_argument);

  const std::vector<double> equal_ks = {4.0, 4.0, 4.0};
  const std::vector<double> gaps = {1.0, 0.5, 0.25};
  CHECK_THROWS_AS(mfg::fit_rate(equal_ks, gaps), std::invalid_argument);
}

TEST_CASE("refinement sweep validates its grid hierarchy") {
  mfg::LqConfig cfg;
  cfg.sigma = 0.5;
  const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);
  mfg::SolverOptions opts;
  opts.n_paths = 256;

  const std::vector<int> not_dividing = {5};
  CHECK_THROWS_AS(mfg::donsker_sweep(problem, not_dividing, 48, opts),
                  std::invalid_argument);

  const std::vector<int> too_fine = {2, 8};
  CHECK_THROWS_AS(mfg::donsker_sweep(problem, too_fine, 32, opts),
                  std::invalid_argument);

  const std::vector<int> unordered = {4, 2};
  CHECK_THROWS_AS(mfg::donsker_sweep(problem, unordered, 64, opts),
                  std::invalid_argument);

  const std::vector<int> repeated = {2, 2};
  CHECK_THROWS_AS(mfg::donsker_sweep(problem, repeated, 64, opts),
                  std::invalid_argument);

  const std::vector<int> empty = {};
  CHECK_THROWS_AS(mfg::donsker_sweep(problem, empty, 64, opts),
                  std::invalid_argument);

  // A reference level that cannot converge is an error, not a silent fit.
  mfg::SolverOptions strangled;
  strangled.n_paths = 256;
  strangled.max_iters = 1;
  strangled.tol_fixed_point = 1e-15;
  const std::vector<int> ks = {2};
  CHECK_THROWS_AS(mfg::donsker_sweep(problem, ks, 16, strangled),
                  std::runtime_error);
}

TEST_CASE("time-independent optimal control leaves no refinement gap") {
  // Linear terminal cost and no coupling: the adjoint is constant in time
  // and space, so every discretization level plays the same constant
  // control and the control gap is pure estimation noise.
  mfg::PolyConfig cfg;
  cfg.control_cost = 1.0;
  cfg.terminal.x = 1.0;
  cfg.sigma = 0.5;
  cfg.xi_mean = 0.0;
  cfg.xi_std = 1.0;
  cfg.horizon = 1.0;
  const mfg::MfgProblem problem = mfg::make_poly_problem(cfg);

  mfg::SolverOptions opts;
  opts.n_paths = 4000;
  opts.seed = 19;
  const std::vector<int> ks = {2, 4};
  const mfg::SweepResult res = mfg::donsker_sweep(problem, ks, 32, opts);

  REQUIRE(res.ks == ks);
  REQUIRE(res.converged.size() == 2);
  for (char c : res.converged) CHECK(c == 1);
  for (double g : res.control_gaps) CHECK(g < 5e-3);
  for (double g : res.state_gaps) CHECK(g < 5e-3);
  // The flow gap compares piecewise-constant-in-time interpolants of the
  // state marginals at the reference grid, so it carries an O(sigma *
  // sqrt(dt)) floor between coarse nodes even when the control matches
  // exactly; it must still shrink with refinement.
  REQUIRE(res.flow_gaps.size() == 2);
  CHECK(res.flow_gaps[1] < res.flow_gaps[0]);
}

TEST_CASE("quadratic interaction shrinks gaps as the grid refines") {
  mfg::LqConfig cfg;
  cfg.c = 1.0;
  cfg.c_l = 1.0;
  cfg.sigma = 0.5;
  const mfg::MfgProblem problem = mfg::make_lq_problem(cfg);

  mfg::SolverOptions opts;
  opts.n_paths = 3000;
  opts.seed = 101;
  const std::vector<int> ks = {2, 4, 8};
  const mfg::SweepResult res = mfg::donsker_sweep(problem, ks, 64, opts);

  REQUIRE(res.k_ref == 64);
  REQUIRE(res.control_gaps.size() == 3);
  REQUIRE(res.state_gaps.size() == 3);
  REQUIRE(res.flow_gaps.size() == 3);
  REQUIRE(res.control_gap_stderr.size() == 3);
  REQUIRE(res.state_gap_stderr.size() == 3);
  for (char c : res.converged) CHECK(c == 1);
  for (int it : res.iterations) CHECK(it >= 1);

  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(res.control_gaps[i] > 0.0);
    CHECK(res.state_gaps[i] > 0.0);
    CHECK(res.control_gap_stderr[i] > 0.0);
    CHECK(res.state_gap_stderr[i] > 0.0);
  }
  // Squared gaps shrink with refinement.
  CHECK(res.control_gaps[2] < res.control_gaps[0]);
  CHECK(res.state_gaps[2] < res.state_gaps[0]);
  CHECK(res.flow_gaps[2] < res.flow_gaps[0] + 1e-9);

  CHECK(std::isfinite(res.control_slope));
  CHECK(std::isfinite(res.state_slope));
  CHECK(res.control_slope < -0.2);
  CHECK(res.state_slope < -0.4);
}
