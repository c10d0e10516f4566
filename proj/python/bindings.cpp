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

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mfg/analytic.hpp"
#include "mfg/bsde.hpp"
#include "mfg/families.hpp"
#include "mfg/harness.hpp"
#include "mfg/measures.hpp"
#include "mfg/model.hpp"
#include "mfg/parallel.hpp"
#include "mfg/pasting.hpp"
#include "mfg/policy.hpp"
#include "mfg/single_period.hpp"

namespace py = pybind11;

namespace {

std::vector<double> to_vector(std::span<const double> s) {
  return std::vector<double>(s.begin(), s.end());
}

}  // namespace

PYBIND11_MODULE(mfgsolve, m) {
  m.doc() =
      "Discrete-time mean field game solvers: single-period fixed points, "
      "multi-period pasting, and backward-equation equilibria.";
  m.attr("__version__") = "0.1.0";

  // -------------------------------------------------------------- measures
  py::class_<mfg::EmpiricalMeasure>(m, "EmpiricalMeasure")
      .def(py::init<std::vector<double>, std::vector<double>, int>(),
           py::arg("points"), py::arg("weights"), py::arg("dim") = 1)
      .def_static("equal", &mfg::EmpiricalMeasure::equal, py::arg("points"),
                  py::arg("dim") = 1)
      .def_property_readonly("dim", &mfg::EmpiricalMeasure::dim)
      .def("__len__", &mfg::EmpiricalMeasure::size)
      .def_property_readonly(
          "points",
          [](const mfg::EmpiricalMeasure& self) {
            return to_vector(self.points());
          })
      .def_property_readonly(
          "weights",
          [](const mfg::EmpiricalMeasure& self) {
            return to_vector(self.weights());
          })
      .def("mean", &mfg::EmpiricalMeasure::mean1)
      .def("abs_moment", &mfg::EmpiricalMeasure::abs_moment, py::arg("p"))
      .def("quantile", &mfg::EmpiricalMeasure::quantile, py::arg("u"))
      .def("resample_equal", &mfg::EmpiricalMeasure::resample_equal,
           py::arg("n"));

  m.def("wasserstein", &mfg::wasserstein, py::arg("mu"), py::arg("nu"),
        py::arg("p"),
        "Exact p-Wasserstein distance between one-dimensional empirical "
        "measures (sliced approximation for d > 1).");
  m.def("quantile_mix", &mfg::quantile_mix, py::arg("a"), py::arg("b"),
        py::arg("lam"),
        "Displacement interpolation: mixes quantile functions with weight "
        "lam on b.");
  m.def(
      "ll_monotonicity_gap",
      [](const std::function<double(double, const mfg::EmpiricalMeasure&)>& u,
         const mfg::EmpiricalMeasure& m1, const mfg::EmpiricalMeasure& m2) {
        const mfg::MeasureFn fn =
            [&u](std::span<const double> x, const mfg::EmpiricalMeasure& mm) {
              return u(x[0], mm);
            };
        return mfg::ll_monotonicity_gap(fn, m1, m2);
      },
      py::arg("u"), py::arg("m1"), py::arg("m2"),
      "Signed pairing of u against m1 - m2; nonnegative for every pair "
      "exactly when u is monotone.");

  // ----------------------------------------------------------------- model
  py::enum_<mfg::NoiseKind>(m, "NoiseKind")
      .value("gaussian", mfg::NoiseKind::gaussian)
      .value("rademacher", mfg::NoiseKind::rademacher)
      .value("zero", mfg::NoiseKind::zero);

  py::class_<mfg::NoiseSpec>(m, "NoiseSpec")
      .def(py::init<>())
      .def_readwrite("kind", &mfg::NoiseSpec::kind);

  py::class_<mfg::MfgProblem>(m, "MfgProblem")
      .def_readonly("dim", &mfg::MfgProblem::dim)
      .def_readonly("horizon", &mfg::MfgProblem::horizon)
      .def_readonly("periods", &mfg::MfgProblem::periods)
      .def_property_readonly("sigma", &mfg::MfgProblem::sigma_scalar)
      .def_property_readonly("dt", &mfg::MfgProblem::dt)
      .def_readonly("lq", &mfg::MfgProblem::lq)
      .def("validate", &mfg::MfgProblem::validate);

  // -------------------------------------------------------------- families
  py::class_<mfg::LqConfig>(m, "LqConfig")
      .def(py::init<>())
      .def_readwrite("c", &mfg::LqConfig::c)
      .def_readwrite("c_l", &mfg::LqConfig::c_l)
      .def_readwrite("sigma", &mfg::LqConfig::sigma)
      .def_readwrite("xi_mean", &mfg::LqConfig::xi_mean)
      .def_readwrite("xi_std", &mfg::LqConfig::xi_std)
      .def_readwrite("horizon", &mfg::LqConfig::horizon)
      .def_readwrite("periods", &mfg::LqConfig::periods)
      .def_readwrite("action_lo", &mfg::LqConfig::action_lo)
      .def_readwrite("action_hi", &mfg::LqConfig::action_hi)
      .def_readwrite("noise", &mfg::LqConfig::noise);

  py::class_<mfg::PolyCost>(m, "PolyCost")
      .def(py::init<>())
      .def_readwrite("constant", &mfg::PolyCost::constant)
      .def_readwrite("x", &mfg::PolyCost::x)
      .def_readwrite("x2", &mfg::PolyCost::x2)
      .def_readwrite("x_mean", &mfg::PolyCost::x_mean)
      .def_readwrite("mean", &mfg::PolyCost::mean)
      .def_readwrite("mean2", &mfg::PolyCost::mean2)
      .def_readwrite("centered2", &mfg::PolyCost::centered2);

  py::class_<mfg::PolyConfig>(m, "PolyConfig")
      .def(py::init<>())
      .def_readwrite("control_cost", &mfg::PolyConfig::control_cost)
      .def_readwrite("coupling", &mfg::PolyConfig::coupling)
      .def_readwrite("terminal", &mfg::PolyConfig::terminal)
      .def_readwrite("drift_poly", &mfg::PolyConfig::drift_poly)
      .def_readwrite("drift_mean", &mfg::PolyConfig::drift_mean)
      .def_readwrite("sigma", &mfg::PolyConfig::sigma)
      .def_readwrite("xi_mean", &mfg::PolyConfig::xi_mean)
      .def_readwrite("xi_std", &mfg::PolyConfig::xi_std)
      .def_readwrite("horizon", &mfg::PolyConfig::horizon)
      .def_readwrite("periods", &mfg::PolyConfig::periods)
      .def_readwrite("action_lo", &mfg::PolyConfig::action_lo)
      .def_readwrite("action_hi", &mfg::PolyConfig::action_hi)
      .def_readwrite("noise", &mfg::PolyConfig::noise);

  py::class_<mfg::TanhConfig>(m, "TanhConfig")
      .def(py::init<>())
      .def_readwrite("c", &mfg::TanhConfig::c)
      .def_readwrite("drift_scale", &mfg::TanhConfig::drift_scale)
      .def_readwrite("sigma", &mfg::TanhConfig::sigma)
      .def_readwrite("xi_mean", &mfg::TanhConfig::xi_mean)
      .def_readwrite("xi_std", &mfg::TanhConfig::xi_std)
      .def_readwrite("horizon", &mfg::TanhConfig::horizon)
      .def_readwrite("action_lo", &mfg::TanhConfig::action_lo)
      .def_readwrite("action_hi", &mfg::TanhConfig::action_hi)
      .def_readwrite("noise", &mfg::TanhConfig::noise);

  m.def("make_lq_problem", &mfg::make_lq_problem, py::arg("config"));
  m.def("make_poly_problem", &mfg::make_poly_problem, py::arg("config"));
  m.def("make_tanh_problem", &mfg::make_tanh_problem, py::arg("config"));

  // --------------------------------------------------------------- options
  py::enum_<mfg::QuadratureKind>(m, "QuadratureKind")
      .value("auto_select", mfg::QuadratureKind::auto_select)
      .value("gauss_hermite", mfg::QuadratureKind::gauss_hermite)
      .value("common_random", mfg::QuadratureKind::common_random);

  py::enum_<mfg::Conditioner>(m, "Conditioner")
      .value("regression", mfg::Conditioner::regression)
      .value("exact_tree", mfg::Conditioner::exact_tree);

  py::class_<mfg::SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("damping", &mfg::SolverOptions::damping)
      .def_readwrite("max_iters", &mfg::SolverOptions::max_iters)
      .def_readwrite("tol_fixed_point", &mfg::SolverOptions::tol_fixed_point)
      .def_readwrite("tol_action", &mfg::SolverOptions::tol_action)
      .def_readwrite("quadrature", &mfg::SolverOptions::quadrature)
      .def_readwrite("gh_nodes", &mfg::SolverOptions::gh_nodes)
      .def_readwrite("crn_draws", &mfg::SolverOptions::crn_draws)
      .def_readwrite("moment_cap", &mfg::SolverOptions::moment_cap)
      .def_readwrite("moment_p", &mfg::SolverOptions::moment_p)
      .def_readwrite("policy_knots", &mfg::SolverOptions::policy_knots)
      .def_readwrite("basis_degree", &mfg::SolverOptions::basis_degree)
      .def_readwrite("basis_bumps", &mfg::SolverOptions::basis_bumps)
      .def_readwrite("ridge", &mfg::SolverOptions::ridge)
      .def_readwrite("conditioner", &mfg::SolverOptions::conditioner)
      .def_readwrite("seed", &mfg::SolverOptions::seed)
      .def_readwrite("n_paths", &mfg::SolverOptions::n_paths)
      .def_readwrite("sub_solve_paths", &mfg::SolverOptions::sub_solve_paths)
      .def_readwrite("value_grid", &mfg::SolverOptions::value_grid)
      .def_readwrite("initial_measure", &mfg::SolverOptions::initial_measure)
      .def_readwrite("estimate_exploitability",
                     &mfg::SolverOptions::estimate_exploitability);

  // --------------------------------------------------------------- results
  py::class_<mfg::EquilibriumReport>(m, "EquilibriumReport")
      .def_readonly("iterations", &mfg::EquilibriumReport::iterations)
      .def_readonly("residual", &mfg::EquilibriumReport::residual)
      .def_readonly("tolerance", &mfg::EquilibriumReport::tolerance)
      .def_readonly("converged", &mfg::EquilibriumReport::converged)
      .def_readonly("exploitability", &mfg::EquilibriumReport::exploitability)
      .def_readonly("exploitability_stderr",
                    &mfg::EquilibriumReport::exploitability_stderr)
      .def_readonly("residual_history",
                    &mfg::EquilibriumReport::residual_history);

  py::class_<mfg::FeedbackPolicy>(m, "FeedbackPolicy")
      .def_property_readonly("stages", &mfg::FeedbackPolicy::stages)
      .def("eval",
           [](const mfg::FeedbackPolicy& self, int stage, double x) {
             return self.eval(stage, x);
           },
           py::arg("stage"), py::arg("x"));

  py::class_<mfg::MeasureFlow>(m, "MeasureFlow")
      .def_readonly("times", &mfg::MeasureFlow::times)
      .def_readonly("measures", &mfg::MeasureFlow::measures);

  py::class_<mfg::SinglePeriodSolution>(m, "SinglePeriodSolution")
      .def_readonly("policy", &mfg::SinglePeriodSolution::policy)
      .def_readonly("measure", &mfg::SinglePeriodSolution::measure)
      .def_readonly("report", &mfg::SinglePeriodSolution::report);

  py::class_<mfg::MultiPeriodSolution>(m, "MultiPeriodSolution")
      .def_readonly("policy", &mfg::MultiPeriodSolution::policy)
      .def_readonly("flow", &mfg::MultiPeriodSolution::flow)
      .def_readonly("stage_reports", &mfg::MultiPeriodSolution::stage_reports)
      .def_readonly("report", &mfg::MultiPeriodSolution::report);

  py::class_<mfg::SweepResult>(m, "SweepResult")
      .def_readonly("ks", &mfg::SweepResult::ks)
      .def_readonly("k_ref", &mfg::SweepResult::k_ref)
      .def_property_readonly(
          "converged",
          [](const mfg::SweepResult& self) {
            std::vector<bool> out(self.converged.size());
            for (std::size_t i = 0; i < self.converged.size(); ++i) {
              out[i] = self.converged[i] != 0;
            }
            return out;
          })
      .def_readonly("iterations", &mfg::SweepResult::iterations)
      .def_readonly("flow_gaps", &mfg::SweepResult::flow_gaps)
      .def_readonly("control_gaps", &mfg::SweepResult::control_gaps)
      .def_readonly("control_gap_stderr",
                    &mfg::SweepResult::control_gap_stderr)
      .def_readonly("state_gaps", &mfg::SweepResult::state_gaps)
      .def_readonly("state_gap_stderr", &mfg::SweepResult::state_gap_stderr)
      .def_readonly("control_slope", &mfg::SweepResult::control_slope)
      .def_readonly("state_slope", &mfg::SweepResult::state_slope)
      .def_readonly("flow_slope", &mfg::SweepResult::flow_slope);

  // --------------------------------------------------------------- solvers
  m.def(
      "solve_single_period",
      [](const mfg::MfgProblem& problem, const mfg::SolverOptions& opts) {
        const mfg::PathBundle paths =
            mfg::sample_paths(problem, opts.n_paths, opts.seed);
        return mfg::solve_single_period(problem, problem.terminal_cost, opts,
                                        paths);
      },
      py::arg("problem"), py::arg("options") = mfg::SolverOptions{},
      py::call_guard<py::gil_scoped_release>(),
      "Damped fixed-point iteration on the one-period best-response map; "
      "scenarios are sampled from (options.n_paths, options.seed).");

  m.def(
      "paste_equilibrium",
      [](const mfg::MfgProblem& problem, const mfg::SolverOptions& opts,
         bool force_generic) {
        return mfg::paste_equilibrium(problem, opts, nullptr, force_generic);
      },
      py::arg("problem"), py::arg("options") = mfg::SolverOptions{},
      py::arg("force_generic") = false,
      py::call_guard<py::gil_scoped_release>(),
      "Multi-period equilibrium via backward value stages and forward "
      "per-period fixed points.");

  m.def(
      "solve_mfg_bsde",
      [](const mfg::MfgProblem& problem, const mfg::SolverOptions& opts) {
        return mfg::solve_mfg_bsde(problem, opts);
      },
      py::arg("problem"), py::arg("options") = mfg::SolverOptions{},
      py::call_guard<py::gil_scoped_release>(),
      "Equilibrium via iterated backward-equation solves with damped "
      "measure-flow updates.");

  m.def(
      "donsker_sweep",
      [](const mfg::MfgProblem& problem, const std::vector<int>& ks,
         int k_ref, const mfg::SolverOptions& opts) {
        return mfg::donsker_sweep(problem, ks, k_ref, opts);
      },
      py::arg("problem"), py::arg("ks"), py::arg("k_ref"),
      py::arg("options") = mfg::SolverOptions{},
      py::call_guard<py::gil_scoped_release>(),
      "Time-refinement study against a common reference grid; returns gaps "
      "and fitted log-log rates.");

  m.def(
      "fit_rate",
      [](const std::vector<double>& ks, const std::vector<double>& gaps) {
        return mfg::fit_rate(ks, gaps);
      },
      py::arg("ks"), py::arg("gaps"),
      "Least-squares slope of log(gap) against log(k).");

  // -------------------------------------------------------------- analytic
  py::class_<mfg::LqParams>(m, "LqParams")
      .def(py::init<>())
      .def_readwrite("control_cost", &mfg::LqParams::control_cost)
      .def_readwrite("coupling_cost", &mfg::LqParams::coupling_cost)
      .def_readwrite("noise_var", &mfg::LqParams::noise_var)
      .def_readwrite("xi_mean", &mfg::LqParams::xi_mean)
      .def_readwrite("xi_var", &mfg::LqParams::xi_var);

  py::class_<mfg::LqStageValues>(m, "LqStageValues")
      .def_readonly("curvature", &mfg::LqStageValues::curvature)
      .def_readonly("offset", &mfg::LqStageValues::offset)
      .def_readonly("policy_coeff", &mfg::LqStageValues::policy_coeff);

  m.def("lq_g_recursion", &mfg::lq_g_recursion, py::arg("params"),
        py::arg("k"), py::arg("period_dt") = 1.0,
        "Closed-form quadratic stage values for the linear-quadratic "
        "family.");

  // -------------------------------------------------------------- parallel
  m.def("worker_count", &mfg::worker_count);
  m.def("set_worker_count", &mfg::set_worker_count, py::arg("n"));
}
