# Copyright 2026 The mfgsolve Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import pytest

import mfgsolve as mfg


def test_measures_and_transport():
    m1 = mfg.EmpiricalMeasure.equal([0.0, 2.0])
    m2 = mfg.EmpiricalMeasure.equal([1.0, 3.0])
    assert mfg.wasserstein(m1, m2, 2) == pytest.approx(1.0, abs=1e-12)
    assert m1.mean() == pytest.approx(1.0)
    assert m1.quantile(0.25) == 0.0

    mid = mfg.quantile_mix(m1, m2, 0.5)
    assert mid.mean() == pytest.approx(1.5, abs=1e-12)

    weighted = mfg.EmpiricalMeasure([0.0, 10.0], [0.25, 0.75])
    assert weighted.abs_moment(1) == pytest.approx(7.5)


def test_monotonicity_gap_with_python_callable():
    m1 = mfg.EmpiricalMeasure.equal([-1.0, 0.0, 1.0])
    m2 = mfg.EmpiricalMeasure.equal([0.0, 1.0, 2.0])
    gap = mfg.ll_monotonicity_gap(lambda x, m: x * m.mean(), m1, m2)
    assert gap == pytest.approx((m1.mean() - m2.mean()) ** 2, abs=1e-12)


def test_closed_form_recursion():
    params = mfg.LqParams()
    params.control_cost = 1.0
    params.coupling_cost = 1.0
    params.noise_var = 0.25
    stages = mfg.lq_g_recursion(params, 2, 1.0)
    assert stages.curvature[0] == pytest.approx(1.6, abs=1e-12)
    assert stages.policy_coeff[0] == pytest.approx(0.6, abs=1e-12)
    assert stages.policy_coeff[1] == pytest.approx(0.5, abs=1e-12)


def test_single_period_equilibrium():
    cfg = mfg.LqConfig()
    cfg.sigma = 0.5
    problem = mfg.make_lq_problem(cfg)
    assert problem.periods == 1

    opts = mfg.SolverOptions()
    opts.n_paths = 5000
    opts.seed = 3
    sol = mfg.solve_single_period(problem, opts)
    assert sol.report.converged
    assert abs(sol.measure.mean()) < 0.05
    # Optimal feedback (mean - x) / 2 at equilibrium mean 0.
    assert sol.policy.eval(0, 1.0) == pytest.approx(-0.5, abs=0.05)
    assert math.sqrt(sol.measure.abs_moment(2)) == pytest.approx(
        math.sqrt(0.5), abs=0.05
    )


def test_multi_period_methods_agree():
    cfg = mfg.LqConfig()
    cfg.c = 10.0
    cfg.sigma = 0.5
    cfg.periods = 2
    problem = mfg.make_lq_problem(cfg)

    opts = mfg.SolverOptions()
    opts.n_paths = 4000
    opts.seed = 5
    pasted = mfg.paste_equilibrium(problem, opts)
    backward = mfg.solve_mfg_bsde(problem, opts)
    assert pasted.report.converged
    assert backward.report.converged
    assert len(pasted.flow.measures) == 3
    w2 = mfg.wasserstein(pasted.flow.measures[2], backward.flow.measures[2], 2)
    assert w2 < 0.08


def test_fit_rate_and_workers():
    slope = mfg.fit_rate([2.0, 4.0, 8.0], [1.0, 0.5, 0.25])
    assert slope == pytest.approx(-1.0, abs=1e-12)

    mfg.set_worker_count(2)
    assert mfg.worker_count() == 2
    mfg.set_worker_count(0)

    with pytest.raises(Exception):
        mfg.fit_rate([2.0, 4.0], [1.0, 0.5])
