import math

import numpy as np
import pytest

from prabfde import (
    ConstProblem,
    NonConvergence,
    SolveConfig,
    ValidationError,
    ml2,
    ml_multivariate,
    mv_kernel,
    solve_const_homog_ic,
    solve_const_ivp,
    solve_ivp,
)
from prabfde.fracops import PrabIntParams, unit_integral
from prabfde.ml_functions import MvMLParams

from problems import CONST_SUITE

# brute-force 40-digit series, s^(beta0+alpha-1) E_{(0.9), 1.8}(-2 s^0.9) at s = 0.25
MV_KERNEL_REF = 0.2561392466688463443594696
CFG = SolveConfig(n_points=513)


def test_requires_constant_sigmas():
    with pytest.raises(ValidationError):
        ConstProblem(0.5, (1.3, 0.4), 0.7, 0.3, (lambda t: t,))
    with pytest.raises(ValidationError):
        ConstProblem(0.5, (1.0, 0.4), 0.7, 0.3, (1.0,))


def test_kernel_collapses():
    p = ConstProblem(0.5, (0.7, 0.0), 1.4, 0.3, (1.5,))
    s = 0.3
    assert mv_kernel(p, 0, s) == pytest.approx(s ** -0.3 * ml2(0.7, 0.7, -1.5 * s ** 0.7), rel=1e-13)
    q = ConstProblem(0.5, (1.3, 0.4), 0.7, 0.3, (0.0,))
    assert mv_kernel(q, 2, s) == pytest.approx(s ** (1.3 + 1.0 - 1) / math.gamma(2.3), rel=1e-14)


def test_kernel_reference():
    p = ConstProblem(0.5, (1.3, 0.4), 0.7, 0.3, (2.0,))
    assert mv_kernel(p, 1, 0.25) == pytest.approx(MV_KERNEL_REF, rel=1e-13)


def test_kernel_two_terms_uses_multivariate():
    p = ConstProblem(0.8, (2.4, 1.1, 0.3), 0.5, 0.4, (0.5, -1.0))
    s = 0.6
    ml = ml_multivariate(MvMLParams((1.3, 2.1), 0.8 + 2.4), (-0.5 * s ** 1.3, 1.0 * s ** 2.1))
    assert mv_kernel(p, 1, s) == pytest.approx(s ** (2.4 + 0.8 - 1) * ml, rel=1e-14)


def test_omega_zero_keeps_first_term():
    p = ConstProblem(0.5, (0.7,), 3.0, 0.0, (), 1.0)
    v = solve_const_homog_ic(p, CFG)
    assert np.allclose(v.values, v.t ** 0.7 / math.gamma(1.7), atol=1e-14)


def test_sigma_zero_unit_forcing_closed_form():
    p = ConstProblem(0.6, (1.4, 0.5), 1.3, 0.7, (0.0,), 1.0)
    v = solve_const_homog_ic(p, CFG)
    exact = unit_integral(PrabIntParams(0.6, 1.4, 1.3, 0.7), v.t)
    assert np.max(np.abs(v.values - exact)) < 1e-13


def test_relaxation():
    p = ConstProblem(1.0, (0.6, 0.0), 0.0, 0.0, (1.0,), 0.0, (1.0,))
    sol = solve_const_ivp(p, SolveConfig(n_points=1025))
    assert np.max(np.abs(sol.v.values - ml2(0.6, 1.0, -sol.v.t ** 0.6))) < 1e-12


def test_homogeneous_requires_zero_ic():
    with pytest.raises(ValidationError):
        solve_const_homog_ic(CONST_SUITE["c2"], CFG)


def test_zero_ic_is_homogeneous_solution():
    p = CONST_SUITE["c1"]
    assert np.array_equal(solve_const_ivp(p, CFG).v.values, solve_const_homog_ic(p, CFG).values)


@pytest.mark.parametrize("name", sorted(CONST_SUITE))
def test_route_equivalence(name):
    p = CONST_SUITE[name]
    c = solve_const_ivp(p, CFG)
    s = solve_ivp(p.to_problem_spec(), CFG)
    assert np.max(np.abs(c.v.values - s.v.values)) < 1e-4
    for a, b in zip(c.canonical, s.canonical):
        assert np.max(np.abs(a.values - b.values)) < 1e-4


def test_series_tolerance_self_consistency():
    p = CONST_SUITE["c5"]
    a = solve_const_ivp(p, SolveConfig(n_points=257, series_tol=1e-10)).v.values
    b = solve_const_ivp(p, SolveConfig(n_points=257, series_tol=5e-11)).v.values
    assert np.max(np.abs(a - b)) < 10 * 1e-10 * max(1.0, np.max(np.abs(b)))


def test_small_sigma_continuity():
    p = ConstProblem(0.5, (1.3, 0.4), 0.7, 0.3, (0.0,), lambda t: np.cos(t))
    a = solve_const_homog_ic(p, CFG).values
    b = solve_const_homog_ic(p.with_(sigmas=(1e-8,)), CFG).values
    assert 0 < np.max(np.abs(a - b)) < 1e-7


def test_unrepresentable_series_is_refused():
    p = ConstProblem(0.6, (0.45, 0.2), 2.0, -1.0, (3.0,), 1.0)
    with pytest.raises(NonConvergence):
        solve_const_ivp(p, CFG)
