import math

import numpy as np
import pytest

from prabfde import (
    MaxItersExceeded,
    ProblemSpec,
    SolveConfig,
    ValidationError,
    canonical_solutions,
    compute_rho,
    ml2,
    phi_j,
    picard_solve,
    residual,
    solve_ivp,
)
from prabfde.fracops import PrabIntParams, unit_integral
from prabfde.solver import effective_forcing

from problems import VARIABLE_SUITE, sig_t

CFG = SolveConfig(n_points=257)


def test_validation_messages_are_distinct():
    msgs = set()
    for betas in [(1.0, 0.3), (1.3, 1.3), (1.3, -0.2)]:
        with pytest.raises(ValidationError) as exc:
            ProblemSpec(0.5, betas, (0, 0), 0.0, (1.0,))
        msgs.add(str(exc.value).split(",")[0])
    assert len(msgs) == 3


@pytest.mark.parametrize(
    "kwargs,fragment",
    [
        (dict(alpha=0.0), "alpha"),
        (dict(thetas=(0.0,)), "thetas"),
        (dict(sigmas=()), "coefficient functions"),
        (dict(e=(1.0, 2.0, 3.0)), "initial values"),
        (dict(T=-1.0), "T must be positive"),
    ],
)
def test_other_validation(kwargs, fragment):
    base = dict(alpha=0.5, betas=(1.3, 0.4), thetas=(0.1, 0.2), omega=0.3, sigmas=(1.0,), g=1.0, e=None, T=1.0)
    base.update(kwargs)
    with pytest.raises(ValidationError, match=fragment):
        ProblemSpec(**base)


def test_config_validation():
    with pytest.raises(ValidationError):
        SolveConfig(n_points=16)
    with pytest.raises(ValidationError):
        SolveConfig(picard_tol=0.0)


def test_derived_counts():
    p = ProblemSpec(0.5, (2.5, 1.2, 0.3), (0, 0, 0), 0.0, (1.0, 1.0))
    assert (p.m, p.n0, p.n) == (2, 3, [3, 2, 1])
    assert p.e == (0.0, 0.0, 0.0)


def test_tabulated_sigma_must_match_grid():
    p = ProblemSpec(0.5, (0.7, 0.2), (0, 0), 0.0, (np.ones(100),), 1.0)
    with pytest.raises(ValidationError, match="tabulated"):
        picard_solve(p, CFG)
    ok = picard_solve(p.with_(sigmas=(np.ones(257),)), CFG)
    ref = picard_solve(p.with_(sigmas=(1.0,)), CFG)
    assert np.array_equal(ok.v.values, ref.v.values)


def test_no_lower_terms_is_one_iteration():
    p = ProblemSpec(0.6, (0.7,), (1.3,), 0.4, (), 1.0)
    sol = picard_solve(p, CFG)
    assert sol.iterations == 1
    assert np.max(np.abs(sol.v.values - unit_integral(PrabIntParams(0.6, 0.7, 1.3, 0.4), sol.v.t))) < 1e-13


def test_relaxation_with_unit_forcing():
    p = ProblemSpec(1.0, (0.6, 0.0), (0, 0), 0.0, (1.0,), 1.0)
    sol = picard_solve(p, SolveConfig(n_points=1025))
    exact = 1 - ml2(0.6, 1.0, -sol.v.t ** 0.6)
    assert np.max(np.abs(sol.v.values - exact)) < 5e-5


def test_picard_rejects_initial_values():
    p = ProblemSpec(1.0, (0.6, 0.0), (0, 0), 0.0, (1.0,), 1.0, (1.0,))
    with pytest.raises(ValidationError):
        picard_solve(p, CFG)


def test_max_iters():
    p = VARIABLE_SUITE["m2_a05_b08"].with_(e=(0.0,))
    with pytest.raises(MaxItersExceeded) as exc:
        picard_solve(p, SolveConfig(n_points=65, max_iters=3))
    assert exc.value.iterations == 3
    assert exc.value.last_update > 0


def test_compute_rho_examples():
    assert compute_rho(ProblemSpec(0.5, (2.5, 1.2, 0.3), (0, 0, 0), 0.0, (1.0, 1.0))) == [None, 2, 1]
    assert compute_rho(ProblemSpec(0.5, (1.5, 0.0), (0, 0), 0.0, (1.0,))) == [1, 1]
    assert compute_rho(ProblemSpec(0.5, (2.7, 2.4, 2.1), (0, 0, 0), 0.0, (1.0, 1.0))) == [None, None, None]


def test_phi_examples():
    t = np.linspace(0, 1, 33)
    p = ProblemSpec(0.5, (2.5, 1.2, 0.3), (0.3, 0.2, 0.1), 0.2, (1.0, 1.0))
    assert np.all(phi_j(p, 0, t).values == 0)
    q = ProblemSpec(0.7, (0.6, 0.0), (0.4, 0.0), 0.3, (2.5,))
    assert np.allclose(phi_j(q, 0, t).values, 2.5, rtol=1e-15)
    with pytest.raises(ValidationError):
        phi_j(q, 1, t)


def test_canonical_empty_w_is_pure_power():
    p = ProblemSpec(0.5, (2.7, 2.4), (0.5, 0.1), 0.3, (sig_t,))
    basis = canonical_solutions(p, CFG)
    t = basis[0].t
    for j in range(2):
        assert np.array_equal(basis[j].values, t ** j / math.factorial(j))


def test_canonical_relaxation():
    p = ProblemSpec(1.0, (0.7, 0.0), (0, 0), 0.0, (2.0,))
    (v0,) = canonical_solutions(p, SolveConfig(n_points=1025))
    assert np.max(np.abs(v0.values - ml2(0.7, 1.0, -2.0 * v0.t ** 0.7))) < 5e-5


def test_canonical_initial_values_and_slopes():
    p = VARIABLE_SUITE["m1_a05_b13"]
    basis = canonical_solutions(p, SolveConfig(n_points=1025))
    h = basis[0].h
    assert [b.values[0] for b in basis] == [1.0, 0.0]
    slopes = [(-3 * b.values[0] + 4 * b.values[1] - b.values[2]) / (2 * h) for b in basis]
    assert abs(slopes[0]) < 0.05 and abs(slopes[1] - 1) < 0.05


def test_zero_initial_values_match_picard_exactly():
    p = VARIABLE_SUITE["m2_a12_b11"].with_(e=(0.0, 0.0))
    a = solve_ivp(p, CFG)
    b = picard_solve(p, CFG)
    assert np.array_equal(a.v.values, b.v.values)
    assert a.canonical is not None and len(a.canonical) == 2


def test_unit_initial_vector_gives_canonical_function():
    p = VARIABLE_SUITE["m2_a12_b25"].with_(g=0.0, e=(0.0, 1.0, 0.0))
    sol = solve_ivp(p, CFG)
    assert np.max(np.abs(sol.v.values - sol.canonical[1].values)) == 0.0


def test_superposition():
    p = VARIABLE_SUITE["m1_a05_b24"]
    full = solve_ivp(p, CFG)
    ic_only = solve_ivp(p.with_(g=0.0), CFG)
    g_only = solve_ivp(p.with_(e=(0.0, 0.0, 0.0)), CFG)
    assert np.max(np.abs(full.v.values - ic_only.v.values - g_only.v.values)) < 1e-10


def test_initial_value_is_exact():
    for p in VARIABLE_SUITE.values():
        assert solve_ivp(p, SolveConfig(n_points=65)).v.values[0] == p.e[0]


def test_residual_of_converged_solve():
    p = VARIABLE_SUITE["m2_a05_b19"].with_(e=(1.0, 0.5))
    cfg = SolveConfig(n_points=257, picard_tol=1e-11)
    sol = solve_ivp(p, cfg)
    assert sol.residual_norm <= 10 * cfg.picard_tol
    again = residual(p, sol)
    assert again == pytest.approx(sol.residual_norm, rel=1e-6, abs=1e-15)


def test_residual_detects_perturbation():
    p = VARIABLE_SUITE["m1_a12_b07"]
    sol = solve_ivp(p, CFG)
    before = residual(p, sol)
    u = sol.u.values.copy()
    u[100] += 1.0
    sol.u = type(sol.u)(sol.u.T, u)
    assert residual(p, sol) > before + 0.1


def test_zero_problem():
    p = ProblemSpec(0.5, (1.3, 0.4), (0.7, 0.2), 0.3, (sig_t,), 0.0, (0.0, 0.0))
    sol = solve_ivp(p, CFG)
    assert np.all(sol.v.values == 0)
    assert sol.residual_norm == 0.0


def test_effective_forcing_matches_solution():
    p = VARIABLE_SUITE["m1_a05_b13"]
    sol = solve_ivp(p, CFG)
    assert np.allclose(effective_forcing(p, sol.v.t), sol.forcing.values, rtol=0, atol=1e-15)


def test_theta_zero_reduces_to_classical_caputo():
    # D^1.5 v + v = 0, v(0)=1, v'(0)=0: v = E_{1.5}(-t^1.5)
    p = ProblemSpec(1.0, (1.5, 0.0), (0.0, 0.0), 0.7, (1.0,), 0.0, (1.0, 0.0))
    sol = solve_ivp(p, SolveConfig(n_points=1025))
    assert np.max(np.abs(sol.v.values - ml2(1.5, 1.0, -sol.v.t ** 1.5))) < 1e-5


def test_grid_refinement_order():
    p = VARIABLE_SUITE["m2_a12_b11"]
    v = [solve_ivp(p, SolveConfig(n_points=n)).v.values for n in (129, 257, 513)]
    d1 = np.max(np.abs(v[0] - v[1][::2]))
    d2 = np.max(np.abs(v[1] - v[2][::2]))
    assert math.log2(d1 / d2) >= 1.0
