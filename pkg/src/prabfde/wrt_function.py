"""Equations with derivatives taken with respect to a function psi.

With ``tau = psi(t)`` the psi-operators become the plain operators in
``tau`` (conjugation by the substitution ``f -> f o psi``).  A psi-problem
is therefore solved on a uniform grid in ``tau`` over ``[0, psi(T)]`` and
mapped back to the nodes ``t_k`` by monotone cubic interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import OutOfRange, PsiValidation, ValidationError
from .fracops import GridFn, PrabIntParams, unit_integral
from .solver import ProblemSpec, Solution, SolveConfig, solve_ivp

SWEEP_POINTS = 1024
CONSISTENCY_POINTS = 512
CONSISTENCY_RTOL = 0.05
INVERSE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PsiFunction:
    """A C^1 strictly increasing map with ``psi(0) = 0``, and its derivative."""

    psi: Callable
    psi_prime: Callable
    T: float
    name: str = "custom"

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise PsiValidation(f"T must be positive, got {self.T}")
        if abs(float(self.psi(0.0))) > 1e-14:
            raise PsiValidation(f"psi(0) must be 0, got {float(self.psi(0.0))}")
        t = np.linspace(0.0, self.T, SWEEP_POINTS)
        y = np.asarray(self.psi(t), dtype=float)
        dy = np.asarray(self.psi_prime(t), dtype=float)
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(dy))):
            raise PsiValidation("psi or psi' is not finite on [0, T]")
        if np.any(dy <= 0):
            k = int(np.argmax(dy <= 0))
            raise PsiValidation(f"psi' must be positive, got {dy[k]:g} at t = {t[k]:g}")
        if np.any(np.diff(y) <= 0):
            raise PsiValidation("psi is not strictly increasing on [0, T]")
        self._check_derivative()

    def _check_derivative(self):
        t = np.linspace(0.0, self.T, CONSISTENCY_POINTS + 1)
        h = t[1] - t[0]
        fd = np.diff(np.asarray(self.psi(t), dtype=float)) / h
        mid = np.asarray(self.psi_prime(t[:-1] + 0.5 * h), dtype=float)
        bad = np.abs(fd - mid) > CONSISTENCY_RTOL * np.abs(mid)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise PsiValidation(
                f"psi' is inconsistent with psi near t = {t[k]:g} "
                f"(difference quotient {fd[k]:g}, psi' {mid[k]:g})"
            )

    def __call__(self, t):
        return self.psi(t)

    @property
    def upper(self) -> float:
        return float(self.psi(self.T))

    @classmethod
    def identity(cls, T: float) -> "PsiFunction":
        return cls(lambda t: 1.0 * np.asarray(t), lambda t: np.ones_like(np.asarray(t, float)), T, "identity")

    @classmethod
    def affine(cls, T: float, a: float = 1.0) -> "PsiFunction":
        if not a > 0:
            raise PsiValidation(f"affine slope must be positive, got {a}")
        return cls(lambda t: a * np.asarray(t), lambda t: np.full_like(np.asarray(t, float), a), T, "affine")

    @classmethod
    def exp_sat(cls, T: float, lam: float = 1.0) -> "PsiFunction":
        """``1 - exp(-lam t)``."""
        if not lam > 0:
            raise PsiValidation(f"lambda must be positive, got {lam}")
        return cls(
            lambda t: -np.expm1(-lam * np.asarray(t)),
            lambda t: lam * np.exp(-lam * np.asarray(t)),
            T,
            "exp_sat",
        )

    @classmethod
    def power(cls, T: float, p: float = 2.0, c: float = 1.0) -> "PsiFunction":
        """``(t + c)^p - c^p``."""
        if not (p > 0 and c > 0):
            raise PsiValidation(f"power family needs p > 0 and c > 0, got p={p}, c={c}")
        return cls(
            lambda t: (np.asarray(t) + c) ** p - c ** p,
            lambda t: p * (np.asarray(t) + c) ** (p - 1),
            T,
            "power",
        )


FAMILIES = {
    "identity": PsiFunction.identity,
    "affine": PsiFunction.affine,
    "exp_sat": PsiFunction.exp_sat,
    "power": PsiFunction.power,
}


def psi_inverse(psi: PsiFunction, y: float) -> float:
    """Solve ``psi(t) = y`` on ``[0, T]`` by Newton steps safeguarded with bisection."""
    y = float(y)
    top = psi.upper
    if not 0.0 <= y <= top:
        raise OutOfRange(f"{y} lies outside the range [0, {top}] of psi")
    lo, hi = 0.0, psi.T
    if y == 0.0:
        return 0.0
    if y == top:
        return psi.T
    target = INVERSE_TOL * (1.0 + abs(y))
    t = lo + (hi - lo) * (y / top)
    for _ in range(200):
        r = float(psi.psi(t)) - y
        if abs(r) <= target:
            return t
        if r > 0:
            hi = t
        else:
            lo = t
        d = float(psi.psi_prime(t))
        step = t - r / d if d > 0 else None
        t = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, hi):
            break
    if abs(float(psi.psi(t)) - y) <= target:
        return t
    raise OutOfRange(f"psi could not be inverted at y = {y} to the required accuracy")


def psi_inverse_array(psi: PsiFunction, y) -> np.ndarray:
    return np.array([psi_inverse(psi, float(v)) for v in np.ravel(y)]).reshape(np.shape(y))


@dataclass(frozen=True, eq=False)
class PsiProblemSpec:
    """A problem whose derivatives are taken with respect to ``psi``.

    ``base`` holds the orders, coefficients and forcing as functions of
    ``t``, and the initial values ``e_k`` of the psi-derivatives
    ``((1/psi') d/dt)^k v`` at 0.
    """

    base: ProblemSpec
    psi: PsiFunction
    e: Optional[tuple] = field(default=None)

    def __post_init__(self):
        if self.e is not None:
            object.__setattr__(self, "base", self.base.with_(e=self.e))
        object.__setattr__(self, "e", self.base.e)
        if abs(self.psi.T - self.base.T) > 1e-12 * self.base.T:
            raise ValidationError(
                f"psi is validated on [0, {self.psi.T}] but the problem horizon is {self.base.T}"
            )
        for name, fn in [("g", self.base.g)] + [
            (f"sigma_{i + 1}", s) for i, s in enumerate(self.base.sigmas)
        ]:
            if not (callable(fn) or np.ndim(fn) == 0):
                raise ValidationError(
                    f"{name} must be a function of t or a constant for a psi-problem, "
                    "tables cannot be reparametrised"
                )


def _compose(fn, inv: Callable):
    if callable(fn):
        return lambda tau: np.asarray(fn(inv(tau)), dtype=float)
    return fn


def tau_problem(problem: PsiProblemSpec) -> ProblemSpec:
    """The plain problem in ``tau = psi(t)`` on ``[0, psi(T)]``."""
    psi = problem.psi
    inv = lambda tau: psi_inverse_array(psi, np.minimum(np.asarray(tau, float), psi.upper))
    base = problem.base
    return base.with_(
        sigmas=tuple(_compose(s, inv) for s in base.sigmas),
        g=_compose(base.g, inv),
        T=psi.upper,
    )


def _map_back(values: np.ndarray, tau: np.ndarray, targets: np.ndarray) -> np.ndarray:
    return PchipInterpolator(tau, values)(targets)


def _map_back_v(v, u0, taylor, unit, tau, targets, tol):
    """Interpolate ``v = sum_j c_j tau^j/j! + I u`` with its singular part removed.

    ``v - taylor - u(0) I[1]`` vanishes to higher order at 0, so the
    monotone cubic only sees the smooth remainder; the removed parts are
    evaluated exactly at the targets.
    """

    def known(x):
        poly = sum(c * x ** j / math.factorial(j) for j, c in enumerate(taylor))
        return poly + u0 * unit_integral(unit, x, tol)

    rest = v - known(tau)
    return _map_back(rest, tau, targets) + known(targets)


def solve_ivp_wrt(
    problem: PsiProblemSpec,
    cfg: SolveConfig = SolveConfig(),
    solve: Callable[[ProblemSpec, SolveConfig], Solution] = solve_ivp,
) -> Solution:
    """Solve the psi-problem in ``tau`` space and return values at ``t_k``.

    The canonical functions come back as ``psi(t)^j/j! + ...``.
    """
    tp = tau_problem(problem)
    sol = solve(tp, cfg)
    base = problem.base
    T = base.T
    t = np.linspace(0.0, T, cfg.n_points)
    targets = np.clip(np.asarray(problem.psi(t), dtype=float), 0.0, tp.T)
    targets[0], targets[-1] = 0.0, tp.T
    tau = sol.v.t
    unit = PrabIntParams(base.alpha, base.betas[0], base.thetas[0], base.omega)

    def back(g: Optional[GridFn]) -> Optional[GridFn]:
        return None if g is None else GridFn(T, _map_back(g.values, tau, targets))

    def back_v(v: GridFn, u: GridFn, taylor) -> GridFn:
        vals = _map_back_v(v.values, u.values[0], taylor, unit, tau, targets, cfg.series_tol)
        return GridFn(T, vals)

    canonical = None
    if sol.canonical is not None and sol.canonical_u is not None:
        canonical = [
            back_v(vj, uj, [1.0 if k == j else 0.0 for k in range(j + 1)])
            for j, (vj, uj) in enumerate(zip(sol.canonical, sol.canonical_u))
        ]
    rp = None
    if sol.residual_pointwise is not None:
        rp = np.abs(_map_back(sol.residual_pointwise, tau, targets))
    return Solution(
        v=back_v(sol.v, sol.u, tp.e),
        u=back(sol.u),
        iterations=sol.iterations,
        final_update_norm=sol.final_update_norm,
        residual_norm=sol.residual_norm,
        canonical=canonical,
        canonical_u=None if sol.canonical_u is None else [back(c) for c in sol.canonical_u],
        forcing=back(sol.forcing),
        update_norms=sol.update_norms,
        residual_pointwise=rp,
        route=sol.route,
    )
