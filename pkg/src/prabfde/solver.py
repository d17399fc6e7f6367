"""Linear Caputo-Prabhakar equations with variable coefficients.

The problem is

    D^{theta_0}_{alpha,beta_0,omega} v + sum_i sigma_i(t) D^{theta_i}_{alpha,beta_i,omega} v = g,
    v^(k)(0) = e_k,  k < n_0 = floor(beta_0) + 1,

with Caputo-type derivatives.  For homogeneous initial data it is
equivalent to the Volterra equation of the second kind

    u + sum_i sigma_i I^{theta_0-theta_i}_{alpha,beta_0-beta_i,omega} u = g,
    v = I^{theta_0}_{alpha,beta_0,omega} u,

solved here by Picard iteration (each iterate is a partial sum of the
Neumann series).  General initial data are handled by superposition with
the canonical set ``v_j = t^j/j! - S(Phi_j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .errors import MaxItersExceeded, ValidationError
from .fracops import GridFn, KernelWeights, PrabIntParams, caputo_prabhakar_power, kernel_weights
from .ml_functions import DEFAULT_TOL, EPS

FunctionLike = Union[Callable, float, int, Sequence[float], np.ndarray, GridFn]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Initial value problem for the variable-coefficient equation.

    ``sigmas`` and ``g`` may be vectorised callables of ``t``, constants, or
    tables of values on the solver grid (tables must match the grid size
    exactly; they are never resampled).
    """

    alpha: float
    betas: Sequence[float]
    thetas: Sequence[float]
    omega: float
    sigmas: Sequence[FunctionLike] = ()
    g: FunctionLike = 0.0
    e: Optional[Sequence[float]] = None
    T: float = 1.0

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        thetas = tuple(float(th) for th in self.thetas)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "sigmas", tuple(self.sigmas))
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if not math.isfinite(self.omega):
            raise ValidationError("omega must be finite")
        if not betas:
            raise ValidationError("betas must contain at least beta_0")
        if not all(math.isfinite(b) for b in betas + thetas):
            raise ValidationError("betas and thetas must be finite")
        if len(thetas) != len(betas):
            raise ValidationError(
                f"thetas must match betas in length ({len(thetas)} != {len(betas)})"
            )
        if any(b1 <= b2 for b1, b2 in zip(betas, betas[1:])):
            raise ValidationError(
                "betas must be strictly decreasing (beta_0 > beta_1 > ... > beta_m)"
            )
        if betas[-1] < 0:
            raise ValidationError(f"beta_m must be nonnegative, got {betas[-1]}")
        if betas[0] == math.floor(betas[0]):
            raise ValidationError(f"beta_0 must be non-integer, got {betas[0]}")
        if len(self.sigmas) != len(betas) - 1:
            raise ValidationError(
                f"expected m = {len(betas) - 1} coefficient functions sigma_1..sigma_m, "
                f"got {len(self.sigmas)}"
            )
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValidationError(f"T must be positive, got {self.T}")
        n0 = int(math.floor(betas[0])) + 1
        e = (0.0,) * n0 if self.e is None else tuple(float(x) for x in self.e)
        if len(e) != n0:
            raise ValidationError(f"expected n_0 = {n0} initial values e_0..e_{n0 - 1}, got {len(e)}")
        if not all(math.isfinite(x) for x in e):
            raise ValidationError("initial values must be finite")
        object.__setattr__(self, "e", e)

    @property
    def m(self) -> int:
        return len(self.betas) - 1

    @property
    def n0(self) -> int:
        return int(math.floor(self.betas[0])) + 1

    @property
    def n(self) -> List[int]:
        """``n_i = floor(beta_i) + 1`` for every order."""
        return [int(math.floor(b)) + 1 for b in self.betas]

    def with_(self, **changes) -> "ProblemSpec":
        fields = dict(
            alpha=self.alpha,
            betas=self.betas,
            thetas=self.thetas,
            omega=self.omega,
            sigmas=self.sigmas,
            g=self.g,
            e=self.e,
            T=self.T,
        )
        fields.update(changes)
        return ProblemSpec(**fields)


@dataclass(frozen=True)
class SolveConfig:
    n_points: int = 1025
    picard_tol: float = 1e-10
    max_iters: int = 200
    series_tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.n_points < 33:
            raise ValidationError(f"n_points must be at least 33, got {self.n_points}")
        if not (self.picard_tol > 0 and self.series_tol > 0):
            raise ValidationError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be at least 1")


@dataclass
class Solution:
    v: GridFn
    u: GridFn
    iterations: int
    final_update_norm: float
    residual_norm: float
    canonical: Optional[List[GridFn]] = None
    forcing: Optional[GridFn] = None
    update_norms: List[float] = field(default_factory=list)
    residual_pointwise: Optional[np.ndarray] = None
    route: str = "picard"
    canonical_u: Optional[List[GridFn]] = None


def sample(fn: FunctionLike, t: np.ndarray, name: str = "function") -> np.ndarray:
    """Values of a callable, constant or table on the nodes ``t``."""
    if isinstance(fn, GridFn):
        vals = fn.values
    elif callable(fn):
        vals = np.asarray(fn(t), dtype=float)
    elif np.ndim(fn) == 0:
        vals = np.full(t.shape, float(fn))
    else:
        vals = np.asarray(fn, dtype=float)
        if vals.shape != t.shape:
            raise ValidationError(
                f"tabulated {name} has {vals.size} values but the grid has {t.size} points"
            )
    vals = np.array(np.broadcast_to(vals, t.shape), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValidationError(f"{name} is not finite on [0, T]")
    return vals


@dataclass(frozen=True, eq=False)
class Operators:
    """The discrete operators of one problem on one grid."""

    t: np.ndarray
    integral0: KernelWeights
    lower: List[KernelWeights]
    sigma: List[np.ndarray]

    def apply_volterra(self, U: np.ndarray) -> np.ndarray:
        """``sum_i sigma_i I_i U`` for one or several rows."""
        out = np.zeros_like(U)
        for K, s in zip(self.lower, self.sigma):
            out += s * K.apply(U)
        return out


def build_operators(problem: ProblemSpec, n_points: int, tol: float = DEFAULT_TOL) -> Operators:
    t = np.linspace(0.0, problem.T, n_points)
    h = problem.T / (n_points - 1)
    a, om = problem.alpha, problem.omega
    b0, th0 = problem.betas[0], problem.thetas[0]
    I0 = kernel_weights(PrabIntParams(a, b0, th0, om), h, n_points, tol)
    lower = [
        kernel_weights(PrabIntParams(a, b0 - bi, th0 - thi, om), h, n_points, tol)
        for bi, thi in zip(problem.betas[1:], problem.thetas[1:])
    ]
    sig = [sample(s, t, f"sigma_{i + 1}") for i, s in enumerate(problem.sigmas)]
    return Operators(t, I0, lower, sig)


def picard_iterate(ops: Operators, G: np.ndarray, tol: float, max_iters: int):
    """Iterate ``u <- G - sum_i sigma_i I_i u`` from ``u = G``.

    Returns ``(u, iterations, update_norms)``.  Several right-hand sides
    may be stacked as rows of ``G``.
    """
    U = np.array(G, dtype=float)
    norms: List[float] = []
    for it in range(1, max_iters + 1):
        new = G - ops.apply_volterra(U)
        d = float(np.max(np.abs(new - U))) if new.size else 0.0
        U = new
        norms.append(d)
        floor = 1e3 * EPS * max(1.0, float(np.max(np.abs(U))))
        if d < max(tol, floor):
            return U, it, norms
    raise MaxItersExceeded(max_iters, norms[-1])


def _pointwise_residual(ops: Operators, u: np.ndarray, forcing: np.ndarray) -> np.ndarray:
    r = u + ops.apply_volterra(u) - forcing
    return np.abs(r) / (1.0 + float(np.max(np.abs(forcing))))


def _homogeneous_solution(problem, ops, cfg, forcing) -> Solution:
    U, it, norms = picard_iterate(ops, forcing, cfg.picard_tol, cfg.max_iters)
    v = ops.integral0.apply(U)
    rp = _pointwise_residual(ops, U, forcing)
    T = problem.T
    return Solution(
        v=GridFn(T, v),
        u=GridFn(T, U),
        iterations=it,
        final_update_norm=norms[-1],
        residual_norm=float(rp.max()),
        forcing=GridFn(T, forcing),
        update_norms=norms,
        residual_pointwise=rp,
    )


def picard_solve(problem: ProblemSpec, cfg: SolveConfig = SolveConfig()) -> Solution:
    """Solve with homogeneous initial conditions by Picard iteration."""
    if any(x != 0 for x in problem.e):
        raise ValidationError("picard_solve needs homogeneous initial conditions; use solve_ivp")
    ops = build_operators(problem, cfg.n_points, cfg.series_tol)
    return _homogeneous_solution(problem, ops, cfg, sample(problem.g, ops.t, "g"))


def compute_rho(problem: ProblemSpec) -> List[Optional[int]]:
    """Smallest ``i >= 1`` with ``beta_i <= j``, for ``j < n_0`` (None if there is none)."""
    out: List[Optional[int]] = []
    for j in range(problem.n0):
        members = [i for i in range(1, problem.m + 1) if 0 <= problem.betas[i] <= j]
        out.append(min(members) if members else None)
    return out


def phi_j(problem: ProblemSpec, j: int, t_grid) -> GridFn:
    """``Phi_j(t) = sum_{i >= rho_j} sigma_i(t) t^(j-beta_i) E^(-theta_i)_{alpha,j-beta_i+1}(omega t^alpha)``."""
    if not 0 <= j < problem.n0:
        raise ValidationError(f"j must lie in 0..{problem.n0 - 1}")
    t = np.asarray(t_grid, dtype=float)
    rho = compute_rho(problem)[j]
    out = np.zeros_like(t)
    if rho is not None:
        for i in range(rho, problem.m + 1):
            s = sample(problem.sigmas[i - 1], t, f"sigma_{i}")
            out += s * caputo_prabhakar_power(
                j, problem.alpha, problem.betas[i], problem.thetas[i], problem.omega, t
            )
    return GridFn(float(t[-1]), out)


def _canonical(problem: ProblemSpec, ops: Operators, cfg: SolveConfig):
    """Canonical set, plus the fixed points ``u_j`` and the forcings ``Phi_j``."""
    t = ops.t
    phis = [phi_j(problem, j, t).values for j in range(problem.n0)]
    active = [j for j, p in enumerate(phis) if np.any(p != 0)]
    U = np.zeros((problem.n0, t.size))
    iterations = 0
    if active:
        Ua, iterations, _ = picard_iterate(
            ops, np.stack([phis[j] for j in active]), cfg.picard_tol, cfg.max_iters
        )
        U[active] = Ua
    V = ops.integral0.apply(U) if active else np.zeros_like(U)
    basis = [
        GridFn(problem.T, t ** j / math.factorial(j) - V[j]) for j in range(problem.n0)
    ]
    # v_j = t^j/j! + I u_j with u_j = -U_j
    return basis, -U, np.stack(phis), iterations


def canonical_solutions(problem: ProblemSpec, cfg: SolveConfig = SolveConfig()) -> List[GridFn]:
    """Solutions ``v_j`` of the homogeneous equation with ``v_j^(k)(0) = delta_jk``."""
    ops = build_operators(problem, cfg.n_points, cfg.series_tol)
    return _canonical(problem, ops, cfg)[0]


def solve_ivp(problem: ProblemSpec, cfg: SolveConfig = SolveConfig()) -> Solution:
    """General initial value problem: ``v = sum_j e_j v_j + V_h``."""
    ops = build_operators(problem, cfg.n_points, cfg.series_tol)
    g = sample(problem.g, ops.t, "g")
    sol = _homogeneous_solution(problem, ops, cfg, g)
    basis, Uc, phis, _ = _canonical(problem, ops, cfg)
    e = np.asarray(problem.e)
    v = sol.v.values + sum(ej * vj.values for ej, vj in zip(e, basis))
    u = sol.u.values + e @ Uc
    forcing = g - e @ phis
    rp = _pointwise_residual(ops, u, forcing)
    T = problem.T
    return Solution(
        v=GridFn(T, v),
        u=GridFn(T, u),
        iterations=sol.iterations,
        final_update_norm=sol.final_update_norm,
        residual_norm=float(rp.max()),
        canonical=basis,
        canonical_u=[GridFn(T, row) for row in Uc],
        forcing=GridFn(T, forcing),
        update_norms=sol.update_norms,
        residual_pointwise=rp,
    )


def effective_forcing(problem: ProblemSpec, t: np.ndarray) -> np.ndarray:
    """``g - sum_j e_j Phi_j``, the right-hand side seen by ``u``."""
    out = sample(problem.g, t, "g")
    for j, ej in enumerate(problem.e):
        if ej != 0:
            out = out - ej * phi_j(problem, j, t).values
    return out


def residual(problem: ProblemSpec, sol: Solution, tol: float = DEFAULT_TOL) -> float:
    """Relative sup-norm residual of ``u`` in the Volterra form of the equation."""
    n = sol.u.n_points
    ops = build_operators(problem, n, tol)
    forcing = sol.forcing.values if sol.forcing is not None else effective_forcing(problem, ops.t)
    return float(_pointwise_residual(ops, sol.u.values, forcing).max())
