"""Constant coefficients and a single theta: the multivariate Mittag-Leffler route.

For ``theta_i = theta`` and constant ``sigma_i`` the homogeneous-IC solution is

    v(t) = sum_n (theta)_n omega^n / n! int_0^t K_n(s) g(t-s) ds,
    K_n(s) = s^(beta_0+alpha n-1) E_{(gamma_1..gamma_m), alpha n+beta_0}(-sigma_1 s^gamma_1, ...),

with ``gamma_i = beta_0 - beta_i``.  Expanding the multivariate function
turns every ``K_n`` into a sum of powers of ``s``, each integrated exactly
against the piecewise-linear interpolant of ``g``.  The weights of all
terms are summed into one set of convolution weights.

Truncation bounds: the contribution of a term ``s^(q-1)/Gamma(q)`` is at most
``T^q / Gamma(q+1)`` times ``max|g|``; layer ``k`` of the inner series is
then dominated by ``Z^k / G(b + 1 + gamma_min k)`` with
``Z = sum |sigma_i| T^gamma_i`` and ``G`` the Gamma floor, and the outer
term ratios by the ``k = 0`` ratio (``Gamma(x)/Gamma(x+alpha)`` decreases).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import NonConvergence, ValidationError
from .fracops import GridFn, KernelWeights, power_hat_moments
from .ml_functions import (
    DEFAULT_TOL,
    EPS,
    LAYER_CAP,
    TERM_CAP,
    MvMLParams,
    log_gamma_floor,
    ml_multivariate,
    multinomial_layer,
    multivariate_layer_majorant,
    multivariate_tail_bound,
    pochhammer,
)
from .solver import (
    FunctionLike,
    ProblemSpec,
    Solution,
    SolveConfig,
    _pointwise_residual,
    build_operators,
    phi_j,
    sample,
)

# A layer majorant this far above the first one means the partial sums
# cancel beyond what double precision can resolve.
_GROWTH_LIMIT = 1e8


@dataclass(frozen=True, eq=False)
class ConstProblem:
    alpha: float
    betas: Sequence[float]
    theta: float
    omega: float
    sigmas: Sequence[float] = ()
    g: FunctionLike = 0.0
    e: Optional[Sequence[float]] = None
    T: float = 1.0

    def __post_init__(self):
        sig = []
        for i, s in enumerate(self.sigmas):
            if callable(s) or np.ndim(s) != 0:
                raise ValidationError(f"sigma_{i + 1} must be a constant for the constant-coefficient route")
            sig.append(float(s))
        object.__setattr__(self, "sigmas", tuple(sig))
        spec = self.to_problem_spec()
        object.__setattr__(self, "betas", spec.betas)
        object.__setattr__(self, "e", spec.e)

    def to_problem_spec(self) -> ProblemSpec:
        return ProblemSpec(
            alpha=self.alpha,
            betas=self.betas,
            thetas=(self.theta,) * len(tuple(self.betas)),
            omega=self.omega,
            sigmas=self.sigmas,
            g=self.g,
            e=self.e,
            T=self.T,
        )

    @property
    def gammas(self) -> tuple:
        return tuple(self.betas[0] - b for b in self.betas[1:])

    def with_(self, **changes) -> "ConstProblem":
        fields = dict(
            alpha=self.alpha, betas=self.betas, theta=self.theta, omega=self.omega,
            sigmas=self.sigmas, g=self.g, e=self.e, T=self.T,
        )
        fields.update(changes)
        return ConstProblem(**fields)


def mv_kernel(problem: ConstProblem, n: int, s: float, tol: float = DEFAULT_TOL) -> float:
    """``s^(beta_0+alpha n-1) E_{(gamma), alpha n+beta_0}(-sigma_i s^gamma_i)`` for ``s > 0``."""
    if not s > 0:
        raise ValidationError("mv_kernel needs s > 0")
    b = problem.alpha * n + problem.betas[0]
    if problem.sigmas:
        p = MvMLParams(problem.gammas, b)
        ml = ml_multivariate(p, [-sg * s ** gm for sg, gm in zip(problem.sigmas, problem.gammas)], tol)
    else:
        ml = math.exp(-math.lgamma(b))
    return s ** (b - 1.0) * ml


def _layer_series(base, gammas, zvals, T, h, n, tol, start=0):
    """Hat weights of ``sum_{k>=start} sum_|k| multinom prod z^k s^(base+sum gamma k-1)/Gamma(.)``.

    Tolerance is relative to the ``k = 0`` majorant ``T^base / G(base+1)``.
    Returns ``(far, near, majorant_sum)``.
    """
    far = np.zeros(n)
    near = np.zeros(n)
    zsum = sum(abs(z) * T ** g for z, g in zip(zvals, gammas))
    gmin = min(gammas) if gammas else 1.0
    lead = base * math.log(T)
    ref = math.exp(lead + multivariate_layer_majorant(0, zsum, gmin, base + 1.0))
    total_major = 0.0
    for k in range(start, LAYER_CAP + 1):
        major = math.exp(lead + multivariate_layer_majorant(k, zsum, gmin, base + 1.0)) if (zsum or k == 0) else 0.0
        if major > _GROWTH_LIMIT * ref:
            raise NonConvergence(
                "constant-coefficient series: layers grow too large for double precision "
                f"(sum |sigma_i| T^gamma_i = {zsum:.3g})"
            )
        total_major += major
        if gammas:
            shift, logc, sign = multinomial_layer(k, gammas, zvals)
        else:
            shift, logc, sign = np.zeros(1), np.zeros(1), np.ones(1)
        for sh, lc, sg in zip(shift, logc, sign):
            q = base + sh
            c = sg * math.exp(lc - math.lgamma(q))
            f, ne = power_hat_moments(q - 1.0, h, n)
            far += c * f
            near += c * ne
        tail = multivariate_tail_bound(k, zsum, gmin, base + 1.0)
        if tail is not None and tail * math.exp(lead) <= tol * ref:
            return far, near, total_major
        if not gammas or zsum == 0:
            return far, near, total_major
    raise NonConvergence(f"constant-coefficient series: no certified decay within {LAYER_CAP} layers")


def const_weights(problem: ConstProblem, n_points: int, tol: float = DEFAULT_TOL) -> KernelWeights:
    """Convolution weights of the solution operator ``g -> v`` for homogeneous ICs."""
    a, b0, th, om, T = problem.alpha, problem.betas[0], problem.theta, problem.omega, problem.T
    h = T / (n_points - 1)
    zvals = [-s for s in problem.sigmas]
    gammas = problem.gammas
    far = np.zeros(n_points)
    near = np.zeros(n_points)
    absum = 0.0
    for n in range(TERM_CAP):
        poch = pochhammer(th, n)
        if n > 0 and (om == 0 or poch == 0):
            break
        pref = poch * om ** n / math.factorial(n) if n < 170 else _log_prefactor(th, om, n)
        f, ne, major = _layer_series(a * n + b0, gammas, zvals, T, h, n_points, tol)
        far += pref * f
        near += pref * ne
        bound = abs(pref) * major
        absum += bound
        q = _outer_ratio(a, b0, th, abs(om) * T ** a, n)
        scale = max(abs(float(far.sum() + near.sum())), EPS * absum)
        if q is not None and q < 0.5 and bound * q / (1.0 - q) <= tol * scale:
            break
    else:
        raise NonConvergence(f"constant-coefficient outer series: no certified decay within {TERM_CAP} terms")
    return KernelWeights(None, h, far, near)


def _log_prefactor(th, om, n):
    lp = sum(math.log(abs(th + k)) for k in range(n)) - math.lgamma(n + 1) + n * math.log(abs(om))
    sign = (-1.0) ** sum(1 for k in range(n) if th + k < 0) * math.copysign(1.0, om) ** n
    return sign * math.exp(lp)


def _outer_ratio(a, b0, th, zabs, n):
    """Bound on every later outer-term ratio, or None before it exists."""
    if th + n <= 0:
        return None
    if zabs == 0:
        return 0.0
    x = a * n + b0 + 1.0
    factor = max(1.0, (th + n) / (n + 1))
    return zabs * factor * math.exp(log_gamma_floor(x) - log_gamma_floor(x + a))


def resolvent_weights(problem: ConstProblem, n_points: int, tol: float = DEFAULT_TOL) -> KernelWeights:
    """Weights of ``g -> u - g`` where ``u + sum sigma_i I^{gamma_i} u = g`` (RL integrals)."""
    h = problem.T / (n_points - 1)
    if not problem.sigmas:
        z = np.zeros(n_points)
        return KernelWeights(None, h, z, z.copy())
    far, near, _ = _layer_series(
        0.0, problem.gammas, [-s for s in problem.sigmas], problem.T, h, n_points, tol, start=1
    )
    return KernelWeights(None, h, far, near)


def solve_const_homog_ic(problem: ConstProblem, cfg: SolveConfig = SolveConfig()) -> GridFn:
    """Homogeneous-IC solution by the multivariate Mittag-Leffler representation."""
    if any(x != 0 for x in problem.e):
        raise ValidationError("solve_const_homog_ic needs homogeneous initial conditions")
    t = np.linspace(0.0, problem.T, cfg.n_points)
    W = const_weights(problem, cfg.n_points, cfg.series_tol)
    return GridFn(problem.T, W.apply(sample(problem.g, t, "g")))


def solve_const_ivp(problem: ConstProblem, cfg: SolveConfig = SolveConfig()) -> Solution:
    """General initial values: ``v = sum_j e_j v_j + V_h`` with ``v_j = t^j/j! - S(Phi_j)``."""
    spec = problem.to_problem_spec()
    N, T = cfg.n_points, problem.T
    t = np.linspace(0.0, T, N)
    W = const_weights(problem, N, cfg.series_tol)
    R = resolvent_weights(problem, N, cfg.series_tol)
    g = sample(problem.g, t, "g")
    phis = np.stack([phi_j(spec, j, t).values for j in range(spec.n0)])
    taylor = np.stack([t ** j / math.factorial(j) for j in range(spec.n0)])
    basis = taylor - W.apply(phis)
    canonical_u = -(phis + R.apply(phis))
    e = np.asarray(spec.e)
    forcing = g - e @ phis
    v = e @ taylor + W.apply(forcing)
    u = forcing + R.apply(forcing)
    ops = build_operators(spec, N, cfg.series_tol)
    rp = _pointwise_residual(ops, u, forcing)
    return Solution(
        v=GridFn(T, v),
        u=GridFn(T, u),
        iterations=0,
        final_update_norm=0.0,
        residual_norm=float(rp.max()),
        canonical=[GridFn(T, row) for row in basis],
        canonical_u=[GridFn(T, row) for row in canonical_u],
        forcing=GridFn(T, forcing),
        residual_pointwise=rp,
        route="const",
    )
