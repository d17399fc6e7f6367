"""Prabhakar and Riemann-Liouville operators on uniform grids.

Functions live on ``t_k = k h``, ``h = T/(N-1)``.  Integrals are computed by
product integration: the integrand is replaced by its piecewise-linear
interpolant and integrated exactly against the kernel
``K(tau) = tau^(beta-1) E^theta_{alpha,beta}(omega tau^alpha)``, whose
moments are obtained term by term from its power series.  This handles the
weak singularity of the kernel at ``tau = 0`` exactly.

Weights have convolution structure.  On the interval ``[l h, (l+1) h]`` of
the kernel variable, the hat function attached to the far node contributes
``far[l]`` and the one attached to the near node ``near[l]``::

    (I f)(t_j) = sum_{l<j} far[l] f_{j-l-1} + near[l] f_{j-l}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError, ValidationError
from .ml_functions import (
    DEFAULT_TOL,
    TERM_CAP,
    MLParams,
    ml3,
    prabhakar_coefficients,
    prabhakar_ratio_bound,
    sum_series,
)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True, eq=False)
class GridFn:
    """Samples of a real function on the uniform grid over ``[0, T]``."""

    T: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValidationError("a grid function needs at least 2 samples")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValidationError(f"horizon T must be positive, got {self.T}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("grid function has non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, f, T: float, n_points: int) -> "GridFn":
        t = np.linspace(0.0, T, n_points)
        return cls(T, np.broadcast_to(np.asarray(f(t), dtype=float), t.shape))

    @property
    def n_points(self) -> int:
        return self.values.size

    @property
    def h(self) -> float:
        return self.T / (self.n_points - 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_points)

    def _check(self, other: "GridFn"):
        if other.n_points != self.n_points or other.T != self.T:
            raise DimensionMismatch("grid functions live on different grids")

    def __add__(self, other):
        if isinstance(other, GridFn):
            self._check(other)
            return GridFn(self.T, self.values + other.values)
        return GridFn(self.T, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFn):
            self._check(other)
            return GridFn(self.T, self.values - other.values)
        return GridFn(self.T, self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridFn):
            self._check(other)
            return GridFn(self.T, self.values * other.values)
        return GridFn(self.T, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFn(self.T, -self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class PrabIntParams:
    alpha: float
    beta: float
    theta: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "theta", "omega"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.alpha <= 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if self.beta <= 0:
            raise ValidationError(f"integral order beta must be positive, got {self.beta}")


def power_hat_moments(p: float, h: float, n: int):
    """Hat-function moments of ``tau^p`` on the cells ``[l h, (l+1) h]``, ``l < n``.

    Returns ``(far, near)`` with ``far[l] = (1/h) int tau^p (tau - l h)`` and
    ``near[l] = (1/h) int tau^p ((l+1) h - tau)`` over the cell.  Both are
    computed in the shifted variable, so there is no cancellation between
    the two moments of the kernel.
    """
    if p <= -1:
        raise DomainError(f"kernel exponent {p} is not integrable at 0")
    l = np.arange(n, dtype=float)
    far = np.empty(n)
    near = np.empty(n)
    scale0 = h ** (p + 1)
    far[0] = scale0 / (p + 2)
    near[0] = scale0 / ((p + 1) * (p + 2))
    if n == 1:
        return far, near
    # Smooth cells: Gauss-Legendre in the local coordinate y in [0, 1].
    gl = l >= max(2.0, 2.0 * p)
    gl[0] = False
    if np.any(gl):
        lg = l[gl]
        tau_p = ((lg[:, None] + _GL_NODES[None, :]) * h) ** p
        far[gl] = h * (tau_p @ (_GL_WEIGHTS * _GL_NODES))
        near[gl] = h * (tau_p @ (_GL_WEIGHTS * (1.0 - _GL_NODES)))
    closed = ~gl
    closed[0] = False
    if np.any(closed):
        lc = l[closed]
        L = np.log1p(1.0 / lc)
        q1, q2 = p + 1.0, p + 2.0
        phi1 = np.expm1(q1 * L) / q1
        phi2 = np.expm1(q2 * L) / q2
        base = np.exp(q1 * np.log(lc * h))  # (l h)^(p+1)
        total = base * phi1
        far[closed] = base * lc * (phi2 - phi1)
        near[closed] = total - far[closed]
    return far, near


@dataclass(frozen=True, eq=False)
class KernelWeights:
    """Product-integration weights of one Prabhakar integral on one grid.

    Only the two per-offset arrays are stored; ``row`` and ``dense`` expand
    them for inspection and for direct solvers.
    """

    params: Optional[PrabIntParams]
    h: float
    far: np.ndarray
    near: np.ndarray
    conv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        # Interior weight for offset d = j - k >= 1; conv[0] is the diagonal.
        conv = np.empty_like(self.near)
        conv[0] = self.near[0]
        conv[1:] = self.far[:-1] + self.near[1:]
        for a in (self.far, self.near, conv):
            a.setflags(write=False)
        object.__setattr__(self, "conv", conv)

    @property
    def n_points(self) -> int:
        return self.near.size

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Apply to samples; ``values`` may be (N,) or (r, N)."""
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.n_points:
            raise DimensionMismatch(
                f"weights built for {self.n_points} points, got {values.shape[-1]}"
            )
        if values.ndim == 2:
            return np.stack([self.apply(row) for row in values])
        n = self.n_points
        out = np.empty(n)
        out[0] = 0.0
        out[1:] = (
            np.convolve(self.far, values)[: n - 1]
            + np.convolve(self.near, values)[1:n]
            - self.near[1:] * values[0]
        )
        return out

    def row(self, j: int) -> np.ndarray:
        """Weights ``w[j, 0..j]``; row 0 is ``[0]``."""
        if j == 0:
            return np.zeros(1)
        w = np.empty(j + 1)
        w[j] = self.near[0]
        w[1:j] = self.conv[j - 1 : 0 : -1]
        w[0] = self.far[j - 1]
        return w

    def dense(self) -> np.ndarray:
        n = self.n_points
        W = np.zeros((n, n))
        for j in range(1, n):
            W[j, : j + 1] = self.row(j)
        return W


def kernel_weights(
    params: PrabIntParams, h: float, n_points: int, tol: float = DEFAULT_TOL
) -> KernelWeights:
    return _kernel_weights(params, float(h), int(n_points), float(tol))


@lru_cache(maxsize=64)
def _kernel_weights(params: PrabIntParams, h: float, n: int, tol: float) -> KernelWeights:
    a, b, th, om = params.alpha, params.beta, params.theta, params.omega
    if th == 0 or om == 0:
        far, near = power_hat_moments(b - 1.0, h, n)
        c0 = math.exp(-math.lgamma(b))
        return KernelWeights(params, h, far * c0, near * c0)
    coeffs = prabhakar_coefficients(a, b, th)
    tau_max = n * h
    sign_om = math.copysign(1.0, om)
    log_om = math.log(abs(om))

    def term(k):
        try:
            lc, sc = next(coeffs)
        except StopIteration:
            return None
        ck = sc * (sign_om ** k) * math.exp(lc + k * log_om)
        far, near = power_hat_moments(a * k + b - 1.0, h, n)
        return np.stack([far, near]) * ck

    out = sum_series(
        term,
        lambda k: prabhakar_ratio_bound(a, b, th, abs(om) * tau_max ** a, k),
        tol,
        TERM_CAP,
        label="Prabhakar kernel weights",
    )
    return KernelWeights(params, h, out[0].copy(), out[1].copy())


def kernel_moment(
    params: PrabIntParams, a: float, b: float, poly_degree: int = 0, tol: float = DEFAULT_TOL
) -> float:
    """Exact ``int_a^b K(tau) tau^d dtau`` for the Prabhakar kernel, ``d`` in {0, 1}."""
    if poly_degree not in (0, 1):
        raise DomainError("poly_degree must be 0 or 1")
    if not 0 <= a <= b:
        raise DomainError(f"need 0 <= a <= b, got a={a}, b={b}")
    if a == b:
        return 0.0
    al, be, th, om = params.alpha, params.beta, params.theta, params.omega
    coeffs = prabhakar_coefficients(al, be, th)
    ratio = a / b

    def term(k):
        try:
            lc, sc = next(coeffs)
        except StopIteration:
            return None
        if k > 0 and om == 0:
            return None
        q = al * k + be + poly_degree
        # (b^q - a^q)/q without cancellation
        span = -math.expm1(q * math.log(ratio)) if a > 0 else 1.0
        log_mag = lc + q * math.log(b) + (k * math.log(abs(om)) if k else 0.0)
        sign = sc * (math.copysign(1.0, om) ** k if k else 1.0)
        return np.array(sign * math.exp(log_mag) * span / q)

    return float(
        sum_series(
            term,
            lambda k: prabhakar_ratio_bound(al, be, th, abs(om) * b ** al, k),
            tol,
            TERM_CAP,
            label="kernel moment",
        )
    )


def prabhakar_integral(f: GridFn, params: PrabIntParams, tol: float = DEFAULT_TOL) -> GridFn:
    """Prabhakar integral ``int_0^t (t-s)^(beta-1) E^theta_{alpha,beta}(omega (t-s)^alpha) f(s) ds``."""
    w = kernel_weights(params, f.h, f.n_points, tol)
    return GridFn(f.T, w.apply(f.values))


def unit_integral(params: PrabIntParams, t, tol: float = DEFAULT_TOL):
    """Prabhakar integral of ``f = 1``: ``t^beta E^theta_{alpha,beta+1}(omega t^alpha)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    p = params
    out = t ** p.beta * ml3(MLParams(p.alpha, p.beta + 1.0, p.theta), p.omega * t ** p.alpha, tol)
    return float(out) if t.ndim == 0 else out


def rl_integral(f: GridFn, mu: float, tol: float = DEFAULT_TOL) -> GridFn:
    """Riemann-Liouville integral of order ``mu`` (the ``theta = 0`` Prabhakar integral)."""
    return prabhakar_integral(f, PrabIntParams(alpha=1.0, beta=mu, theta=0.0, omega=0.0), tol)


def caputo_prabhakar_power(j: int, alpha: float, beta: float, theta: float, omega: float, t):
    """``t^(j-beta) E^(-theta)_{alpha, j-beta+1}(omega t^alpha)``.

    This is the Riemann-Liouville type Prabhakar derivative of order
    ``beta`` of ``t^j / j!``.  Vectorised over ``t``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    e = j - beta
    at_zero = t == 0
    if e < 0 and np.any(at_zero):
        raise DomainError(f"t^{e:g} is singular at t = 0")
    tt = np.where(at_zero, 1.0, t)
    ml = ml3(MLParams(alpha, e + 1.0, -theta), omega * tt ** alpha)
    out = tt ** e * ml
    if np.any(at_zero):
        out = np.where(at_zero, (1.0 / math.gamma(e + 1.0)) if e == 0 else 0.0, out)
    return float(out) if t.ndim == 0 else out


def derivative_order(beta: float) -> int:
    """``m = floor(beta) + 1``."""
    return int(math.floor(beta)) + 1


def caputo_prabhakar_derivative(
    f_values: GridFn,
    f_deriv_m: GridFn,
    alpha: float,
    beta: float,
    theta: float,
    omega: float,
    tol: float = DEFAULT_TOL,
) -> GridFn:
    """Caputo-type Prabhakar derivative from samples of ``f^(m)``, ``m = floor(beta)+1``.

    Computed as the Prabhakar integral of order ``m - beta`` with
    parameter ``-theta`` applied to ``f^(m)``.
    """
    if beta < 0:
        raise DomainError("derivative order must be nonnegative")
    f_values._check(f_deriv_m)
    m = derivative_order(beta)
    return prabhakar_integral(f_deriv_m, PrabIntParams(alpha, m - beta, -theta, omega), tol)


def grid_derivative(values: np.ndarray, h: float, order: int = 1) -> np.ndarray:
    """Second-order finite-difference derivative of the given order."""
    out = np.asarray(values, dtype=float)
    for _ in range(order):
        out = np.gradient(out, h, edge_order=2)
    return out


def caputo_prabhakar_derivative_taylor(
    f: GridFn,
    taylor: Sequence[float],
    alpha: float,
    beta: float,
    theta: float,
    omega: float,
    tol: float = DEFAULT_TOL,
) -> GridFn:
    """Caputo-type Prabhakar derivative via the Riemann-Liouville form.

    ``taylor[j]`` holds ``f^(j)(0)`` for ``j < m``.  The Taylor polynomial is
    removed, the Prabhakar integral of order ``m - beta`` is taken, and the
    result is differentiated ``m`` times by finite differences, so accuracy
    is limited by the differencing (diagnostics grade).
    """
    if beta < 0:
        raise DomainError("derivative order must be nonnegative")
    m = derivative_order(beta)
    if len(taylor) < m:
        raise DimensionMismatch(f"need f^(j)(0) for j < {m}")
    t = f.t
    poly = sum(taylor[j] * t ** j / math.factorial(j) for j in range(m))
    g = prabhakar_integral(f - poly, PrabIntParams(alpha, m - beta, -theta, omega), tol)
    return GridFn(f.T, grid_derivative(g.values, f.h, m))
