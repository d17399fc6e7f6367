"""Mittag-Leffler type functions by direct, certified series summation.

All functions work on real arguments and parameters.  Truncation uses a
geometric majorant of the tail: once a rigorous bound ``q`` on all later
term ratios drops below 1/2, the remainder after term ``t_n`` is at most
``|t_n| q / (1 - q)``, and summation stops when that falls below the
requested relative tolerance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln, gammasgn

from .errors import DimensionMismatch, DomainError, NonConvergence, ValidationError

EPS = float(np.finfo(float).eps)
DEFAULT_TOL = 1e-14
TERM_CAP = 10_000
LAYER_CAP = 200

# Gamma attains its minimum on (0, inf) here; it is increasing to the right.
GAMMA_ARGMIN = 1.4616321449683622
LOG_GAMMA_MIN = math.log(0.8856031944108887)

# Rounding error estimate (eps * sum|terms|) allowed relative to max(|sum|, 1).
_CANCELLATION_LIMIT = 1e-8


@dataclass(frozen=True)
class MLParams:
    alpha: float
    beta: float
    theta: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if not (math.isfinite(self.beta) and math.isfinite(self.theta)):
            raise ValidationError("beta and theta must be finite")


@dataclass(frozen=True)
class MvMLParams:
    alphas: tuple
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if not self.alphas:
            raise ValidationError("multivariate Mittag-Leffler needs at least one alpha")
        if not all(math.isfinite(a) and a > 0 for a in self.alphas):
            raise ValidationError(f"all alphas must be positive, got {self.alphas}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValidationError(f"beta must be positive, got {self.beta}")


def pochhammer(theta: float, n: int) -> float:
    """Rising factorial ``theta (theta+1) ... (theta+n-1)``, with ``(theta)_0 = 1``."""
    if n < 0:
        raise DomainError("pochhammer needs n >= 0")
    out = 1.0
    for k in range(n):
        out *= theta + k
    return out


def log_gamma_floor(x: float) -> float:
    """A lower bound for log Gamma(y) valid for every y >= x > 0, nondecreasing in x."""
    if x >= GAMMA_ARGMIN:
        return float(gammaln(x))
    return LOG_GAMMA_MIN


def prabhakar_coefficients(alpha: float, beta: float, theta: float):
    """Yield ``(log|c_n|, sign c_n)`` for ``c_n = (theta)_n / (n! Gamma(alpha n + beta))``.

    The generator returns once the Pochhammer factor vanishes (theta a
    nonpositive integer), since every later coefficient is then zero.
    A Gamma pole with a nonzero numerator raises ``DomainError``.
    """
    log_poch, sign_poch = 0.0, 1.0
    n = 0
    while True:
        x = alpha * n + beta
        if x <= 0 and x == math.floor(x):
            raise DomainError(
                f"Gamma pole at alpha*n+beta = {x:g} (n={n}) with nonzero Pochhammer factor"
            )
        yield log_poch - float(gammaln(n + 1)) - float(gammaln(x)), sign_poch * float(gammasgn(x))
        f = theta + n
        if f == 0:
            return
        log_poch += math.log(abs(f))
        sign_poch *= math.copysign(1.0, f)
        n += 1


def prabhakar_ratio_bound(alpha: float, beta: float, theta: float, zabs: float, n: int):
    """Bound on ``|t_{k+1}/t_k|`` for all ``k >= n`` of the three-parameter series.

    Returns None while no such bound is available (``theta + n <= 0`` or
    ``alpha n + beta <= 0``).
    """
    x = alpha * n + beta
    if theta + n <= 0 or x <= 0:
        return None
    if zabs == 0:
        return 0.0
    factor = max(1.0, (theta + n) / (n + 1))
    return zabs * factor * math.exp(float(gammaln(x) - gammaln(x + alpha)))


def sum_series(
    term: Callable[[int], Optional[np.ndarray]],
    ratio_bound: Callable[[int], Optional[float]],
    tol: float = DEFAULT_TOL,
    max_terms: int = TERM_CAP,
    label: str = "series",
) -> np.ndarray:
    """Elementwise compensated sum of ``term(0), term(1), ...``.

    ``term(n)`` returns an array (all the same shape) or None when the
    series has terminated exactly.  ``ratio_bound(n)`` bounds every later
    term ratio; see the module docstring for the stopping rule.
    """
    s = c = absum = None
    for n in range(max_terms):
        t = term(n)
        if t is None:
            if s is None:
                raise NonConvergence(f"{label}: empty series")
            return _finish(s + c, absum, label)
        t = np.asarray(t, dtype=float)
        if not np.all(np.isfinite(t)):
            raise NonConvergence(f"{label}: non-finite term at n={n}")
        if s is None:
            s = np.zeros_like(t)
            c = np.zeros_like(t)
            absum = np.zeros_like(t)
        # Neumaier compensated summation
        with np.errstate(over="ignore"):
            tmp = s + t
        if not np.all(np.isfinite(tmp)):
            raise NonConvergence(f"{label}: partial sum overflowed at n={n}")
        c += np.where(np.abs(s) >= np.abs(t), (s - tmp) + t, (t - tmp) + s)
        s = tmp
        with np.errstate(over="ignore"):
            absum += np.abs(t)
        q = ratio_bound(n)
        if q is not None and q < 0.5:
            total = s + c
            tail = np.abs(t) * (q / (1.0 - q))
            if np.all(tail <= tol * np.maximum(np.abs(total), EPS * absum)):
                return _finish(total, absum, label)
    raise NonConvergence(
        f"{label}: tail bound did not drop below tol={tol:g} within {max_terms} terms"
    )


def _finish(total, absum, label):
    if np.any(EPS * absum > _CANCELLATION_LIMIT * np.maximum(np.abs(total), 1.0)):
        raise NonConvergence(
            f"{label}: catastrophic cancellation (sum of |terms| = {np.max(absum):.3e}); "
            "argument too large for direct summation"
        )
    return total


def ml3(p: MLParams, z, tol: float = DEFAULT_TOL, max_terms: int = TERM_CAP):
    """Three-parameter (Prabhakar) Mittag-Leffler function E^theta_{alpha,beta}(z).

    ``z`` may be a scalar or an array; the result has the same shape.
    """
    z = np.asarray(z, dtype=float)
    flat = np.atleast_1d(z).ravel()
    if not np.all(np.isfinite(flat)):
        raise DomainError("ml3 needs finite arguments")
    zabs = np.abs(flat)
    nonzero = zabs > 0
    logz = np.where(nonzero, np.log(np.where(nonzero, zabs, 1.0)), 0.0)
    negative = flat < 0
    coeffs = prabhakar_coefficients(p.alpha, p.beta, p.theta)
    zmax = float(zabs.max()) if flat.size else 0.0

    def term(n):
        try:
            lc, sc = next(coeffs)
        except StopIteration:
            return None
        if n == 0:
            return np.full(flat.shape, sc * math.exp(lc))
        with np.errstate(over="ignore"):
            mag = np.where(nonzero, np.exp(lc + n * logz), 0.0)
        sign = np.where(negative & (n % 2 == 1), -sc, sc)
        return sign * mag

    out = sum_series(
        term,
        lambda n: prabhakar_ratio_bound(p.alpha, p.beta, p.theta, zmax, n),
        tol,
        max_terms,
        label=f"E^{p.theta:g}_({p.alpha:g},{p.beta:g})",
    )
    out = out.reshape(z.shape)
    return float(out) if z.ndim == 0 else out


def ml2(alpha: float, beta: float, z, tol: float = DEFAULT_TOL, max_terms: int = TERM_CAP):
    """Two-parameter Mittag-Leffler function E_{alpha,beta}(z)."""
    return ml3(MLParams(alpha, beta, 1.0), z, tol, max_terms)


@lru_cache(maxsize=4096)
def compositions(k: int, n: int) -> np.ndarray:
    """All ``(k_1, ..., k_n)`` of nonnegative integers with sum ``k``, shape (count, n)."""
    if n == 1:
        return np.array([[k]], dtype=np.int64)
    rows = []
    for bars in itertools.combinations(range(k + n - 1), n - 1):
        edges = (-1,) + bars + (k + n - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(n)])
    out = np.array(rows, dtype=np.int64)
    out.setflags(write=False)
    return out


def multinomial_layer(k: int, weights: Sequence[float], values: Sequence[float]):
    """Terms of total degree ``k`` in ``(sum_i x_i)^k`` with ``x_i = values[i]``.

    Returns ``(shift, log|coef|, sign)`` arrays where
    ``coef = k!/(k_1!...k_n!) prod values_i^{k_i}`` and
    ``shift = sum_i weights_i k_i``.  Terms that vanish because some
    ``values_i = 0`` appears with ``k_i > 0`` are dropped.
    """
    ks = compositions(k, len(values))
    vals = np.asarray(values, dtype=float)
    zero = vals == 0
    if np.any(zero):
        ks = ks[~np.any(ks[:, zero] > 0, axis=1)]
    absv = np.abs(np.where(zero, 1.0, vals))
    logc = gammaln(k + 1) - gammaln(ks + 1).sum(axis=1) + (ks * np.log(absv)).sum(axis=1)
    negatives = (ks * (vals < 0)).sum(axis=1)
    sign = np.where(negatives % 2 == 1, -1.0, 1.0)
    shift = ks @ np.asarray(weights, dtype=float)
    return shift, logc, sign


def multivariate_layer_majorant(k: int, zsum: float, wmin: float, base: float) -> float:
    """log of ``zsum^k / G(base + wmin k)``, an upper bound for layer ``k`` in absolute value."""
    if zsum == 0:
        return -math.inf if k > 0 else -log_gamma_floor(base)
    return k * math.log(zsum) - log_gamma_floor(base + wmin * k)


def multivariate_tail_bound(k: int, zsum: float, wmin: float, base: float) -> Optional[float]:
    """Bound on the sum of all layers after ``k``, or None if decay is not yet certified."""
    if zsum == 0:
        return 0.0
    x = base + wmin * (k + 1)
    r = zsum * math.exp(log_gamma_floor(x) - log_gamma_floor(x + wmin))
    if r >= 1.0:
        return None
    return math.exp(multivariate_layer_majorant(k + 1, zsum, wmin, base)) / (1.0 - r)


def ml_multivariate(
    p: MvMLParams,
    zs: Sequence[float],
    tol: float = DEFAULT_TOL,
    max_layers: int = LAYER_CAP,
) -> float:
    """Multivariate Mittag-Leffler function E_{(alpha_1..alpha_n), beta}(z_1..z_n).

    Summed layer by layer in the total degree ``k = k_1 + ... + k_n``.
    """
    zs = [float(z) for z in zs]
    if len(zs) != len(p.alphas):
        raise DimensionMismatch(f"expected {len(p.alphas)} arguments, got {len(zs)}")
    if not all(math.isfinite(z) for z in zs):
        raise DomainError("ml_multivariate needs finite arguments")
    zsum = sum(abs(z) for z in zs)
    wmin = min(p.alphas)
    partial: list = []
    absum = 0.0
    small_run = 0
    for k in range(max_layers + 1):
        shift, logc, sign = multinomial_layer(k, p.alphas, zs)
        terms = sign * np.exp(logc - gammaln(p.beta + shift))
        layer = math.fsum(terms)
        partial.append(layer)
        absum += float(np.abs(terms).sum())
        total = math.fsum(partial)
        scale = max(abs(total), EPS * absum)
        small_run = small_run + 1 if abs(layer) <= tol * scale else 0
        tail = multivariate_tail_bound(k, zsum, wmin, p.beta)
        if tail is not None and tail <= tol * scale and (small_run >= 2 or tail == 0.0):
            return float(_finish(np.array(total), np.array(absum), "multivariate E"))
    raise NonConvergence(
        f"multivariate Mittag-Leffler: no certified decay within {max_layers} layers"
    )
