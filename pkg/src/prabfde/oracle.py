"""Reference solutions by direct collocation of the Volterra equation.

Independent of the Picard and superposition code in ``solver``: general
initial values are removed by subtracting the Taylor polynomial
``P(t) = sum_j e_j t^j / j!`` (the Caputo derivative of order ``beta_0``
annihilates it), the lower-order derivatives of ``P`` are summed from their
own power series, and the resulting lower-triangular system is solved row
by row.  Only the kernel weights are shared with the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import poch, rgamma

from .errors import NonConvergence, SingularDiagonal, ValidationError
from .fracops import GridFn, PrabIntParams, kernel_weights
from .ml_functions import DEFAULT_TOL
from .solver import ProblemSpec, Solution, sample


@dataclass(frozen=True)
class OracleConfig:
    n_points: int = 4097
    quad_tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.n_points < 65:
            raise ValidationError(f"oracle needs n_points >= 65, got {self.n_points}")
        if not self.quad_tol > 0:
            raise ValidationError("quad_tol must be positive")


def monomial_derivative(j: int, alpha: float, beta: float, theta: float, omega: float, t: np.ndarray) -> np.ndarray:
    """Derivative of order ``beta`` of ``t^j/j!``, zero when ``j < beta``.

    Summed as ``sum_n (-theta)_n omega^n/n! t^(j-beta+alpha n)/Gamma(j-beta+alpha n+1)``.
    """
    t = np.asarray(t, dtype=float)
    if j < beta:
        return np.zeros_like(t)
    e = j - beta
    out = np.zeros_like(t)
    base = np.where(t > 0, t, 0.0) ** e if e > 0 else np.ones_like(t)
    x = omega * t ** alpha
    power = np.ones_like(t)
    small = 0
    for n in range(170):
        c = poch(-theta, n) / math.factorial(n)
        term = c * power * rgamma(e + alpha * n + 1.0)
        out += term
        if c == 0:
            return base * out
        small = small + 1 if np.all(np.abs(term) <= 1e-17 * np.abs(out)) else 0
        if small >= 3:
            return base * out
        power = power * x
    raise NonConvergence("monomial derivative series did not settle in 170 terms")


def _forward_substitution(diag_w, rows, sig, G):
    """Solve ``u_j + sum_i sig_i[j] (W_i u)_j = G_j`` for ``j = 0, 1, ...``."""
    n = G.size
    u = np.zeros(n)
    u[0] = G[0]
    for j in range(1, n):
        acc = 0.0
        d = 1.0
        for (far, conv), w0, s in zip(rows, diag_w, sig):
            if s[j] == 0:
                continue
            hist = far[j - 1] * u[0] + np.dot(conv[j - 1 : 0 : -1], u[1:j])
            acc += s[j] * hist
            d += s[j] * w0
        if d == 0:
            raise SingularDiagonal(f"zero diagonal at node {j}")
        u[j] = (G[j] - acc) / d
    return u


def volterra_direct(problem: ProblemSpec, cfg: OracleConfig = OracleConfig()) -> Solution:
    """Solve the equation by Taylor reduction and forward substitution."""
    N, T = cfg.n_points, problem.T
    t = np.linspace(0.0, T, N)
    h = T / (N - 1)
    a, om = problem.alpha, problem.omega
    b0, th0 = problem.betas[0], problem.thetas[0]
    I0 = kernel_weights(PrabIntParams(a, b0, th0, om), h, N, cfg.quad_tol)
    W = [
        kernel_weights(PrabIntParams(a, b0 - bi, th0 - ti, om), h, N, cfg.quad_tol)
        for bi, ti in zip(problem.betas[1:], problem.thetas[1:])
    ]
    sig = [sample(s, t, f"sigma_{i + 1}") for i, s in enumerate(problem.sigmas)]

    G = sample(problem.g, t, "g")
    P = np.zeros(N)
    for j, ej in enumerate(problem.e):
        if ej == 0:
            continue
        P += ej * t ** j / math.factorial(j)
        for s, bi, ti in zip(sig, problem.betas[1:], problem.thetas[1:]):
            G = G - ej * s * monomial_derivative(j, a, bi, ti, om, t)

    rows = [(w.far, w.conv) for w in W]
    u = _forward_substitution([w.near[0] for w in W], rows, sig, G)
    r = u - G
    for w, s in zip(W, sig):
        r = r + s * w.apply(u)
    res = float(np.max(np.abs(r))) / (1.0 + float(np.max(np.abs(G))))
    v = P + I0.apply(u)
    return Solution(
        v=GridFn(T, v),
        u=GridFn(T, u),
        iterations=1,
        final_update_norm=0.0,
        residual_norm=res,
        forcing=GridFn(T, G),
        residual_pointwise=np.abs(r) / (1.0 + float(np.max(np.abs(G)))),
        route="oracle",
    )


def compare(coarse: GridFn, fine: GridFn) -> dict:
    """Max and RMS difference at the coarse nodes (the fine grid must nest)."""
    step = (fine.n_points - 1) // (coarse.n_points - 1)
    if step * (coarse.n_points - 1) != fine.n_points - 1:
        raise ValidationError("oracle grid must refine the solver grid by an integer factor")
    d = coarse.values - fine.values[::step]
    return {"max": float(np.max(np.abs(d))), "l2": float(np.sqrt(np.mean(d ** 2)))}
