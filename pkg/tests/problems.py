"""Shared test problems."""

import numpy as np

from prabfde import ConstProblem, ProblemSpec


def sig_t(t):
    return np.asarray(t, dtype=float)


def sig_quad(t):
    return 1.0 + np.asarray(t) ** 2


def sig_sin(t):
    return np.sin(t)


# A case where u(0) != 0 and beta_0 + min(beta_0 - beta_i) < 1: uniform-grid
# product integration then converges only like h^0.6 near t = 0.
ROUGH_PROBLEM = ProblemSpec(0.5, (0.35, 0.1), (0.8, -0.4), 0.3, (sig_quad,), lambda t: np.cos(t), (1.0,))

# Variable coefficients: m in {1, 2}, alpha in {0.5, 1.2}, mixed thetas,
# sigma_i in {t, 1 + t^2, sin t}, non-integer beta_0 in (0.3, 2.7).
VARIABLE_SUITE = {
    "m1_a05_b045": ProblemSpec(0.5, (0.45, 0.0), (0.8, -0.4), 0.3, (sig_quad,), lambda t: np.cos(t), (1.0,)),
    "m1_a12_b07": ProblemSpec(1.2, (0.7, 0.0), (1.5, 0.5), -0.6, (sig_t,), 1.0, (0.5,)),
    "m1_a05_b13": ProblemSpec(0.5, (1.3, 0.4), (0.7, 0.2), 0.3, (sig_t,), 1.0, (1.0, -0.5)),
    "m1_a12_b16": ProblemSpec(1.2, (1.6, 1.0), (2.0, 1.0), 0.5, (sig_sin,), lambda t: np.exp(-t), (0.0, 1.0)),
    "m1_a05_b24": ProblemSpec(0.5, (2.4, 0.9), (-0.5, 0.3), 0.4, (sig_quad,), lambda t: 1 + t, (1.0, 0.0, 0.5)),
    "m2_a05_b08": ProblemSpec(0.5, (0.8, 0.5, 0.0), (1.0, 0.5, -0.5), 0.2, (sig_t, sig_quad), 1.0, (1.0,)),
    "m2_a12_b11": ProblemSpec(1.2, (1.1, 0.6, 0.2), (0.4, 1.2, 0.0), -0.3, (sig_sin, sig_t), lambda t: np.sin(2 * t), (0.3, 0.7)),
    "m2_a05_b19": ProblemSpec(0.5, (1.9, 1.2, 0.5), (1.3, 0.0, 0.6), 0.5, (sig_quad, sig_sin), 1.0, (0.0, 0.0)),
    "m2_a12_b25": ProblemSpec(1.2, (2.5, 1.5, 0.0), (0.6, -0.7, 0.2), 0.8, (sig_t, sig_sin), lambda t: np.cos(t), (1.0, -1.0, 0.25)),
    "m2_a05_b265": ProblemSpec(0.5, (2.65, 2.0, 1.0), (2.0, 1.0, 0.5), -0.4, (sig_quad, sig_t), lambda t: t, (0.5, 0.5, 0.0)),
}

# Constant coefficients with a single theta.
CONST_SUITE = {
    "c1": ConstProblem(0.5, (1.3, 0.4), 0.7, 0.3, (2.0,), lambda t: np.cos(t)),
    "c2": ConstProblem(1.2, (0.6, 0.0), 1.5, -0.5, (1.0,), 1.0, (1.0,)),
    "c3": ConstProblem(0.8, (2.4, 1.1, 0.3), 0.5, 0.4, (0.5, -1.0), lambda t: 1 + t, (1.0, 0.5, -0.2)),
    "c4": ConstProblem(0.5, (0.7,), 2.0, 1.0, (), lambda t: np.exp(-t), None, 2.0),
    "c5": ConstProblem(1.0, (1.7, 0.5, 0.0), -0.6, 0.8, (1.5, 0.7), lambda t: np.sin(3 * t), (0.3, 1.0), 1.5),
    "c6": ConstProblem(0.6, (0.9, 0.2), 2.0, -1.0, (2.0,), 1.0, (1.0,)),
}
