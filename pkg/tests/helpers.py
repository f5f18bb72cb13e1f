"""Random constructions shared by the test modules."""

import numpy as np


def random_skew_invertible(rng, n):
    while True:
        m = rng.standard_normal((n, n))
        s = m - m.T
        sv = np.linalg.svd(s, compute_uv=False)
        if sv[-1] > 0.05 * sv[0]:
            return s / sv[0]


def random_symmetric(rng, n, definite=False):
    m = rng.standard_normal((n, n)) / np.sqrt(n)
    if definite:
        return m @ m.T + 0.5 * np.eye(n)
    return 0.5 * (m + m.T)


def random_system(rng, n, definite=False):
    """``A = Lambda @ H`` with ``Lambda`` invertible skew."""
    lam = random_skew_invertible(rng, n)
    h = random_symmetric(rng, n, definite)
    return lam @ h, lam, h


def rk4(field, x0, t, steps=2000):
    """Classical fourth-order Runge-Kutta, the oracle for exact flows."""
    x = np.asarray(x0, float)
    dt = t / steps
    for _ in range(steps):
        k1 = field(x)
        k2 = field(x + 0.5 * dt * k1)
        k3 = field(x + 0.5 * dt * k2)
        k4 = field(x + dt * k3)
        x = x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return x
