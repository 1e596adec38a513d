"""Independent reference implementations used only by the tests.

Nothing here imports from ``bnnlp``; each helper is written from the
mathematical definition with plain loops so that it shares no code with
the vectorised library routines it checks.
"""

from __future__ import annotations

import math

import numpy as np


def scalar_activation(m: int, z: float, alpha: float = 0.01) -> float:
    if m == 1:
        return z if z > 0 else alpha * z
    if m == 2:
        return 1.0 / (1.0 + math.exp(-z))
    if m == 3:
        return z if z > 0 else 0.0
    if m == 4:
        return math.tanh(z)
    raise ValueError(m)


def loop_forward(weights, biases, mixture_weights, x, alpha=0.01):
    """Literal loop-nest evaluation of the network output."""
    h = [float(v) for v in x]
    for W, b, omega in zip(weights[:-1], biases, mixture_weights):
        nxt = []
        for q in range(W.shape[0]):
            z = b[q]
            for k in range(W.shape[1]):
                z += W[q, k] * h[k]
            a = 0.0
            for m in range(1, 5):
                if omega[q, m - 1] != 0.0:
                    a += omega[q, m - 1] * scalar_activation(m, z, alpha)
            nxt.append(a)
        h = nxt
    out = 0.0
    for q, v in enumerate(h):
        out += weights[-1][0, q] * v
    return out


def ridge_posterior(Z, y, prior_var, noise_var):
    """Mean and covariance of ``beta | y`` for ``y = Z beta + e``, ``beta ~ N(0, diag(prior_var))``."""
    Z = np.asarray(Z, dtype=float)
    w = 1.0 / np.asarray(noise_var, dtype=float)
    P = Z.T @ np.diag(w) @ Z + np.diag(1.0 / np.asarray(prior_var, dtype=float))
    cov = np.linalg.inv(P)
    return cov @ (Z.T @ (w * y)), cov


def horseshoe_median_abs(n: int = 1_000_000, seed: int = 12345) -> float:
    """Median ``|w|`` under ``lambda, phi ~ C+(0, 1)``, ``w ~ N(0, lambda^2 phi^2)``."""
    rng = np.random.default_rng(seed)
    lam = np.abs(rng.standard_cauchy(n))
    phi = np.abs(rng.standard_cauchy(n))
    return float(np.median(np.abs(lam * phi * rng.standard_normal(n))))
