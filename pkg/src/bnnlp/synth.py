"""Synthetic data with closed-form impulse responses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd

from .exceptions import InvalidInputError

KINDS = ("linear", "sign_asymmetric", "size_nonlinear", "sv_linear", "recursive_var")

_BURN = 100


@dataclass(frozen=True)
class DgpSpec:
    """Data-generating process settings.

    ``params`` holds kind-specific options:

    * ``linear``/``sv_linear``: ``psi0`` (impact response, default 1.0)
    * ``sign_asymmetric``/``size_nonlinear``: ``beta`` (default 1.0)
    * all impulse kinds: ``decay`` (geometric decay across horizons, default 0.5),
      ``n_ma`` (response length, default 12)
    * ``sv_linear``: ``vol_ratio`` (end/start variance ratio, default 10)
    * ``recursive_var``: ``A`` (VAR(1) matrix) and ``B`` (lower-triangular impact)
    """

    kind: str
    T: int = 500
    noise_sd: float = 0.5
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown DGP kind {self.kind!r}; expected one of {KINDS}")
        if self.T < 50:
            raise InvalidInputError(f"T must be >= 50, got {self.T}")
        if not self.noise_sd > 0:
            raise InvalidInputError(f"noise_sd must be positive, got {self.noise_sd}")


@dataclass
class SyntheticData:
    y: np.ndarray
    zeta: np.ndarray
    X: np.ndarray
    panel: pd.DataFrame
    ground_truth_nlp: Callable[[int, float], float]
    true_shocks: np.ndarray | None = None
    impact: np.ndarray | None = None


_DEFAULT_A = np.array([[0.5, 0.0, 0.0], [0.2, 0.4, 0.0], [-0.3, 0.2, 0.5]])
_DEFAULT_B = np.array([[1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [-0.8, 0.3, 0.7]])


def _shock_map(kind: str, scale: float) -> Callable[[np.ndarray], np.ndarray]:
    if kind in ("linear", "sv_linear"):
        return lambda z: scale * np.asarray(z, dtype=float)
    if kind == "sign_asymmetric":
        return lambda z: scale * np.maximum(0.0, z)
    return lambda z: scale * np.sign(z) * np.asarray(z, dtype=float) ** 2


def _dates(T: int) -> pd.PeriodIndex:
    return pd.period_range("1960-01", periods=T, freq="M")


def generate(spec: DgpSpec) -> SyntheticData:
    """Simulate ``spec`` and return data plus its exact ground-truth NLP."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "recursive_var":
        return _generate_var(spec, rng)

    p = spec.params
    scale = float(p.get("psi0", 1.0) if spec.kind in ("linear", "sv_linear") else p.get("beta", 1.0))
    decay = float(p.get("decay", 0.5))
    n_ma = int(p.get("n_ma", 12))
    profile = decay ** np.arange(n_ma + 1)
    g = _shock_map(spec.kind, 1.0)

    n = spec.T + _BURN
    zeta = rng.standard_normal(n)
    gz = scale * g(zeta)
    signal = np.convolve(gz, profile)[:n]
    sd = np.full(n, spec.noise_sd)
    if spec.kind == "sv_linear":
        ratio = float(p.get("vol_ratio", 10.0))
        sd = spec.noise_sd * np.sqrt(np.exp(np.linspace(0.0, np.log(ratio), n)))
    y = signal + sd * rng.standard_normal(n)
    y, zeta = y[_BURN:], zeta[_BURN:]
    y_lag = np.concatenate([[0.0], y[:-1]])
    X = np.column_stack([y_lag, np.ones(spec.T)])

    def truth(h: int, tau: float) -> float:
        if h < 0:
            raise InvalidInputError("horizon must be nonnegative")
        w = profile[h] if h <= n_ma else 0.0
        return float(w * scale * (g(np.array(tau)) - g(np.array(0.0))))

    panel = pd.DataFrame({"date": _dates(spec.T).strftime("%Y-%m"), "ebp": zeta, "y": y})
    return SyntheticData(y=y, zeta=zeta, X=X, panel=panel, ground_truth_nlp=truth)


def _generate_var(spec: DgpSpec, rng: np.random.Generator) -> SyntheticData:
    A = np.asarray(spec.params.get("A", _DEFAULT_A), dtype=float)
    B = np.asarray(spec.params.get("B", _DEFAULT_B), dtype=float) * spec.noise_sd / 0.5
    N = A.shape[0]
    if A.shape != (N, N) or B.shape != (N, N) or np.any(np.triu(B, 1) != 0):
        raise InvalidInputError("recursive_var needs square A and lower-triangular B of equal size")
    n = spec.T + _BURN
    e = rng.standard_normal((n, N))
    Y = np.zeros((n, N))
    for t in range(1, n):
        Y[t] = A @ Y[t - 1] + B @ e[t]
    Y, e = Y[_BURN:], e[_BURN:]

    def truth(h: int, tau: float) -> float:
        return float(tau * (np.linalg.matrix_power(A, h) @ B)[-1, 0])

    names = ["ebp"] + [f"x{i}" for i in range(1, N)]
    panel = pd.DataFrame(Y, columns=names)
    panel.insert(0, "date", _dates(spec.T).strftime("%Y-%m"))
    y_lag = np.concatenate([[0.0], Y[:-1, -1]])
    return SyntheticData(y=Y[:, -1], zeta=e[:, 0], X=np.column_stack([y_lag, np.ones(spec.T)]), panel=panel,
                         ground_truth_nlp=truth, true_shocks=e, impact=B)


def export_csv(data: SyntheticData, path) -> None:
    """Write the simulated panel in the pipeline's input CSV schema."""
    data.panel.to_csv(path, index=False, float_format="%.12g")
