"""Forward evaluation of a feed-forward network with mixture activations.

The regression function is

    y = x'gamma + W_{L+1} h_L(W_L h_{L-1}(... h_1(W_1 x + b_1) ...) + b_L)

where every hidden neuron applies a convex combination of four base
activations (leakyReLU, sigmoid, ReLU, tanh).  Layer indices in this module
are zero-based; activation ids are the integers 1..4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .exceptions import InvalidInputError, InvalidStateError

LEAKY_RELU = 1
SIGMOID = 2
RELU = 3
TANH = 4
ACTIVATION_IDS = (LEAKY_RELU, SIGMOID, RELU, TANH)
ACTIVATION_NAMES = {LEAKY_RELU: "leaky_relu", SIGMOID: "sigmoid", RELU: "relu", TANH: "tanh"}

LEAKY_SLOPE = 0.01
SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class NetworkShape:
    """Input dimension ``K`` and hidden-layer widths ``Q = (Q_1, ..., Q_L)``."""

    K: int
    Q: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "Q", tuple(int(q) for q in self.Q))
        if int(self.K) < 1:
            raise InvalidInputError(f"K must be >= 1, got {self.K}")
        if len(self.Q) < 1:
            raise InvalidInputError("at least one hidden layer is required")
        if any(q < 1 for q in self.Q):
            raise InvalidInputError(f"neuron counts must be >= 1, got {self.Q}")

    @property
    def L(self) -> int:
        return len(self.Q)

    def weight_shapes(self) -> list[tuple[int, int]]:
        dims = (self.K,) + self.Q + (1,)
        return [(dims[i + 1], dims[i]) for i in range(self.L + 1)]


@dataclass(frozen=True)
class ActivationMixture:
    """Per-neuron simplex weights over the four base activations.

    ``weights[l]`` has shape ``(Q_l, 4)``; column ``m - 1`` is the weight of
    activation id ``m``.  ``indicators[l]`` holds the hard selection
    (values 1..4) when the mixture was built from indicators, else ``None``.
    """

    weights: tuple[np.ndarray, ...]
    indicators: tuple[np.ndarray, ...] | None = None

    @classmethod
    def from_indicators(cls, indicators) -> "ActivationMixture":
        inds = tuple(np.asarray(d, dtype=np.int64).copy() for d in indicators)
        for d in inds:
            if d.ndim != 1 or np.any((d < 1) | (d > 4)):
                raise InvalidStateError("indicators must be 1-D arrays with values in 1..4")
        weights = tuple(np.eye(4)[d - 1] for d in inds)
        return cls(weights=weights, indicators=inds)

    @classmethod
    def uniform(cls, Q) -> "ActivationMixture":
        return cls(weights=tuple(np.full((q, 4), 0.25) for q in Q))

    def validate(self) -> None:
        for layer, w in enumerate(self.weights):
            w = np.asarray(w)
            if w.ndim != 2 or w.shape[1] != 4:
                raise InvalidStateError(f"layer {layer}: mixture weights must have shape (Q, 4)")
            if np.any(w < 0) or np.any(np.abs(w.sum(axis=1) - 1.0) > SIMPLEX_TOL):
                raise InvalidStateError(f"layer {layer}: mixture weights are not on the simplex")


@dataclass(frozen=True)
class NetworkParams:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    linear_coef: np.ndarray
    mixture: ActivationMixture
    leaky_slope: float = field(default=LEAKY_SLOPE)

    @property
    def shape(self) -> NetworkShape:
        return NetworkShape(K=self.weights[0].shape[1], Q=tuple(w.shape[0] for w in self.weights[:-1]))

    def check(self, shape: NetworkShape | None = None) -> None:
        shape = self.shape if shape is None else shape
        expected = shape.weight_shapes()
        if len(self.weights) != len(expected) or len(self.biases) != shape.L:
            raise InvalidInputError("number of layers does not match the network shape")
        for i, (w, s) in enumerate(zip(self.weights, expected)):
            if w.shape != s:
                raise InvalidInputError(f"W_{i + 1} has shape {w.shape}, expected {s}")
        for i, (b, q) in enumerate(zip(self.biases, shape.Q)):
            if b.shape != (q,):
                raise InvalidInputError(f"b_{i + 1} has shape {b.shape}, expected ({q},)")
        if self.linear_coef.shape != (shape.K,):
            raise InvalidInputError(f"linear_coef has shape {self.linear_coef.shape}, expected ({shape.K},)")
        if len(self.mixture.weights) != shape.L or any(
            w.shape[0] != q for w, q in zip(self.mixture.weights, shape.Q)
        ):
            raise InvalidInputError("activation mixture does not match the network shape")
        arrays = list(self.weights) + list(self.biases) + [self.linear_coef]
        if not all(np.all(np.isfinite(a)) for a in arrays):
            raise InvalidStateError("network parameters contain non-finite entries")

    def with_indicators(self, indicators) -> "NetworkParams":
        return NetworkParams(self.weights, self.biases, self.linear_coef,
                             ActivationMixture.from_indicators(indicators), self.leaky_slope)


def zero_params(shape: NetworkShape, indicators=None) -> NetworkParams:
    """All-zero weights, biases and linear coefficients."""
    if indicators is None:
        mixture = ActivationMixture.uniform(shape.Q)
    else:
        mixture = ActivationMixture.from_indicators(indicators)
    return NetworkParams(
        weights=tuple(np.zeros(s) for s in shape.weight_shapes()),
        biases=tuple(np.zeros(q) for q in shape.Q),
        linear_coef=np.zeros(shape.K),
        mixture=mixture,
    )


# -- activations ---------------------------------------------------------------

def _apply(m: int, z, alpha: float):
    if m == LEAKY_RELU:
        return np.where(z > 0, z, alpha * z)
    if m == SIGMOID:
        return expit(z)
    if m == RELU:
        return np.maximum(z, 0.0)
    if m == TANH:
        return np.tanh(z)
    raise InvalidInputError(f"unknown activation id {m}")


def _derivative(m: int, z, alpha: float):
    # left-limit subgradient at the kink
    if m == LEAKY_RELU:
        return np.where(z > 0, 1.0, alpha)
    if m == SIGMOID:
        s = expit(z)
        return s * (1.0 - s)
    if m == RELU:
        return np.where(z > 0, 1.0, 0.0)
    if m == TANH:
        t = np.tanh(z)
        return 1.0 - t * t
    raise InvalidInputError(f"unknown activation id {m}")


def base_activation(m: int, z: float, alpha: float = LEAKY_SLOPE) -> float:
    """Evaluate base activation ``m`` (1 leakyReLU, 2 sigmoid, 3 ReLU, 4 tanh) at ``z``."""
    if not math.isfinite(z):
        raise InvalidInputError(f"activation input must be finite, got {z}")
    return float(_apply(int(m), float(z), alpha))


def mixture_activation(mix: ActivationMixture, layer: int, q: int, z: float,
                       alpha: float = LEAKY_SLOPE) -> float:
    w = np.asarray(mix.weights[layer][q], dtype=float)
    if w.shape != (4,) or np.any(w < 0) or abs(w.sum() - 1.0) > SIMPLEX_TOL:
        raise InvalidStateError(f"mixture weights of neuron ({layer}, {q}) are not on the simplex")
    if not math.isfinite(z):
        raise InvalidInputError(f"activation input must be finite, got {z}")
    return float(sum(w[m - 1] * _apply(m, float(z), alpha) for m in ACTIVATION_IDS))


def layer_activation(Z: np.ndarray, weights: np.ndarray, alpha: float = LEAKY_SLOPE) -> np.ndarray:
    """Mixture activation applied column-wise; ``Z`` is ``(n, Q)``, ``weights`` is ``(Q, 4)``."""
    out = np.zeros_like(Z)
    for m in ACTIVATION_IDS:
        w = weights[:, m - 1]
        if np.any(w != 0):
            out = out + w * _apply(m, Z, alpha)
    return out


def layer_derivative(Z: np.ndarray, weights: np.ndarray, alpha: float = LEAKY_SLOPE) -> np.ndarray:
    out = np.zeros_like(Z)
    for m in ACTIVATION_IDS:
        w = weights[:, m - 1]
        if np.any(w != 0):
            out = out + w * _derivative(m, Z, alpha)
    return out


# -- batched forward / backward -------------------------------------------------

def forward_batch(params: NetworkParams, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Evaluate the network on every row of ``X``.

    Returns ``(f, Z, A)`` where ``Z[l]`` are the preactivations and ``A[l]`` the
    activations of hidden layer ``l`` (``A`` has ``L + 1`` entries, ``A[0] = X``).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.weights[0].shape[1]:
        raise InvalidInputError(
            f"input has shape {X.shape}, network expects {params.weights[0].shape[1]} features")
    A = [X]
    Z = []
    for W, b, mw in zip(params.weights[:-1], params.biases, params.mixture.weights):
        z = A[-1] @ W.T + b
        Z.append(z)
        A.append(layer_activation(z, mw, params.leaky_slope))
    f = A[-1] @ params.weights[-1][0]
    return f, Z, A


def network_output(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    return forward_batch(params, X)[0]


def backward_batch(params: NetworkParams, Z, A, c: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradient of ``sum_t c_t f(x_t)`` with respect to ``W_1..W_L`` and ``b_1..b_L``."""
    L = len(Z)
    grad_W = [None] * L
    grad_b = [None] * L
    delta = np.outer(c, params.weights[-1][0]) * layer_derivative(Z[-1], params.mixture.weights[-1],
                                                                   params.leaky_slope)
    for layer in range(L - 1, -1, -1):
        grad_W[layer] = delta.T @ A[layer]
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer]) * layer_derivative(
                Z[layer - 1], params.mixture.weights[layer - 1], params.leaky_slope)
    return grad_W, grad_b


# -- single-observation API -----------------------------------------------------

def _as_input(params: NetworkParams, shape: NetworkShape | None, x) -> np.ndarray:
    if shape is not None:
        params.check(shape)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != params.weights[0].shape[1]:
        raise InvalidInputError(f"x must have length {params.weights[0].shape[1]}, got shape {x.shape}")
    return x


def forward(params: NetworkParams, shape: NetworkShape | None, x) -> tuple[float, list[np.ndarray]]:
    """Network output ``f(x)`` and the per-layer preactivations ``z_1..z_L``."""
    x = _as_input(params, shape, x)
    f, Z, _ = forward_batch(params, x[None, :])
    return float(f[0]), [z[0] for z in Z]


def predict_mean(params: NetworkParams, x) -> float:
    """Conditional mean ``x'gamma + f(x)``."""
    x = _as_input(params, None, x)
    return float(x @ params.linear_coef) + forward(params, None, x)[0]


def forward_gradient(params: NetworkParams, x) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradient of ``f(x)`` with respect to every inner weight matrix and bias vector."""
    x = _as_input(params, None, x)
    _, Z, A = forward_batch(params, x[None, :])
    return backward_batch(params, Z, A, np.ones(1))
