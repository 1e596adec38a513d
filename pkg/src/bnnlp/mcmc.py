"""Multi-block MCMC sampler for the horseshoe BNN regression.

One iteration of :func:`run_chain` updates, in order,

1. the linear coefficients and output-layer weights jointly (conjugate Gaussian),
2. the inner weights and biases (one HMC proposal),
3. every horseshoe block (auxiliary inverse-Gamma sweep),
4. the activation indicators (one categorical draw per hidden neuron),
5. the error variances (stochastic volatility or a single homoskedastic variance).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np
from scipy import linalg, special

from .bnn_core import (
    ACTIVATION_IDS,
    LEAKY_SLOPE,
    ActivationMixture,
    NetworkParams,
    NetworkShape,
    _apply,
    backward_batch,
    forward_batch,
)
from .exceptions import ConfigError, InvalidInputError, NumericError

logger = logging.getLogger(__name__)

SCALE_MIN = 1e-12
SCALE_MAX = 1e12
LOG_VOL_BOUND = 20.0


@dataclass(frozen=True)
class ChainConfig:
    n_iter: int = 20000
    n_burn: int = 10000
    hmc_step_size: float = 0.01
    hmc_n_steps: int = 10
    seed: int = 0
    sv_enabled: bool = True
    leaky_slope: float = LEAKY_SLOPE

    def __post_init__(self):
        if self.n_iter < 1 or self.n_burn < 0 or self.n_burn >= self.n_iter:
            raise ConfigError(f"need 0 <= n_burn < n_iter, got n_burn={self.n_burn}, n_iter={self.n_iter}")
        if not self.hmc_step_size > 0:
            raise ConfigError(f"hmc_step_size must be positive, got {self.hmc_step_size}")
        if self.hmc_n_steps < 1:
            raise ConfigError(f"hmc_n_steps must be >= 1, got {self.hmc_n_steps}")

    @property
    def n_keep(self) -> int:
        return self.n_iter - self.n_burn


# -- horseshoe -------------------------------------------------------------------

@dataclass(frozen=True)
class HorseshoeBlock:
    """Scales for a ``(rows, cols)`` coefficient block with one global scale per row."""

    lambda_sq: np.ndarray
    xi: np.ndarray
    varphi_sq: np.ndarray
    nu: np.ndarray

    @classmethod
    def ones(cls, rows: int, cols: int) -> "HorseshoeBlock":
        return cls(np.ones(rows), np.ones(rows), np.ones((rows, cols)), np.ones((rows, cols)))

    def variance(self) -> np.ndarray:
        return self.lambda_sq[:, None] * self.varphi_sq


@dataclass(frozen=True)
class HorseshoeState:
    linear: HorseshoeBlock
    output: HorseshoeBlock | None = None
    inner: tuple[HorseshoeBlock, ...] = ()

    @classmethod
    def initial(cls, shape: NetworkShape | None, K: int) -> "HorseshoeState":
        if shape is None:
            return cls(linear=HorseshoeBlock.ones(1, K))
        dims = (shape.K,) + shape.Q
        inner = tuple(HorseshoeBlock.ones(dims[i + 1], dims[i] + 1) for i in range(shape.L))
        return cls(linear=HorseshoeBlock.ones(1, K), output=HorseshoeBlock.ones(1, shape.Q[-1]), inner=inner)


def _inv_gamma(shape, rate, rng: np.random.Generator):
    return rate / rng.standard_gamma(shape)


def _clamp(x: np.ndarray, name: str, counter: dict | None) -> np.ndarray:
    bad = ~np.isfinite(x) | (x < SCALE_MIN) | (x > SCALE_MAX)
    if np.any(bad):
        if counter is None:
            logger.warning("clamping %d %s draw(s) to [%g, %g]", int(bad.sum()), name, SCALE_MIN, SCALE_MAX)
        else:
            counter[name] = counter.get(name, 0) + int(bad.sum())
        x = np.where(np.isnan(x), SCALE_MAX, x)
        x = np.clip(x, SCALE_MIN, SCALE_MAX)
    return x


def horseshoe_update(coeffs: np.ndarray, block: HorseshoeBlock, rng: np.random.Generator,
                     clamp_counter: dict | None = None) -> HorseshoeBlock:
    """One sweep over half-Cauchy global and local scales.

    With ``w_ij ~ N(0, lambda_i^2 varphi_ij^2)`` each precision ``eta = 1/scale^2``
    has conditional density proportional to ``eta^(a-1) exp(-S eta) / (1 + eta)``:

        local   eta_ij: a = 1,         S = w_ij^2 / (2 lambda_i^2)
        global  eta_i:  a = (p + 1)/2, S = sum_j w_ij^2 / (2 varphi_ij^2)

    and is drawn exactly by slice sampling. The inverse-Gamma auxiliaries
    ``nu_ij ~ IG(1, 1 + 1/varphi_ij^2)`` and ``xi_i ~ IG(1, 1 + 1/lambda_i^2)``
    are refreshed from their conditionals so the block stays a valid joint
    state. Draws outside ``[SCALE_MIN, SCALE_MAX]`` are clamped; they are
    logged as a warning unless ``clamp_counter`` is given, in which case
    they are tallied.
    """
    w2 = np.asarray(coeffs, dtype=float) ** 2
    if w2.shape != block.varphi_sq.shape:
        raise InvalidInputError(f"coefficient block {w2.shape} does not match scales {block.varphi_sq.shape}")
    if not np.all(np.isfinite(w2)):
        raise InvalidInputError("coefficients must be finite")
    p = w2.shape[1]

    eta_local = _slice_half_cauchy_precision(1.0 / block.varphi_sq, 1.0, w2 / (2.0 * block.lambda_sq[:, None]), rng)
    varphi_sq = _clamp(1.0 / eta_local, "varphi_sq", clamp_counter)
    nu = _clamp(_inv_gamma(1.0, 1.0 + 1.0 / varphi_sq, rng), "nu", clamp_counter)
    S = (w2 / (2.0 * varphi_sq)).sum(axis=1)
    eta = _slice_half_cauchy_precision(1.0 / block.lambda_sq, (p + 1) / 2.0, S, rng)
    lambda_sq = _clamp(1.0 / eta, "lambda_sq", clamp_counter)
    xi = _clamp(_inv_gamma(1.0, 1.0 + 1.0 / lambda_sq, rng), "xi", clamp_counter)
    return HorseshoeBlock(lambda_sq=lambda_sq, xi=xi, varphi_sq=varphi_sq, nu=nu)


def _slice_half_cauchy_precision(eta, shape, rate, rng):
    """Slice update for densities ``eta^(shape-1) exp(-rate eta) / (1 + eta)``."""
    u = rng.uniform(0.0, 1.0 / (1.0 + eta))
    upper = (1.0 - u) / u
    rate = np.maximum(rate, 1e-300)
    f_upper = special.gammainc(shape, rate * upper)
    draw = special.gammaincinv(shape, rng.uniform(0.0, 1.0, size=np.shape(eta)) * f_upper) / rate
    # the bracket can be numerically empty when ``upper`` sits far in the left tail
    return np.where((f_upper > 0) & (draw > 0), draw, np.minimum(eta, upper))


def inner_blocks(params: NetworkParams) -> list[np.ndarray]:
    """Each hidden layer's weights with its bias appended as a final column."""
    return [np.column_stack([W, b]) for W, b in zip(params.weights[:-1], params.biases)]


def update_scales(params: NetworkParams | None, linear_coef: np.ndarray, state: HorseshoeState,
                  rng: np.random.Generator, clamp_counter: dict | None = None) -> HorseshoeState:
    linear = horseshoe_update(linear_coef[None, :], state.linear, rng, clamp_counter)
    if params is None:
        return HorseshoeState(linear=linear)
    output = horseshoe_update(params.weights[-1], state.output, rng, clamp_counter)
    inner = tuple(horseshoe_update(c, blk, rng, clamp_counter) for c, blk in zip(inner_blocks(params), state.inner))
    return HorseshoeState(linear=linear, output=output, inner=inner)


# -- stochastic volatility -------------------------------------------------------

@dataclass(frozen=True)
class SvState:
    log_vol: np.ndarray
    mu: float = 0.0
    phi_ar: float = 0.9
    sigma_eta: float = 0.2

    def __post_init__(self):
        if not abs(self.phi_ar) < 1 or not self.sigma_eta > 0:
            raise InvalidInputError("SV state needs |phi_ar| < 1 and sigma_eta > 0")

    @property
    def variance(self) -> np.ndarray:
        return np.exp(self.log_vol)


SV_MU_PRIOR_VAR = 10.0
SV_PHI_BETA = (20.0, 1.5)
SV_SIGMA2_GAMMA = (0.5, 0.5)  # shape, rate
HOMOSKEDASTIC_IG = (0.01, 0.01)
_SV_RW_STEP = 0.1


def _sv_param_logpost(h: np.ndarray, mu: float, phi: float, sigma2: float) -> float:
    if not abs(phi) < 1 or sigma2 <= 0:
        return -np.inf
    d = h - mu
    e = d[1:] - phi * d[:-1]
    ll = 0.5 * np.log(1 - phi**2) - 0.5 * (1 - phi**2) * d[0] ** 2 / sigma2
    ll += -0.5 * len(h) * np.log(sigma2) - 0.5 * (e @ e) / sigma2
    a, b = SV_PHI_BETA
    x = (phi + 1) / 2
    lp = (a - 1) * np.log(x) + (b - 1) * np.log1p(-x)
    shape, rate = SV_SIGMA2_GAMMA
    lp += (shape - 1) * np.log(sigma2) - rate * sigma2
    return float(ll + lp)


def _update_log_vol(r2: np.ndarray, sv: SvState, rng: np.random.Generator) -> np.ndarray:
    h = sv.log_vol.copy()
    T = len(h)
    mu, phi, s2 = sv.mu, sv.phi_ar, sv.sigma_eta**2
    # even then odd sites: each half is conditionally independent given the other
    for start in (0, 1):
        idx = np.arange(start, T, 2)
        mean = np.empty(len(idx))
        var = np.empty(len(idx))
        prev = np.where(idx > 0, h[np.maximum(idx - 1, 0)], mu)
        nxt = np.where(idx < T - 1, h[np.minimum(idx + 1, T - 1)], mu)
        interior = (idx > 0) & (idx < T - 1)
        first = idx == 0
        last = (idx == T - 1) & (idx > 0)
        mean[interior] = mu + phi * ((prev - mu) + (nxt - mu))[interior] / (1 + phi**2)
        var[interior] = s2 / (1 + phi**2)
        mean[first] = mu + phi * (nxt[first] - mu)
        var[first] = s2
        mean[last] = mu + phi * (prev[last] - mu)
        var[last] = s2
        if T == 1:
            mean[:] = mu
            var[:] = s2 / (1 - phi**2)
        prop = mean + np.sqrt(var) * rng.standard_normal(len(idx))
        cur = h[idx]
        log_ratio = -0.5 * (prop - cur) - 0.5 * r2[idx] * (np.exp(-prop) - np.exp(-cur))
        accept = (np.log(rng.random(len(idx))) < log_ratio) & (np.abs(prop) <= LOG_VOL_BOUND)
        h[idx] = np.where(accept, prop, cur)
    return h


def sv_update(residuals: np.ndarray, sv: SvState, rng: np.random.Generator, enabled: bool = True) -> SvState:
    """Update the error-variance block given the current residuals.

    With ``enabled`` the log variances follow an AR(1) and are updated site by
    site with Metropolis steps, followed by the level, persistence and
    innovation scale.  Otherwise a single variance is drawn from its
    inverse-Gamma posterior and broadcast over the sample.
    """
    r2 = np.asarray(residuals, dtype=float) ** 2
    T = len(r2)
    if not enabled:
        a0, b0 = HOMOSKEDASTIC_IG
        sigma2 = float(_inv_gamma(a0 + T / 2.0, b0 + r2.sum() / 2.0, rng))
        log_sigma2 = float(np.clip(np.log(max(sigma2, 1e-300)), -LOG_VOL_BOUND, LOG_VOL_BOUND))
        return replace(sv, log_vol=np.full(T, log_sigma2))

    h = _update_log_vol(r2, sv, rng)
    phi, s2 = sv.phi_ar, sv.sigma_eta**2

    # level: conjugate normal
    prec = 1.0 / SV_MU_PRIOR_VAR + (1 - phi**2) / s2 + (T - 1) * (1 - phi) ** 2 / s2
    num = (1 - phi**2) * h[0] / s2 + (1 - phi) * np.sum(h[1:] - phi * h[:-1]) / s2
    mu = num / prec + rng.standard_normal() / np.sqrt(prec)

    # persistence and scale: random-walk Metropolis on atanh(phi) and log(sigma_eta)
    cur = _sv_param_logpost(h, mu, phi, s2)
    u_new = np.arctanh(phi) + _SV_RW_STEP * rng.standard_normal()
    phi_new = float(np.tanh(u_new))
    if abs(phi_new) < 1:
        prop = _sv_param_logpost(h, mu, phi_new, s2)
        log_ratio = prop - cur + np.log(1 - phi_new**2) - np.log(1 - phi**2)
        if np.log(rng.random()) < log_ratio:
            phi, cur = phi_new, prop
    v_new = np.log(np.sqrt(s2)) + _SV_RW_STEP * rng.standard_normal()
    s2_new = float(np.exp(2 * v_new))
    prop = _sv_param_logpost(h, mu, phi, s2_new)
    if np.log(rng.random()) < prop - cur + np.log(s2_new) - np.log(s2):
        s2 = s2_new
    s2 = float(np.clip(s2, SCALE_MIN, SCALE_MAX))
    return SvState(log_vol=h, mu=float(mu), phi_ar=float(phi), sigma_eta=float(np.sqrt(s2)))


# -- conjugate Gaussian block ---------------------------------------------------

def draw_gaussian_coefficients(Z: np.ndarray, y: np.ndarray, prior_var: np.ndarray, noise_var: np.ndarray,
                               rng: np.random.Generator) -> np.ndarray:
    """Draw ``beta`` from ``N(mean, P^-1)`` with ``P = Z' S^-1 Z + diag(1/prior_var)``."""
    prior_var = np.clip(np.asarray(prior_var, dtype=float), SCALE_MIN, SCALE_MAX)
    w = 1.0 / np.asarray(noise_var, dtype=float)
    P = (Z.T * w) @ Z
    P[np.diag_indices_from(P)] += 1.0 / prior_var
    rhs = Z.T @ (w * y)
    try:
        C = linalg.cholesky(P, lower=True)
    except linalg.LinAlgError:
        jitter = 1e-8 * np.mean(np.diag(P))
        try:
            C = linalg.cholesky(P + jitter * np.eye(len(P)), lower=True)
        except linalg.LinAlgError as exc:
            raise NumericError("posterior precision of the Gaussian block is not positive definite") from exc
    mean = linalg.cho_solve((C, True), rhs)
    return mean + linalg.solve_triangular(C.T, rng.standard_normal(len(P)), lower=False)


def draw_linear_and_output(y: np.ndarray, X_linear: np.ndarray, H_L: np.ndarray | None, scales: HorseshoeState,
                           sv: SvState, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Joint draw of the linear coefficients and the output-layer weights.

    ``H_L`` holds the last hidden layer's activations per observation (or is
    ``None``/empty for a purely linear model).
    """
    K = X_linear.shape[1]
    prior_var = [scales.linear.variance()[0]]
    if H_L is not None and H_L.shape[1] > 0:
        Z = np.column_stack([X_linear, H_L])
        prior_var.append(scales.output.variance()[0])
    else:
        Z = X_linear
    if Z.shape[0] != len(y):
        raise InvalidInputError("design rows do not match the target length")
    beta = draw_gaussian_coefficients(Z, y, np.concatenate(prior_var), sv.variance, rng)
    return beta[:K], beta[K:]


# -- HMC -------------------------------------------------------------------------

PotentialFn = Callable[[np.ndarray], tuple[float, np.ndarray]]


def leapfrog(theta: np.ndarray, momentum: np.ndarray, potential: PotentialFn, step_size: float, n_steps: int,
             grad: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """Integrate Hamiltonian dynamics with unit mass; returns ``(theta, p, U, grad U)``."""
    theta = theta.copy()
    p = momentum.copy()
    if grad is None:
        _, grad = potential(theta)
    p = p - 0.5 * step_size * grad
    for i in range(n_steps):
        theta = theta + step_size * p
        U, grad = potential(theta)
        if not np.isfinite(U) or not np.all(np.isfinite(grad)):
            return theta, p, np.inf, grad
        if i < n_steps - 1:
            p = p - step_size * grad
    p = p - 0.5 * step_size * grad
    return theta, p, U, grad


class HmcResult(NamedTuple):
    theta: np.ndarray
    accepted: bool
    delta_h: float
    divergent: bool


def hmc_kernel(theta: np.ndarray, potential: PotentialFn, step_size: float, n_steps: int,
               rng: np.random.Generator) -> HmcResult:
    """One HMC transition with standard Gaussian momenta and a Metropolis correction."""
    U0, g0 = potential(theta)
    p0 = rng.standard_normal(theta.shape)
    H0 = U0 + 0.5 * p0 @ p0
    with np.errstate(over="ignore", invalid="ignore"):
        theta_new, p_new, U1, _ = leapfrog(theta, p0, potential, step_size, n_steps, grad=g0)
        delta_h = U1 + 0.5 * p_new @ p_new - H0
    u = rng.random()
    if not np.isfinite(delta_h):
        return HmcResult(theta, False, np.inf, True)
    if np.log(u) < -delta_h:
        return HmcResult(theta_new, True, delta_h, False)
    return HmcResult(theta, False, delta_h, False)


def _pack_inner(params: NetworkParams) -> np.ndarray:
    return np.concatenate([a.ravel() for a in list(params.weights[:-1]) + list(params.biases)])


def _unpack_inner(theta: np.ndarray, params: NetworkParams) -> NetworkParams:
    L = len(params.biases)
    weights, biases = [], []
    pos = 0
    for W in params.weights[:-1]:
        weights.append(theta[pos:pos + W.size].reshape(W.shape))
        pos += W.size
    for b in params.biases:
        biases.append(theta[pos:pos + b.size])
        pos += b.size
    assert len(weights) == L
    return NetworkParams(tuple(weights) + (params.weights[-1],), tuple(biases), params.linear_coef,
                         params.mixture, params.leaky_slope)


def _inner_prior_var(params: NetworkParams, scales: HorseshoeState) -> np.ndarray:
    w_parts, b_parts = [], []
    for blk in scales.inner:
        v = blk.variance()
        w_parts.append(v[:, :-1].ravel())
        b_parts.append(v[:, -1])
    return np.clip(np.concatenate(w_parts + b_parts), SCALE_MIN, SCALE_MAX)


def inner_potential(params: NetworkParams, y: np.ndarray, X: np.ndarray, scales: HorseshoeState,
                    sv: SvState) -> PotentialFn:
    """Negative log conditional posterior of the inner weights and its gradient."""
    offset = y - X @ params.linear_coef
    noise_prec = np.exp(-sv.log_vol)
    prior_prec = 1.0 / _inner_prior_var(params, scales)

    def potential(theta):
        p = _unpack_inner(theta, params)
        f, Z, A = forward_batch(p, X)
        r = offset - f
        U = 0.5 * np.sum(noise_prec * r * r) + 0.5 * np.sum(prior_prec * theta * theta)
        gW, gb = backward_batch(p, Z, A, noise_prec * r)
        grad = -np.concatenate([g.ravel() for g in gW + gb]) + prior_prec * theta
        return float(U), grad

    return potential


def hmc_update_inner(params: NetworkParams, y: np.ndarray, X: np.ndarray, scales: HorseshoeState, sv: SvState,
                     cfg: ChainConfig, rng: np.random.Generator) -> tuple[NetworkParams, bool, bool]:
    """One HMC proposal for ``W_1..W_L`` and ``b_1..b_L``; returns ``(params, accepted, divergent)``."""
    potential = inner_potential(params, y, X, scales, sv)
    res = hmc_kernel(_pack_inner(params), potential, cfg.hmc_step_size, cfg.hmc_n_steps, rng)
    if res.divergent:
        logger.debug("divergent HMC trajectory")
    return _unpack_inner(res.theta, params), res.accepted, res.divergent


# -- activation indicators -------------------------------------------------------

def _categorical_from_loglik(loglik: np.ndarray, rng: np.random.Generator) -> int:
    if not np.any(np.isfinite(loglik)):
        raise NumericError("all candidate activations have zero likelihood")
    m = np.max(loglik)
    prob = np.exp(loglik - m)
    prob /= prob.sum()
    return min(int(np.searchsorted(np.cumsum(prob), rng.random(), side="right")), 3) + 1


def draw_activation_indicators(params: NetworkParams, y: np.ndarray, X: np.ndarray, sv: SvState,
                               rng: np.random.Generator) -> NetworkParams:
    """Gibbs sweep over every hidden neuron's activation id, layer by layer, ascending index.

    Each neuron's id is drawn with probability proportional to the (uniform)
    prior times the Gaussian likelihood of the data with all other
    parameters held fixed.
    """
    if params.mixture.indicators is None:
        raise InvalidInputError("indicator draws need a hard (indicator-based) mixture")
    offset = y - X @ params.linear_coef
    prec = np.exp(-sv.log_vol)
    indicators = [d.copy() for d in params.mixture.indicators]
    L = len(indicators)
    alpha = params.leaky_slope

    for layer in range(L - 1):
        for q in range(len(indicators[layer])):
            ll = np.empty(4)
            for m in ACTIVATION_IDS:
                indicators[layer][q] = m
                f = forward_batch(params.with_indicators(indicators), X)[0]
                r = offset - f
                with np.errstate(over="ignore"):
                    ll[m - 1] = -0.5 * np.sum(prec * r * r)
            indicators[layer][q] = _categorical_from_loglik(ll, rng)

    # last hidden layer: only the output sum changes, so update incrementally
    current = params.with_indicators(indicators)
    f, Z, A = forward_batch(current, X)
    z_last = Z[-1]
    w_out = current.weights[-1][0]
    for q in range(len(indicators[-1])):
        base = f - w_out[q] * A[-1][:, q]
        ll = np.empty(4)
        cand = []
        for m in ACTIVATION_IDS:
            a = _apply(m, z_last[:, q], alpha)
            cand.append(a)
            r = offset - base - w_out[q] * a
            with np.errstate(over="ignore"):
                ll[m - 1] = -0.5 * np.sum(prec * r * r)
        m_new = _categorical_from_loglik(ll, rng)
        indicators[-1][q] = m_new
        A[-1][:, q] = cand[m_new - 1]
        f = base + w_out[q] * cand[m_new - 1]
    return params.with_indicators(indicators)


# -- chain -----------------------------------------------------------------------

class ShockSlotDraws(NamedTuple):
    """Per-draw values for a set of design columns, refreshed every iteration.

    ``values[j]`` has shape ``(T, len(columns))``; iteration ``it`` uses draw
    ``it - n_burn`` once past burn-in and ``it % n_draws`` before.
    """

    columns: np.ndarray
    values: np.ndarray

    def index_for(self, it: int, n_burn: int) -> int:
        n = self.values.shape[0]
        return it - n_burn if it >= n_burn else it % n


@dataclass
class ChainOutput:
    """Retained posterior draws of one chain (leading axis indexes draws)."""

    shape: NetworkShape | None
    linear_coef: np.ndarray
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    indicators: tuple[np.ndarray, ...]
    scales: dict[str, np.ndarray]
    log_vol: np.ndarray
    sv_params: np.ndarray
    residuals: np.ndarray
    leaky_slope: float = LEAKY_SLOPE
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.linear_coef.shape[0]

    @property
    def network_enabled(self) -> bool:
        return self.shape is not None

    def params(self, j: int) -> NetworkParams | None:
        if not self.network_enabled:
            return None
        return NetworkParams(
            weights=tuple(w[j] for w in self.weights),
            biases=tuple(b[j] for b in self.biases),
            linear_coef=self.linear_coef[j],
            mixture=ActivationMixture.from_indicators([d[j] for d in self.indicators]),
            leaky_slope=self.leaky_slope,
        )

    def network_draw(self, j: int, X: np.ndarray) -> np.ndarray:
        """Network output of draw ``j`` at every row of ``X`` (zeros if disabled)."""
        if not self.network_enabled:
            return np.zeros(X.shape[0])
        return forward_batch(self.params(j), X)[0]

    def predict_draws(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.stack([X @ self.linear_coef[j] + self.network_draw(j, X) for j in range(self.n_draws)])


def _init_params(shape: NetworkShape, rng: np.random.Generator, leaky_slope: float) -> NetworkParams:
    weights = tuple(0.1 * rng.standard_normal(s) for s in shape.weight_shapes())
    biases = tuple(0.1 * rng.standard_normal(q) for q in shape.Q)
    indicators = [rng.integers(1, 5, size=q) for q in shape.Q]
    return NetworkParams(weights, biases, np.zeros(shape.K), ActivationMixture.from_indicators(indicators),
                         leaky_slope)


def run_chain(y: np.ndarray, X: np.ndarray, shape: NetworkShape | None, cfg: ChainConfig,
              fixed_shock_draws: ShockSlotDraws | None = None, rng: np.random.Generator | None = None
              ) -> ChainOutput:
    """Run the full sampler and keep the ``n_iter - n_burn`` post-burn-in draws.

    ``shape=None`` disables the network term (pure horseshoe linear regression
    with the same variance block).
    """
    y = np.asarray(y, dtype=float)
    X = np.array(X, dtype=float)
    T, K = X.shape
    if y.shape != (T,):
        raise InvalidInputError(f"y has shape {y.shape}, expected ({T},)")
    if shape is not None and shape.K != K:
        raise InvalidInputError(f"network expects {shape.K} inputs but X has {K} columns")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if fixed_shock_draws is not None:
        cols = np.asarray(fixed_shock_draws.columns, dtype=int)
        if fixed_shock_draws.values.shape[1:] != (T, len(cols)):
            raise InvalidInputError("shock slot draws do not match the design")

    n_keep = cfg.n_keep
    net = shape is not None
    params = _init_params(shape, rng, cfg.leaky_slope) if net else None
    gamma = np.zeros(K)
    scales = HorseshoeState.initial(shape, K)
    v0 = float(np.log(max(np.var(y), 1e-12)))
    sv = SvState(log_vol=np.full(T, v0), mu=v0)

    keep_gamma = np.empty((n_keep, K))
    keep_w = tuple(np.empty((n_keep,) + s) for s in shape.weight_shapes()) if net else ()
    keep_b = tuple(np.empty((n_keep, q)) for q in shape.Q) if net else ()
    keep_ind = tuple(np.empty((n_keep, q), dtype=np.int64) for q in shape.Q) if net else ()
    keep_scales = {"linear_lambda_sq": np.empty(n_keep), "linear_varphi_sq": np.empty((n_keep, K))}
    if net:
        keep_scales["output_lambda_sq"] = np.empty(n_keep)
        keep_scales["output_varphi_sq"] = np.empty((n_keep, shape.Q[-1]))
        for i, blk in enumerate(scales.inner):
            keep_scales[f"inner{i}_lambda_sq"] = np.empty((n_keep,) + blk.lambda_sq.shape)
            keep_scales[f"inner{i}_varphi_sq"] = np.empty((n_keep,) + blk.varphi_sq.shape)
    keep_h = np.empty((n_keep, T))
    keep_sv = np.empty((n_keep, 3))
    keep_eps = np.empty((n_keep, T))

    timing = dict.fromkeys(("linear_output", "hmc", "horseshoe", "indicators", "sv"), 0.0)
    n_accept = n_accept_burn = n_div = 0
    clamps: dict[str, int] = {}

    for it in range(cfg.n_iter):
        try:
            if fixed_shock_draws is not None:
                X[:, cols] = fixed_shock_draws.values[fixed_shock_draws.index_for(it, cfg.n_burn)]

            t0 = time.perf_counter()
            if net:
                f, _, A = forward_batch(params, X)
                gamma, w_out = draw_linear_and_output(y, X, A[-1], scales, sv, rng)
                params = NetworkParams(params.weights[:-1] + (w_out[None, :],), params.biases, gamma,
                                       params.mixture, params.leaky_slope)
            else:
                gamma, _ = draw_linear_and_output(y, X, None, scales, sv, rng)
            t1 = time.perf_counter()
            timing["linear_output"] += t1 - t0

            if net:
                params, accepted, divergent = hmc_update_inner(params, y, X, scales, sv, cfg, rng)
                if it >= cfg.n_burn:
                    n_accept += accepted
                else:
                    n_accept_burn += accepted
                n_div += divergent
            t2 = time.perf_counter()
            timing["hmc"] += t2 - t1

            scales = update_scales(params, gamma, scales, rng, clamps)
            t3 = time.perf_counter()
            timing["horseshoe"] += t3 - t2

            if net:
                params = draw_activation_indicators(params, y, X, sv, rng)
                f = forward_batch(params, X)[0]
            else:
                f = 0.0
            t4 = time.perf_counter()
            timing["indicators"] += t4 - t3

            eps = y - X @ gamma - f
            sv = sv_update(eps, sv, rng, enabled=cfg.sv_enabled)
            timing["sv"] += time.perf_counter() - t4
        except NumericError as exc:
            raise NumericError(f"iteration {it}: {exc}") from exc

        if it >= cfg.n_burn:
            j = it - cfg.n_burn
            keep_gamma[j] = gamma
            for arr, w in zip(keep_w, params.weights if net else ()):
                arr[j] = w
            for arr, b in zip(keep_b, params.biases if net else ()):
                arr[j] = b
            for arr, d in zip(keep_ind, params.mixture.indicators if net else ()):
                arr[j] = d
            keep_scales["linear_lambda_sq"][j] = scales.linear.lambda_sq[0]
            keep_scales["linear_varphi_sq"][j] = scales.linear.varphi_sq[0]
            if net:
                keep_scales["output_lambda_sq"][j] = scales.output.lambda_sq[0]
                keep_scales["output_varphi_sq"][j] = scales.output.varphi_sq[0]
                for i, blk in enumerate(scales.inner):
                    keep_scales[f"inner{i}_lambda_sq"][j] = blk.lambda_sq
                    keep_scales[f"inner{i}_varphi_sq"][j] = blk.varphi_sq
            keep_h[j] = sv.log_vol
            keep_sv[j] = (sv.mu, sv.phi_ar, sv.sigma_eta)
            keep_eps[j] = eps

    diagnostics = {"timing": timing, "divergences": int(n_div), "scale_clamps": dict(sorted(clamps.items()))}
    if clamps:
        logger.warning("horseshoe scale draws clamped to [%g, %g]: %s", SCALE_MIN, SCALE_MAX, clamps)
    if net:
        rate = n_accept / n_keep
        diagnostics["hmc_acceptance"] = rate
        diagnostics["hmc_acceptance_burn"] = n_accept_burn / cfg.n_burn if cfg.n_burn else float("nan")
        diagnostics["hmc_acceptance_in_range"] = bool(0.4 <= rate <= 0.95)
        if not diagnostics["hmc_acceptance_in_range"]:
            logger.warning("HMC acceptance rate %.3f outside [0.4, 0.95]; consider retuning the step size", rate)
    return ChainOutput(
        shape=shape,
        linear_coef=keep_gamma,
        weights=keep_w,
        biases=keep_b,
        indicators=keep_ind,
        scales=keep_scales,
        log_vol=keep_h,
        sv_params=keep_sv,
        residuals=keep_eps,
        leaky_slope=cfg.leaky_slope,
        diagnostics=diagnostics,
    )
