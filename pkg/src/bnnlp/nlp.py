"""Nonlinear local projections estimated horizon by horizon.

For every horizon ``h`` the regression is

    y_{t+h} = psi_h zeta_t + x_t' gamma_h + eps_{t+h}' gamma~_h + f_h(zeta_t, x_t, eps_{t+h}) + e_{t+h}

where ``eps_{t+h} = (eps_t, ..., eps_{t+h-1})`` are the residuals of the
horizon ``0..h-1`` regressions.  Those residuals are latent: each retained
draw ``j`` of the horizon-``h`` chain is fit with draw ``j`` of the earlier
horizons' residuals, so uncertainty propagates across horizons.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_1d_float, as_2d_float, check_consistent_rows, standardize_columns
from .bnn_core import NetworkShape
from .exceptions import ConfigError, InvalidInputError
from .mcmc import ChainConfig, ChainOutput, ShockSlotDraws, run_chain

DEFAULT_SHOCK_SIZES = (1.0, -1.0, 3.0)
DEFAULT_PATHS = 400
DEFAULT_HORIZONS = 24
QUANTILES = (0.16, 0.50, 0.84)


@dataclass(frozen=True)
class LpDataset:
    """Rows ``t = 0..T-h-1`` of the horizon-``h`` regression.

    The design layout is ``[zeta_t | x_t | eps slots]``; slot ``s`` holds the
    horizon-``s`` residual at origin ``t`` and is filled per MCMC draw.
    """

    horizon: int
    target: np.ndarray
    instrument: np.ndarray
    covariates: np.ndarray
    time_index: np.ndarray

    @property
    def n_rows(self) -> int:
        return len(self.target)

    @property
    def n_slots(self) -> int:
        return self.horizon

    @property
    def n_features(self) -> int:
        return 1 + self.covariates.shape[1] + self.horizon

    @property
    def slot_columns(self) -> np.ndarray:
        start = 1 + self.covariates.shape[1]
        return np.arange(start, start + self.horizon)

    def design(self, slot_values: np.ndarray | None = None) -> np.ndarray:
        slots = np.zeros((self.n_rows, self.horizon)) if slot_values is None else slot_values
        return np.column_stack([self.instrument, self.covariates, slots])


def build_lp_dataset(y, zeta, X, h: int, time_index=None) -> LpDataset:
    """Align ``y_{t+h}`` with ``zeta_t`` and ``x_t`` on a common index."""
    y = as_1d_float(y, "y")
    zeta = as_1d_float(zeta, "zeta")
    X = as_2d_float(X, "X")
    T = check_consistent_rows(y, zeta, X)
    if not 0 <= h < T:
        raise InvalidInputError(f"horizon must lie in [0, {T - 1}], got {h}")
    idx = np.arange(T) if time_index is None else np.asarray(time_index)
    if len(idx) != T:
        raise InvalidInputError("time_index length does not match the data")
    n = T - h
    return LpDataset(horizon=h, target=y[h:], instrument=zeta[:n], covariates=X[:n], time_index=idx[:n])


@dataclass
class ShockDraws:
    """``residuals[s][j, t]`` is draw ``j`` of the horizon-``s`` residual at origin ``t``."""

    residuals: list[np.ndarray] = field(default_factory=list)

    @property
    def n_draws(self) -> int:
        return self.residuals[0].shape[0] if self.residuals else 0

    def add(self, residuals: np.ndarray) -> None:
        if self.residuals and residuals.shape[0] != self.n_draws:
            raise ConfigError("all horizons must retain the same number of draws")
        self.residuals.append(residuals)

    def slot_values(self, h: int, n_rows: int) -> np.ndarray:
        """``(n_draws, n_rows, h)`` array of the lagged-shock regressors for horizon ``h``."""
        if h > len(self.residuals):
            raise InvalidInputError(f"horizon {h} needs residual draws for horizons 0..{h - 1}")
        if h == 0:
            return np.zeros((self.n_draws, n_rows, 0))
        return np.stack([self.residuals[s][:, :n_rows] for s in range(h)], axis=-1)


@dataclass
class SequentialFit:
    """Per-horizon datasets and chains in the (standardized) model space."""

    datasets: list[LpDataset]
    chains: list[ChainOutput]
    shock_draws: ShockDraws
    y_mean: float = 0.0
    y_scale: float = 1.0
    x_mean: np.ndarray | None = None
    x_scale: np.ndarray | None = None

    @property
    def horizons(self) -> np.ndarray:
        return np.arange(len(self.chains))

    def psi_draws(self, h: int) -> np.ndarray:
        """Draws of the linear instrument coefficient in target units."""
        return self.chains[h].linear_coef[:, 0] * self.y_scale


def _neurons(rule, K: int) -> int:
    return K if rule is None or rule == "K" else int(rule)


def estimate_sequential(y, zeta, X, H: int, cfg, use_network: bool = True, hidden_layers: int = 1,
                        neurons=None, standardize: bool = True, time_index=None) -> SequentialFit:
    """Fit horizons ``0..H`` in order, threading residual draws forward.

    ``cfg`` is one :class:`ChainConfig` or a list with one per horizon; all
    must share ``n_iter`` and ``n_burn``.  Horizon ``h`` is seeded with
    ``(cfg.seed, h)``.  ``neurons=None`` (or ``"K"``) sizes each hidden layer
    to the horizon's input dimension.
    """
    cfgs = list(cfg) if isinstance(cfg, (list, tuple)) else [cfg] * (H + 1)
    if len(cfgs) != H + 1:
        raise ConfigError(f"expected {H + 1} chain configs, got {len(cfgs)}")
    if len({(c.n_iter, c.n_burn) for c in cfgs}) != 1:
        raise ConfigError("all horizon chains must use equal n_iter and n_burn")
    y = as_1d_float(y, "y")
    zeta = as_1d_float(zeta, "zeta")
    X = as_2d_float(X, "X")
    T = check_consistent_rows(y, zeta, X)
    if not 0 <= H < T:
        raise InvalidInputError(f"max horizon must lie in [0, {T - 1}], got {H}")

    if standardize:
        y_mean, y_scale = float(y.mean()), float(y.std())
        if y_scale < 1e-12:
            y_scale = 1.0
        x_mean, x_scale = standardize_columns(X)
    else:
        y_mean, y_scale = 0.0, 1.0
        x_mean, x_scale = np.zeros(X.shape[1]), np.ones(X.shape[1])
    ys = (y - y_mean) / y_scale
    Xs = (X - x_mean) / x_scale

    datasets, chains = [], []
    shocks = ShockDraws()
    for h in range(H + 1):
        ds = build_lp_dataset(ys, zeta, Xs, h, time_index)
        K = ds.n_features
        shape = NetworkShape(K=K, Q=(_neurons(neurons, K),) * hidden_layers) if use_network else None
        fixed = None
        if h > 0:
            fixed = ShockSlotDraws(columns=ds.slot_columns, values=shocks.slot_values(h, ds.n_rows))
        rng = np.random.default_rng([cfgs[h].seed, h])
        chain = run_chain(ds.target, ds.design(), shape, cfgs[h], fixed_shock_draws=fixed, rng=rng)
        shocks.add(chain.residuals)
        datasets.append(ds)
        chains.append(chain)
    return SequentialFit(datasets, chains, shocks, y_mean, y_scale, x_mean, x_scale)


def conditional_nlp(chain: ChainOutput, j: int, omega, tau: float) -> float:
    """``E[y | zeta = tau, omega] - E[y | zeta = 0, omega]`` under draw ``j``.

    ``omega`` is one design row (instrument entry ignored).  The linear part
    contributes exactly ``psi_j * tau``.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (chain.linear_coef.shape[1],):
        raise InvalidInputError(f"history row must have length {chain.linear_coef.shape[1]}, got {omega.shape}")
    rows = np.vstack([omega, omega])
    rows[0, 0] = tau
    rows[1, 0] = 0.0
    f = chain.network_draw(j, rows)
    return float(chain.linear_coef[j, 0] * tau + (f[0] - f[1]))


@dataclass
class NlpResult:
    """Posterior draws of NLP(h, tau); ``draws`` is ``(n_horizons, n_taus, n_draws)``.

    When ``linear_part`` (``(n_horizons, n_draws)``, the instrument
    coefficient) and ``network_part`` are set, ``draws = linear * tau + network``.
    """

    horizons: np.ndarray
    taus: np.ndarray
    draws: np.ndarray
    linear_part: np.ndarray | None = None
    network_part: np.ndarray | None = None
    variable: str = "y"

    def quantiles(self, q=QUANTILES) -> np.ndarray:
        """``(n_horizons, n_taus, len(q))`` bands by linear interpolation between order statistics."""
        return np.moveaxis(np.quantile(self.draws, q, axis=-1, method="linear"), 0, -1)

    def tau_index(self, tau: float) -> int:
        hits = np.flatnonzero(self.taus == tau)
        if len(hits) == 0:
            raise InvalidInputError(f"shock size {tau} not in {self.taus.tolist()}")
        return int(hits[0])


def unconditional_nlp(fit: SequentialFit, taus=DEFAULT_SHOCK_SIZES, R: int = DEFAULT_PATHS,
                      rng: np.random.Generator | int | None = 0) -> NlpResult:
    """Average conditional NLPs over ``R`` histories resampled per draw.

    For each horizon and draw, ``R`` dataset rows (including that draw's
    lagged-shock values) are drawn uniformly with replacement and shared
    across shock sizes.
    """
    if R < 1:
        raise InvalidInputError(f"R must be >= 1, got {R}")
    rng = np.random.default_rng(rng)
    taus = np.asarray(taus, dtype=float).reshape(-1)
    if len(taus) == 0:
        raise InvalidInputError("at least one shock size is required")
    n_h = len(fit.chains)
    n_draws = fit.chains[0].n_draws
    linear = np.empty((n_h, n_draws))
    network = np.zeros((n_h, len(taus), n_draws))
    n_tau = len(taus)
    for h, (ds, chain) in enumerate(zip(fit.datasets, fit.chains)):
        if ds.n_rows == 0:
            raise InvalidInputError(f"horizon {h} dataset is empty")
        linear[h] = chain.linear_coef[:, 0] * fit.y_scale
        base = ds.design()
        slots = fit.shock_draws.slot_values(h, ds.n_rows)
        cols = ds.slot_columns
        for j in range(n_draws):
            idx = rng.integers(0, ds.n_rows, size=R)
            if not chain.network_enabled:
                continue
            rows = base[idx]
            rows[:, cols] = slots[j][idx]
            stacked = np.tile(rows, (n_tau + 1, 1))
            stacked[:, 0] = np.repeat(np.append(taus, 0.0), R)
            f = chain.network_draw(j, stacked).reshape(n_tau + 1, R)
            network[h, :, j] = (f[:n_tau] - f[n_tau]).mean(axis=1) * fit.y_scale
    draws = linear[:, None, :] * taus[None, :, None] + network
    return NlpResult(horizons=np.arange(n_h), taus=taus, draws=draws, linear_part=linear, network_part=network)


def rescale_for_comparison(result: NlpResult, tau: float) -> NlpResult:
    """Responses to shock ``tau`` divided by ``tau`` (as if a +1 shock)."""
    if tau == 0:
        raise InvalidInputError("cannot rescale the response to a zero shock")
    k = result.tau_index(tau)
    if result.linear_part is not None and result.network_part is not None:
        scaled = result.linear_part + result.network_part[:, k] / tau
    else:
        scaled = result.draws[:, k] / tau
    return NlpResult(horizons=result.horizons, taus=np.array([tau]), draws=scaled[:, None, :],
                     variable=result.variable)


class NonlinearLocalProjection(BaseEstimator):
    """Sequential BNN local projections with Monte Carlo impulse responses.

    ``fit(X, y)`` expects the instrument in column ``0`` of ``X`` and the
    period-``t`` covariates in the remaining columns; ``y`` is the target
    series on the same index.
    """

    def __init__(self, horizons=DEFAULT_HORIZONS, hidden_layers=1, neurons=None, n_iter=20000, n_burn=10000,
                 hmc_step_size=0.01, hmc_n_steps=10, stochastic_volatility=True, use_network=True,
                 leaky_slope=0.01, standardize=True, shock_sizes=DEFAULT_SHOCK_SIZES, n_paths=DEFAULT_PATHS,
                 random_state=0):
        self.horizons = horizons
        self.hidden_layers = hidden_layers
        self.neurons = neurons
        self.n_iter = n_iter
        self.n_burn = n_burn
        self.hmc_step_size = hmc_step_size
        self.hmc_n_steps = hmc_n_steps
        self.stochastic_volatility = stochastic_volatility
        self.use_network = use_network
        self.leaky_slope = leaky_slope
        self.standardize = standardize
        self.shock_sizes = shock_sizes
        self.n_paths = n_paths
        self.random_state = random_state

    def _seed(self) -> int:
        if self.random_state is None:
            return int(np.random.SeedSequence().generate_state(1)[0])
        return int(self.random_state)

    def chain_config(self) -> ChainConfig:
        return ChainConfig(n_iter=self.n_iter, n_burn=self.n_burn, hmc_step_size=self.hmc_step_size,
                           hmc_n_steps=self.hmc_n_steps, seed=self._seed(),
                           sv_enabled=self.stochastic_volatility, leaky_slope=self.leaky_slope)

    def fit(self, X, y):
        X = as_2d_float(X, "X")
        y = as_1d_float(y, "y")
        check_consistent_rows(X, y)
        if X.shape[1] < 1:
            raise InvalidInputError("X needs the instrument in column 0")
        self.n_features_in_ = X.shape[1]
        cfg = self.chain_config()
        self.seed_ = cfg.seed
        self.fit_ = estimate_sequential(y, X[:, 0], X[:, 1:], self.horizons, cfg, use_network=self.use_network,
                                        hidden_layers=self.hidden_layers, neurons=self.neurons,
                                        standardize=self.standardize)
        return self

    def impulse_response(self, shock_sizes=None, n_paths=None, random_state=None) -> NlpResult:
        check_is_fitted(self, "fit_")
        taus = self.shock_sizes if shock_sizes is None else shock_sizes
        R = self.n_paths if n_paths is None else n_paths
        seed = [self.seed_, 7919] if random_state is None else random_state
        return unconditional_nlp(self.fit_, taus, R, np.random.default_rng(seed))

    @property
    def chains_(self) -> list[ChainOutput]:
        check_is_fitted(self, "fit_")
        return self.fit_.chains

    def diagnostics(self) -> list[dict]:
        return [{k: v for k, v in c.diagnostics.items() if k != "timing"} for c in self.chains_]
