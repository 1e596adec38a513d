"""Scikit-learn style wrapper around the BNN sampler."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_1d_float, as_2d_float, check_consistent_rows
from .bnn_core import NetworkShape
from .exceptions import InvalidInputError
from .mcmc import ChainConfig, run_chain


class BNNRegressor(RegressorMixin, BaseEstimator):
    """Horseshoe Bayesian neural network regression ``y = x'gamma + f(x) + e``.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int or None
        Widths of the hidden layers; ``None`` uses one layer with as many
        neurons as input features.
    n_iter, n_burn : int
        Total MCMC iterations and the number discarded as burn-in.
    hmc_step_size, hmc_n_steps : float, int
        Leapfrog step size and path length for the inner-weight HMC update.
    stochastic_volatility : bool
        Time-varying error variance (``True``) or a single variance.
    use_network : bool
        ``False`` drops ``f`` and fits a horseshoe linear regression.
    random_state : int
        Seed for the chain.

    Attributes
    ----------
    chain_ : ChainOutput
        Retained posterior draws.
    """

    def __init__(self, hidden_layer_sizes=None, n_iter=20000, n_burn=10000, hmc_step_size=0.01, hmc_n_steps=10,
                 stochastic_volatility=True, use_network=True, leaky_slope=0.01, random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.n_iter = n_iter
        self.n_burn = n_burn
        self.hmc_step_size = hmc_step_size
        self.hmc_n_steps = hmc_n_steps
        self.stochastic_volatility = stochastic_volatility
        self.use_network = use_network
        self.leaky_slope = leaky_slope
        self.random_state = random_state

    def fit(self, X, y):
        X = as_2d_float(X, "X")
        y = as_1d_float(y, "y")
        check_consistent_rows(X, y)
        K = X.shape[1]
        self.n_features_in_ = K
        sizes = (K,) if self.hidden_layer_sizes is None else tuple(self.hidden_layer_sizes)
        self.shape_ = NetworkShape(K=K, Q=sizes) if self.use_network else None
        seed = 0 if self.random_state is None else int(self.random_state)
        cfg = ChainConfig(n_iter=self.n_iter, n_burn=self.n_burn, hmc_step_size=self.hmc_step_size,
                          hmc_n_steps=self.hmc_n_steps, seed=seed, sv_enabled=self.stochastic_volatility,
                          leaky_slope=self.leaky_slope)
        self.chain_ = run_chain(y, X, self.shape_, cfg)
        return self

    def predict_draws(self, X) -> np.ndarray:
        """Conditional mean for every retained draw, shape ``(n_draws, n_samples)``."""
        check_is_fitted(self, "chain_")
        X = as_2d_float(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise InvalidInputError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self.chain_.predict_draws(X)

    def predict(self, X) -> np.ndarray:
        return self.predict_draws(X).mean(axis=0)
