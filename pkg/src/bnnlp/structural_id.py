"""Recursive (Cholesky) identification of the shock to the first-ordered variable."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import linalg
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_2d_float
from .exceptions import DataError, InvalidInputError, NumericError


@dataclass(frozen=True)
class VarSpec:
    """Lag order and variable ordering; ``variable_order[0]`` is the instrument variable."""

    p: int = 6
    variable_order: tuple[str, ...] = ()
    include_intercept: bool = True

    def __post_init__(self):
        object.__setattr__(self, "variable_order", tuple(self.variable_order))
        if self.p < 1:
            raise InvalidInputError(f"lag order must be >= 1, got {self.p}")


@dataclass(frozen=True)
class VarFit:
    coefficients: np.ndarray  # (n_regressors, N); intercept first when included
    residuals: np.ndarray  # (T - p, N)
    sigma: np.ndarray  # (N, N), denominator T - p
    regressor_names: tuple[str, ...]


@dataclass(frozen=True)
class ShockSeries:
    zeta: np.ndarray
    time_index: np.ndarray


def lag_design(data: np.ndarray, p: int, include_intercept: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Stack ``[1, y_{t-1}, ..., y_{t-p}]`` rows; returns ``(Z, Y)`` for ``t = p..T-1``."""
    T = data.shape[0]
    blocks = [data[p - k:T - k] for k in range(1, p + 1)]
    if include_intercept:
        blocks.insert(0, np.ones((T - p, 1)))
    return np.hstack(blocks), data[p:]


def _dependent_columns(Z: np.ndarray, names: list[str]) -> list[str]:
    bad = []
    kept = np.empty((Z.shape[0], 0))
    rank = 0
    for j, name in enumerate(names):
        trial = np.column_stack([kept, Z[:, j]])
        r = np.linalg.matrix_rank(trial)
        if r > rank:
            kept, rank = trial, r
        else:
            bad.append(name)
    return bad


def fit_var_ols(data, spec: VarSpec) -> VarFit:
    """Equation-by-equation least squares for a VAR(p)."""
    names = list(spec.variable_order)
    if isinstance(data, pd.DataFrame):
        if names:
            missing = [c for c in names if c not in data.columns]
            if missing:
                raise DataError(f"VAR variables missing from data: {missing}")
            data = data[names]
        else:
            names = [str(c) for c in data.columns]
    data = as_2d_float(data, "data")
    T, N = data.shape
    if not names:
        names = [f"y{i}" for i in range(N)]
    if len(names) != N:
        raise InvalidInputError("variable_order length does not match the number of columns")
    p = spec.p
    if T <= N * p + 1:
        raise DataError(f"need T > N*p + 1 observations, got T={T}, N={N}, p={p}")
    Z, Y = lag_design(data, p, spec.include_intercept)
    reg_names = (["const"] if spec.include_intercept else []) + [
        f"{n}.L{k}" for k in range(1, p + 1) for n in names]
    if np.linalg.matrix_rank(Z) < Z.shape[1]:
        raise DataError(f"rank-deficient VAR design; dependent regressors: {_dependent_columns(Z, reg_names)}")
    coef, *_ = np.linalg.lstsq(Z, Y, rcond=None)
    U = Y - Z @ coef
    sigma = U.T @ U / (T - p)
    return VarFit(coefficients=coef, residuals=U, sigma=sigma, regressor_names=tuple(reg_names))


def cholesky_impact(sigma: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(np.asarray(sigma, dtype=float), lower=True)
    except linalg.LinAlgError as exc:
        raise NumericError("residual covariance is not positive definite; consider adding a small ridge "
                           "to its diagonal") from exc


def structural_shocks(U: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """All recursive structural shocks ``E = U (P')^{-1}``."""
    P = cholesky_impact(sigma)
    return linalg.solve_triangular(P, np.asarray(U, dtype=float).T, lower=True).T


def extract_shock(U: np.ndarray, sigma: np.ndarray, time_index=None) -> ShockSeries:
    """Unit-variance structural shock to the first-ordered variable."""
    U = as_2d_float(U, "U")
    sigma = np.asarray(sigma, dtype=float)
    if not np.allclose(sigma, sigma.T):
        raise NumericError("residual covariance must be symmetric")
    zeta = structural_shocks(U, sigma)[:, 0]
    if time_index is None:
        time_index = np.arange(len(zeta))
    return ShockSeries(zeta=zeta, time_index=np.asarray(time_index))


class CholeskyShockExtractor(TransformerMixin, BaseEstimator):
    """Fit a VAR(p) by OLS and map data to the recursive shock of its first column.

    ``transform`` returns an array of length ``n_samples - lags`` (the first
    ``lags`` rows have no shock).
    """

    def __init__(self, lags=6, include_intercept=True):
        self.lags = lags
        self.include_intercept = include_intercept

    def fit(self, X, y=None):
        columns = list(X.columns) if isinstance(X, pd.DataFrame) else []
        spec = VarSpec(p=self.lags, variable_order=tuple(columns), include_intercept=self.include_intercept)
        fit = fit_var_ols(X, spec)
        self.var_ = fit
        self.impact_ = cholesky_impact(fit.sigma)
        self.n_features_in_ = fit.sigma.shape[0]
        if columns:
            self.feature_names_in_ = np.asarray(columns, dtype=object)
        return self

    def transform(self, X):
        check_is_fitted(self, "var_")
        data = as_2d_float(X, "X")
        if data.shape[1] != self.n_features_in_:
            raise InvalidInputError(f"expected {self.n_features_in_} columns, got {data.shape[1]}")
        Z, Y = lag_design(data, self.lags, self.include_intercept)
        U = Y - Z @ self.var_.coefficients
        return linalg.solve_triangular(self.impact_, U.T, lower=True).T[:, 0]
