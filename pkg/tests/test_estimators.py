import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from bnnlp._validation import as_1d_float, as_2d_float, check_consistent_rows, standardize_columns
from bnnlp.exceptions import InvalidInputError
from bnnlp.nlp import NonlinearLocalProjection
from bnnlp.regressor import BNNRegressor
from bnnlp.structural_id import CholeskyShockExtractor
from bnnlp.synth import DgpSpec, generate


@pytest.fixture(scope="module")
def regression():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((150, 2))
    y = 1.5 * X[:, 0] - 0.5 * X[:, 1] + 0.1 * rng.standard_normal(150)
    return X, y


@pytest.fixture(scope="module")
def fitted_regressor(regression):
    X, y = regression
    return BNNRegressor(n_iter=300, n_burn=150, stochastic_volatility=False, random_state=1).fit(X, y)


@pytest.fixture(scope="module")
def lp_data():
    d = generate(DgpSpec("linear", T=200, noise_sd=0.5, seed=6))
    return np.column_stack([d.zeta, d.X]), d.y


class TestBNNRegressor:
    def test_get_params_and_clone(self):
        est = BNNRegressor(hidden_layer_sizes=(3, 2), n_iter=50, random_state=4)
        params = est.get_params()
        assert params["hidden_layer_sizes"] == (3, 2) and params["random_state"] == 4
        assert clone(est).get_params() == params
        assert est.set_params(n_burn=5).n_burn == 5

    def test_fit_predict(self, fitted_regressor, regression):
        X, y = regression
        assert fitted_regressor.predict(X).shape == (150,)
        assert fitted_regressor.predict_draws(X[:7]).shape == (150, 7)
        assert fitted_regressor.score(X, y) > 0.9

    def test_linear_only(self, regression):
        X, y = regression
        est = BNNRegressor(n_iter=200, n_burn=100, use_network=False, stochastic_volatility=False).fit(X, y)
        assert est.shape_ is None
        np.testing.assert_allclose(est.chain_.linear_coef.mean(axis=0)[:2], [1.5, -0.5], atol=0.1)

    def test_deterministic(self, regression):
        X, y = regression
        a = BNNRegressor(n_iter=30, n_burn=10, random_state=2).fit(X, y).predict(X)
        b = BNNRegressor(n_iter=30, n_burn=10, random_state=2).fit(X, y).predict(X)
        assert np.array_equal(a, b)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            BNNRegressor().predict(np.ones((2, 2)))

    def test_feature_count_checked(self, fitted_regressor):
        with pytest.raises(InvalidInputError):
            fitted_regressor.predict(np.ones((3, 5)))

    def test_rejects_bad_input(self):
        with pytest.raises(InvalidInputError):
            BNNRegressor(n_iter=10, n_burn=5).fit(np.ones((10, 2)), np.ones(9))
        with pytest.raises(InvalidInputError):
            BNNRegressor(n_iter=10, n_burn=5).fit(np.full((10, 2), np.nan), np.ones(10))


class TestNonlinearLocalProjection:
    def test_get_params_and_clone(self):
        est = NonlinearLocalProjection(horizons=2, shock_sizes=(1.0, 2.0), random_state=3)
        assert clone(est).get_params() == est.get_params()

    def test_fit_and_impulse_response(self, lp_data):
        X, y = lp_data
        est = NonlinearLocalProjection(horizons=1, n_iter=60, n_burn=30, stochastic_volatility=False,
                                       n_paths=10, random_state=5).fit(X, y)
        res = est.impulse_response()
        assert res.draws.shape == (2, 3, 30)
        assert len(est.chains_) == 2 and len(est.diagnostics()) == 2
        again = est.impulse_response()
        assert np.array_equal(res.draws, again.draws)
        assert est.impulse_response(shock_sizes=[2.0]).draws.shape == (2, 1, 30)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            NonlinearLocalProjection().impulse_response()


class TestShockPipeline:
    def test_extractor_in_sklearn_pipeline(self):
        from sklearn.preprocessing import FunctionTransformer

        d = generate(DgpSpec("recursive_var", T=400, seed=2))
        frame = d.panel[["ebp", "x1", "x2"]]
        pipe = make_pipeline(FunctionTransformer(lambda a: a * 2.0), CholeskyShockExtractor(lags=1))
        zeta = pipe.fit_transform(frame.to_numpy())
        # rescaling every variable leaves the standardized shock unchanged
        np.testing.assert_allclose(zeta, CholeskyShockExtractor(lags=1).fit_transform(frame.to_numpy()), atol=1e-10)


class TestValidationHelpers:
    def test_as_2d_float(self):
        assert as_2d_float([[1, 2]]).dtype == float
        for bad in ([1, 2], [[np.inf]], [["a"]]):
            with pytest.raises(InvalidInputError):
                as_2d_float(bad)

    def test_as_1d_float(self):
        assert as_1d_float([[1.0], [2.0]]).shape == (2,)
        for bad in (np.ones((2, 2)), [np.nan], "xyz"):
            with pytest.raises(InvalidInputError):
                as_1d_float(bad)

    def test_check_consistent_rows(self):
        assert check_consistent_rows(np.ones(3), np.ones((3, 2))) == 3
        with pytest.raises(InvalidInputError, match=r"\[2, 3\]"):
            check_consistent_rows(np.ones(3), np.ones(2))

    def test_standardize_columns_keeps_constants(self):
        X = np.column_stack([np.arange(4.0), np.ones(4)])
        mean, scale = standardize_columns(X)
        assert mean[1] == 0.0 and scale[1] == 1.0
        assert mean[0] == 1.5 and scale[0] == pytest.approx(np.std(np.arange(4.0)))
