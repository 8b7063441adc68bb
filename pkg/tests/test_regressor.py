import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline
from sklearn.utils.estimator_checks import parametrize_with_checks

from sgmvcg.data import synth_ridge
from sgmvcg.preprocessing import MaxMinScaler
from sgmvcg.regressor import SGMVRegressor


@parametrize_with_checks([SGMVRegressor(random_state=0, max_iter=20), MaxMinScaler()])
def test_sklearn_compatible(estimator, check):
    check(estimator)


def test_fit_recovers_ridge_solution():
    ds, w_true = synth_ridge(500, 6, noise_sd=0.01, seed=4)
    for algorithm in ("alg1", "alg2"):
        est = SGMVRegressor(algorithm=algorithm, lam=1e-6, max_iter=200, n_outer=10,
                            n_inner=20, random_state=0).fit(ds.features, ds.targets)
        np.testing.assert_allclose(est.coef_, w_true, atol=0.05)
        assert est.score(ds.features, ds.targets) > 0.99
        assert est.n_iter_ == est.trace_.steps > 0


def test_params_round_trip_and_clone():
    est = SGMVRegressor(gamma="one", batch_size=8, sigma2=0.2)
    params = est.get_params()
    assert params["gamma"] == "one" and params["batch_size"] == 8
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(algorithm="alg2")
    assert est.algorithm == "alg2"


def test_same_seed_same_fit():
    ds, _ = synth_ridge(100, 3, seed=1)
    a = SGMVRegressor(random_state=3).fit(ds.features, ds.targets)
    b = SGMVRegressor(random_state=3).fit(ds.features, ds.targets)
    np.testing.assert_array_equal(a.coef_, b.coef_)


def test_bad_parameters_raise_on_fit():
    ds, _ = synth_ridge(50, 3, seed=1)
    with pytest.raises(ValueError):
        SGMVRegressor(algorithm="alg9").fit(ds.features, ds.targets)
    with pytest.raises(ValueError):
        SGMVRegressor(sigma1=0.5, sigma2=0.1).fit(ds.features, ds.targets)


def test_pipeline_with_scaler():
    ds, _ = synth_ridge(200, 4, seed=2)
    X = ds.features * 50 + 10
    pipe = make_pipeline(MaxMinScaler(), SGMVRegressor(random_state=0, max_iter=50))
    pipe.fit(X, ds.targets)
    assert pipe.predict(X).shape == (200,)
