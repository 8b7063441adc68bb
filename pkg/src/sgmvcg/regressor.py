"""Scikit-learn style front end for the stochastic CG ridge solvers."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .data import Dataset
from .linesearch import WolfeParams
from .model import RidgeObjective
from .optimize import RunConfig, run
from .sgmv import DEFAULT_GAMMA_EPS


class SGMVRegressor(RegressorMixin, BaseEstimator):
    """Ridge regression fitted by stochastic conjugate gradient.

    ``algorithm='alg1'`` keeps a per-sample gradient table; ``'alg2'`` uses
    an epoch checkpoint. ``gamma='star'`` picks the per-coordinate
    minimum-variance control-variate coefficient, ``gamma='one'`` gives
    the plain SCGA / CGVR baselines. The objective is
    ``mean_i (y_i - x_i . w)^2 + lam ||w||^2`` with no intercept.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    trace_ : RunTrace with one record per iteration.
    n_iter_ : number of stochastic steps taken.
    """

    def __init__(self, algorithm="alg1", gamma="star", batch_size=64, lam=1e-3,
                 max_iter=100, n_outer=5, n_inner=20, option=1, sigma1=1e-4,
                 sigma2=0.1, alpha_init=1.0, alpha_max=1.0, ls_max_evals=20,
                 gamma_eps=DEFAULT_GAMMA_EPS, random_state=None, eval_every=1,
                 line_model="corrected"):
        self.algorithm = algorithm
        self.gamma = gamma
        self.batch_size = batch_size
        self.lam = lam
        self.max_iter = max_iter
        self.n_outer = n_outer
        self.n_inner = n_inner
        self.option = option
        self.sigma1 = sigma1
        self.sigma2 = sigma2
        self.alpha_init = alpha_init
        self.alpha_max = alpha_max
        self.ls_max_evals = ls_max_evals
        self.gamma_eps = gamma_eps
        self.random_state = random_state
        self.eval_every = eval_every
        self.line_model = line_model

    def _run_config(self) -> RunConfig:
        seed = self.random_state
        if seed is None or isinstance(seed, np.random.RandomState):
            seed = np.random.SeedSequence().entropy if seed is None else seed.randint(2**31)
        wolfe = WolfeParams(sigma1=self.sigma1, sigma2=self.sigma2, alpha_init=self.alpha_init,
                            alpha_max=self.alpha_max, max_evals=self.ls_max_evals)
        return RunConfig(algorithm=self.algorithm, gamma_mode=self.gamma,
                         batch_size=self.batch_size, wolfe=wolfe, max_iters=self.max_iter,
                         outer=self.n_outer, inner=self.n_inner, option=self.option,
                         seed=int(seed), eval_every=self.eval_every,
                         gamma_eps=self.gamma_eps, line_model=self.line_model)

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64, y_numeric=True)
        cfg = self._run_config()
        obj = RidgeObjective(Dataset(X, y, name="fit"), self.lam)
        self.trace_ = run(obj, cfg)
        self.coef_ = self.trace_.w
        self.n_iter_ = self.trace_.steps
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return X @ self.coef_
