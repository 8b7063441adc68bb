import numpy as np
from sklearn.base import BaseEstimator, OneToOneFeatureMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data


def maxmin_transform(X, lo, hi):
    """``2 (x - lo) / (hi - lo) - 1`` per column; zero where ``hi == lo``."""
    X = np.asarray(X, dtype=np.float64)
    span = hi - lo
    const = span == 0
    safe = np.where(const, 1.0, span)
    out = 2.0 * (X - lo) / safe - 1.0
    out[:, const] = 0.0
    return out


class MaxMinScaler(OneToOneFeatureMixin, TransformerMixin, BaseEstimator):
    """Scale each feature onto [-1, 1] using the training min and max.

    Constant training columns map to 0 instead of raising. Unlike
    ``sklearn.preprocessing.MinMaxScaler(feature_range=(-1, 1))``, which sends
    constant columns to -1, this keeps them at the centre of the range.
    """

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        return self

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return maxmin_transform(X, self.data_min_, self.data_max_)
