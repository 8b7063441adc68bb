"""Finite-sum objectives ``f(w) = (1/n) sum_i f_i(w)`` and the ridge instance."""
from __future__ import annotations

import abc
import warnings

import numpy as np

from .data import Dataset


class FiniteSumObjective(abc.ABC):
    """Average of ``n`` smooth per-sample losses over ``R^d``.

    Subclasses supply the batched primitives; the single-sample and full
    versions are derived from them.
    """

    n: int
    d: int

    @abc.abstractmethod
    def batch_losses(self, w, idx) -> np.ndarray:
        """Per-sample losses ``f_j(w)`` for ``j`` in ``idx``."""

    @abc.abstractmethod
    def batch_grads(self, w, idx) -> np.ndarray:
        """Per-sample gradients, shape ``(len(idx), d)``."""

    def _check_index(self, i):
        if not (0 <= i < self.n):
            raise IndexError(f"sample index {i} out of range [0, {self.n})")

    def loss_i(self, w, i) -> float:
        self._check_index(i)
        return float(self.batch_losses(w, np.array([i]))[0])

    def grad_i(self, w, i) -> np.ndarray:
        self._check_index(i)
        return self.batch_grads(w, np.array([i]))[0]

    def batch_loss(self, w, idx) -> float:
        return float(np.mean(self.batch_losses(w, idx)))

    def batch_grad(self, w, idx) -> np.ndarray:
        return self.batch_grads(w, idx).mean(axis=0)

    def loss(self, w) -> float:
        return self.batch_loss(w, slice(None))

    def full_grad(self, w) -> np.ndarray:
        return self.batch_grad(w, slice(None))


class RidgeObjective(FiniteSumObjective):
    """``f_i(w) = (y_i - x_i . w)^2 + lam * ||w||^2``.

    The regulariser sits inside every ``f_i`` so each term is strongly
    convex on its own; the average equals the usual ridge objective.
    """

    def __init__(self, data: Dataset, lam: float = 1e-3):
        if lam < 0:
            raise ValueError(f"lam must be nonnegative, got {lam}")
        self.data = data
        self.lam = float(lam)
        self.n, self.d = data.features.shape
        self._X = data.features
        self._y = data.targets

    def residuals(self, w, idx=slice(None)):
        return self._y[idx] - self._X[idx] @ w

    def batch_losses(self, w, idx):
        r = self.residuals(w, idx)
        return r * r + self.lam * float(w @ w)

    def batch_grads(self, w, idx):
        r = self.residuals(w, idx)
        return (-2.0 * r)[:, None] * self._X[idx] + 2.0 * self.lam * w

    def batch_loss(self, w, idx):
        r = self.residuals(w, idx)
        return float(r @ r) / r.shape[0] + self.lam * float(w @ w)

    def batch_grad(self, w, idx):
        X = self._X[idx]
        r = self._y[idx] - X @ w
        return (-2.0 / X.shape[0]) * (X.T @ r) + 2.0 * self.lam * w

    def convexity_constants(self):
        """Per-sample Hessian bounds ``(mu, L)``.

        Each Hessian is ``2 x_i x_i^T + 2 lam I``, so ``mu = 2 lam`` and
        ``L = 2 max_i ||x_i||^2 + 2 lam``.
        """
        if self.lam == 0:
            warnings.warn("lam = 0: objective is not strongly convex (mu = 0)",
                          RuntimeWarning, stacklevel=2)
        mu = 2.0 * self.lam
        L = 2.0 * float(np.max(np.einsum("ij,ij->i", self._X, self._X))) + 2.0 * self.lam
        return mu, L

    def exact_minimizer(self):
        """Solve ``((2/n) X^T X + 2 lam I) w = (2/n) X^T y`` directly."""
        X, y, n = self._X, self._y, self.n
        A = (2.0 / n) * (X.T @ X) + 2.0 * self.lam * np.eye(self.d)
        b = (2.0 / n) * (X.T @ y)
        try:
            w = np.linalg.solve(A, b)
        except np.linalg.LinAlgError as exc:
            raise FloatingPointError(f"ridge normal equations are singular: {exc}") from exc
        if not np.all(np.isfinite(w)):
            raise FloatingPointError("ridge solve produced non-finite entries")
        return w

    def excess_loss(self, w, w_star=None) -> float:
        """``f(w) - f(w*)`` without cancellation.

        The objective is quadratic with zero gradient at ``w*``, so the gap
        is ``||X (w - w*)||^2 / n + lam ||w - w*||^2``. Stays accurate far
        below the rounding floor of ``loss(w) - loss(w_star)``.
        """
        if w_star is None:
            w_star = self.exact_minimizer()
        delta = w - w_star
        r = self._X @ delta
        return float(r @ r) / self.n + self.lam * float(delta @ delta)


def convexity_constants(obj: RidgeObjective):
    return obj.convexity_constants()


def exact_minimizer(obj: RidgeObjective):
    return obj.exact_minimizer()
