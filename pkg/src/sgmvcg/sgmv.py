"""Minimum-variance control-variate gradient estimate.

Given per-sample gradients ``X_j`` at the current point and ``Y_j`` at a
checkpoint for a mini-batch, the estimate is

    g = mean(X) - gamma * (mean(Y) - checkpoint_mean)

with ``gamma`` chosen per coordinate as ``s_xy / s_y2`` (sample covariance
over sample variance). ``gamma = 1`` gives the SAGA/SVRG estimate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import FiniteSumObjective

DEFAULT_GAMMA_EPS = 1e-12


@dataclass(frozen=True)
class BatchGradients:
    x_grads: np.ndarray
    y_grads: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        if self.x_grads.ndim != 2 or self.x_grads.shape != self.y_grads.shape:
            raise ValueError(
                f"x_grads {self.x_grads.shape} and y_grads {self.y_grads.shape} "
                "must be matching 2-D arrays"
            )
        if len(self.indices) != self.x_grads.shape[0]:
            raise ValueError("indices length must equal the number of gradient rows")
        if self.x_grads.shape[0] < 1:
            raise ValueError("empty batch")

    @property
    def batch_size(self) -> int:
        return self.x_grads.shape[0]

    @classmethod
    def from_points(cls, obj: FiniteSumObjective, w, phi, indices):
        indices = np.asarray(indices)
        return cls(obj.batch_grads(w, indices), obj.batch_grads(phi, indices), indices)


@dataclass(frozen=True)
class GammaEstimate:
    gamma: np.ndarray
    s_xy: np.ndarray
    s_y2: np.ndarray
    fallback: np.ndarray

    @property
    def fallback_count(self) -> int:
        return int(np.count_nonzero(self.fallback))


def sample_stats(bg: BatchGradients):
    """Per-coordinate sample covariance ``s_xy`` and variance ``s_y2`` (divisor |S|-1)."""
    m = bg.batch_size
    if m < 2:
        raise ValueError(f"sample statistics need a batch of at least 2, got {m}")
    dy = bg.y_grads - bg.y_grads.mean(axis=0)
    # sum_j dy_j = 0, so centring X is redundant for the cross term
    s_xy = np.einsum("ij,ij->j", bg.x_grads, dy) / (m - 1)
    s_y2 = np.einsum("ij,ij->j", dy, dy) / (m - 1)
    return s_xy, s_y2


def gamma_star(s_xy, s_y2, eps: float = DEFAULT_GAMMA_EPS) -> GammaEstimate:
    """``s_xy / s_y2`` per coordinate, falling back to 1 where ``s_y2 < eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    s_xy = np.asarray(s_xy, dtype=np.float64)
    s_y2 = np.asarray(s_y2, dtype=np.float64)
    if s_xy.shape != s_y2.shape:
        raise ValueError("s_xy and s_y2 must have equal shapes")
    ok = s_y2 >= eps
    gamma = np.divide(s_xy, s_y2, out=np.ones_like(s_y2), where=ok)
    return GammaEstimate(gamma=gamma, s_xy=s_xy, s_y2=s_y2, fallback=~ok)


def unit_gamma(d: int) -> GammaEstimate:
    """The fixed ``gamma = 1`` coefficient (SAGA/SVRG), with no statistics."""
    z = np.full(d, np.nan)
    return GammaEstimate(gamma=np.ones(d), s_xy=z, s_y2=z, fallback=np.zeros(d, dtype=bool))


def estimate_gamma(bg: BatchGradients, eps: float = DEFAULT_GAMMA_EPS) -> GammaEstimate:
    return gamma_star(*sample_stats(bg), eps=eps)


def correction(bg: BatchGradients, checkpoint_mean, gamma):
    """The control-variate term ``gamma * (mean(Y) - checkpoint_mean)``."""
    g = gamma.gamma if isinstance(gamma, GammaEstimate) else np.asarray(gamma)
    return g * (bg.y_grads.mean(axis=0) - checkpoint_mean)


def sgmv_estimate(bg: BatchGradients, checkpoint_mean, gamma) -> np.ndarray:
    """``mean(X) - gamma * (mean(Y) - checkpoint_mean)``.

    ``gamma`` is a :class:`GammaEstimate` or a plain array / scalar.
    """
    return bg.x_grads.mean(axis=0) - correction(bg, checkpoint_mean, gamma)


def mc_variance_check(obj: FiniteSumObjective, w, phi, batch_size: int,
                      trials: int = 1000, seed=None, eps: float = DEFAULT_GAMMA_EPS):
    """Monte-Carlo variances of the gamma*, gamma=1 and plain mini-batch estimates.

    Batches are drawn uniformly with replacement. Returns three arrays of
    per-coordinate variances ``(var_gamma_star, var_gamma_one, var_plain)``;
    sum them for a scalar summary.
    """
    if trials < 2:
        raise ValueError("trials must be at least 2")
    rng = np.random.default_rng(seed)
    mu = obj.full_grad(phi)
    star = np.empty((trials, obj.d))
    one = np.empty((trials, obj.d))
    plain = np.empty((trials, obj.d))
    for t in range(trials):
        idx = rng.integers(0, obj.n, size=batch_size)
        bg = BatchGradients.from_points(obj, w, phi, idx)
        star[t] = sgmv_estimate(bg, mu, estimate_gamma(bg, eps))
        one[t] = sgmv_estimate(bg, mu, 1.0)
        plain[t] = bg.x_grads.mean(axis=0)
    return star.var(axis=0), one.var(axis=0), plain.var(axis=0)


def fused_estimate(x_grads, y_grads, checkpoint_mean, use_gamma_star: bool,
                   eps: float = DEFAULT_GAMMA_EPS):
    """Hot-loop form of :func:`sgmv_estimate`: each batch mean is taken once.

    Returns ``(g, corr, gamma)`` with ``gamma=None`` for the fixed
    ``gamma = 1`` case, where ``g`` is ``mean(X) - (mean(Y) - checkpoint_mean)``.
    """
    ym = y_grads.mean(axis=0)
    if not use_gamma_star:
        corr = ym - checkpoint_mean
        return x_grads.mean(axis=0) - corr, corr, None
    m1 = x_grads.shape[0] - 1
    dy = y_grads - ym
    syy = np.einsum("ij,ij->j", dy, dy)
    sxy = np.einsum("ij,ij->j", x_grads, dy)
    floor = eps * m1
    gamma = sxy / np.maximum(syy, floor)
    fallback = syy < floor
    if fallback.any():
        gamma[fallback] = 1.0
    corr = gamma * (ym - checkpoint_mean)
    return (x_grads.mean(axis=0) - corr, corr,
            GammaEstimate(gamma, sxy / m1, syy / m1, fallback))
