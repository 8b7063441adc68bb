"""Strong Wolfe line search and PRP-FR conjugate directions."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

PhiFn = Callable[[float], Tuple[float, float]]


class NotDescentDirectionError(ValueError):
    pass


class DirectionRestart(ArithmeticError):
    """Previous gradient is (numerically) zero; restart with steepest descent."""


@dataclass(frozen=True)
class WolfeParams:
    """Strong Wolfe constants and step bounds.

    ``sigma2 >= 1/2`` is allowed but warns: the descent guarantee for
    PRP-FR directions needs ``sigma2 < 1/2``.
    """

    sigma1: float = 1e-4
    sigma2: float = 0.1
    alpha_init: float = 1.0
    alpha_min: float = 1e-10
    alpha_max: float = 1.0
    max_evals: int = 20

    def __post_init__(self):
        if not 0.0 < self.sigma1 < self.sigma2 < 1.0:
            raise ValueError(
                f"need 0 < sigma1 < sigma2 < 1, got sigma1={self.sigma1}, sigma2={self.sigma2}"
            )
        if self.sigma2 >= 0.5:
            warnings.warn(
                f"sigma2={self.sigma2} >= 1/2: conjugate directions may fail to descend",
                RuntimeWarning, stacklevel=3,
            )
        if not 0.0 < self.alpha_min <= self.alpha_init <= self.alpha_max:
            raise ValueError("need 0 < alpha_min <= alpha_init <= alpha_max")
        if self.max_evals < 1:
            raise ValueError("max_evals must be positive")


class LineSearchResult(NamedTuple):
    alpha: float
    evals: int
    success: bool
    phi: float
    dphi: float


def wolfe_satisfied(phi0, dphi0, alpha, phi_a, dphi_a, sigma1, sigma2) -> bool:
    """Check sufficient decrease and the strong curvature condition."""
    return (phi_a <= phi0 + sigma1 * alpha * dphi0) and (abs(dphi_a) <= -sigma2 * dphi0)


def _interpolate(lo, phi_lo, dphi_lo, hi, phi_hi):
    """Minimiser of the quadratic through (lo, phi_lo, dphi_lo) and (hi, phi_hi),
    safeguarded to the inner 80% of the bracket, else bisection."""
    delta = hi - lo
    mid = lo + 0.5 * delta
    if not math.isfinite(phi_hi):
        return mid
    denom = 2.0 * (phi_hi - phi_lo - dphi_lo * delta)
    if denom <= 0.0:
        return mid
    a = lo - dphi_lo * delta * delta / denom
    left, right = sorted((lo + 0.1 * delta, hi - 0.1 * delta))
    if not (left <= a <= right):
        return mid
    return a


def strong_wolfe(phi: PhiFn, params: WolfeParams = WolfeParams(),
                 phi0: Optional[float] = None, dphi0: Optional[float] = None) -> LineSearchResult:
    """Bracket-then-zoom search for a step satisfying the strong Wolfe conditions.

    ``phi(alpha)`` returns ``(value, slope)`` along the search ray. The
    slope need not be the exact derivative of the value (stochastic
    estimates are allowed); the conditions are checked as stated.

    On exhausting ``max_evals`` the best sufficient-decrease step seen is
    returned with ``success=False``, or ``alpha_min`` if there was none.
    """
    s1, s2 = params.sigma1, params.sigma2
    evals = 0
    if phi0 is None or dphi0 is None:
        phi0, dphi0 = phi(0.0)
        evals += 1
    if not dphi0 < 0.0:
        raise NotDescentDirectionError(f"phi'(0) = {dphi0} is not negative")

    def armijo(a, f):
        return f <= phi0 + s1 * a * dphi0

    def finish(a, f, g, ok):
        clamped = min(max(a, params.alpha_min), params.alpha_max)
        if clamped != a:
            ok = False
        return LineSearchResult(clamped, evals, ok, f, g)

    def zoom(lo, phi_lo, dphi_lo, hi, phi_hi):
        nonlocal evals
        while evals < params.max_evals:
            a = _interpolate(lo, phi_lo, dphi_lo, hi, phi_hi)
            f, g = phi(a)
            evals += 1
            if not math.isfinite(f) or not armijo(a, f) or f >= phi_lo:
                hi, phi_hi = a, f
                continue
            if abs(g) <= -s2 * dphi0:
                return finish(a, f, g, True)
            if g * (hi - lo) >= 0.0:
                hi, phi_hi = lo, phi_lo
            lo, phi_lo, dphi_lo = a, f, g
        if lo > 0.0:
            return finish(lo, phi_lo, dphi_lo, False)
        return finish(params.alpha_min, math.nan, math.nan, False)

    a_prev, phi_prev, dphi_prev = 0.0, phi0, dphi0
    a = params.alpha_init
    while evals < params.max_evals:
        f, g = phi(a)
        evals += 1
        if not math.isfinite(f) or not armijo(a, f) or (a_prev > 0.0 and f >= phi_prev):
            return zoom(a_prev, phi_prev, dphi_prev, a, f)
        if abs(g) <= -s2 * dphi0:
            return finish(a, f, g, True)
        if g >= 0.0:
            return zoom(a, f, g, a_prev, phi_prev)
        if a >= params.alpha_max:
            return finish(a, f, g, False)
        a_prev, phi_prev, dphi_prev = a, f, g
        a = min(2.0 * a, params.alpha_max)
    if a_prev > 0.0:
        return finish(a_prev, phi_prev, dphi_prev, False)
    return finish(params.alpha_min, math.nan, math.nan, False)


@dataclass(frozen=True)
class DirectionState:
    g_prev: np.ndarray
    d_prev: np.ndarray
    g_prev_norm2: float

    @classmethod
    def from_step(cls, g, d):
        return cls(g_prev=g, d_prev=d, g_prev_norm2=float(g @ g))


def beta_prp_fr(g_new, state: DirectionState) -> float:
    """``max(0, min(beta_PRP, beta_FR))``; bounded above by ``beta_FR``."""
    if state.g_prev_norm2 <= 1e-300:
        raise DirectionRestart("previous gradient norm is zero")
    beta_prp = float(g_new @ (g_new - state.g_prev)) / state.g_prev_norm2
    beta_fr = float(g_new @ g_new) / state.g_prev_norm2
    return max(0.0, min(beta_prp, beta_fr))


def update_direction(g_new, state: Optional[DirectionState] = None):
    """``d = -g + beta d_prev``; restarts with ``d = -g`` if that fails to descend.

    Returns ``(d_new, beta)``. With no state (first iteration) this is
    steepest descent.
    """
    if state is None:
        return -g_new, 0.0
    try:
        beta = beta_prp_fr(g_new, state)
    except DirectionRestart:
        return -g_new, 0.0
    d = -g_new + beta * state.d_prev
    if not float(g_new @ d) < 0.0:
        return -g_new, 0.0
    return d, beta
