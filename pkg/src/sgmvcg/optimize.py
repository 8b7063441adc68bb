"""Stochastic conjugate gradient with variance-reduced gradient estimates.

``run_alg1`` keeps a per-sample gradient table (SCGA-style, SAGA-like
virtual checkpoints). ``run_alg2`` uses an epoch checkpoint with a full
gradient per outer loop (CGVR-style, SVRG-like). ``gamma_mode="one"``
gives the plain SCGA / CGVR baselines.
"""
from __future__ import annotations

import csv
import io
import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .linesearch import (
    DirectionState,
    LineSearchResult,
    WolfeParams,
    strong_wolfe,
    update_direction,
)
from .model import FiniteSumObjective
from .sgmv import DEFAULT_GAMMA_EPS, fused_estimate

ALGORITHMS = ("alg1", "alg2")
GAMMA_MODES = ("star", "one")
LINE_MODELS = ("corrected", "batch")
VARIANT_NAMES = {
    ("alg1", "one"): "SCGA",
    ("alg1", "star"): "Algorithm1",
    ("alg2", "one"): "CGVR",
    ("alg2", "star"): "Algorithm2",
}


class DivergedError(RuntimeError):
    """Raised when the loss or gradient blows up; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "alg1"
    gamma_mode: str = "star"
    batch_size: int = 64
    wolfe: WolfeParams = field(default_factory=WolfeParams)
    max_iters: int = 100
    outer: int = 5
    inner: int = 20
    option: int = 1
    seed: int = 0
    eval_every: int = 1
    gamma_eps: float = DEFAULT_GAMMA_EPS
    full_batch: bool = False
    recompute_every: int = 1000
    diverge_factor: float = 1e6
    memory_budget: float = 2e9
    line_model: str = "corrected"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.gamma_mode not in GAMMA_MODES:
            raise ValueError(f"gamma_mode must be one of {GAMMA_MODES}, got {self.gamma_mode!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.gamma_mode == "star" and self.batch_size < 2 and not self.full_batch:
            raise ValueError("gamma_mode='star' needs batch_size >= 2")
        if self.option not in (1, 2):
            raise ValueError("option must be 1 or 2")
        if self.max_iters < 0 or self.outer < 1 or self.inner < 0:
            raise ValueError("need max_iters >= 0, outer >= 1, inner >= 0")
        if self.line_model not in LINE_MODELS:
            raise ValueError(f"line_model must be one of {LINE_MODELS}")
        if self.eval_every < 1:
            raise ValueError("eval_every must be positive")
        if not self.diverge_factor > 1.0:
            raise ValueError("diverge_factor must exceed 1")

    @property
    def variant(self) -> str:
        return VARIANT_NAMES[(self.algorithm, self.gamma_mode)]

    @property
    def total_iters(self) -> int:
        return self.max_iters if self.algorithm == "alg1" else self.outer * self.inner

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


class TraceRecord(NamedTuple):
    iter: int
    loss: float
    full_grad_norm: float
    alpha: float
    beta: float
    gamma_min: float
    gamma_max: float
    fallback_count: int
    wall_ms: float
    ls_evals: int
    ls_success: bool
    gap: float


TRACE_COLUMNS = TraceRecord._fields


@dataclass
class RunTrace:
    records: List[TraceRecord] = field(default_factory=list)
    w: Optional[np.ndarray] = None
    epoch_losses: List[float] = field(default_factory=list)
    epoch_gaps: List[float] = field(default_factory=list)
    variant: str = ""
    ls_failures: int = 0
    steps: int = 0

    def column(self, name) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def iters(self):
        return self.column("iter")

    @property
    def losses(self):
        return self.column("loss")

    @property
    def gaps(self):
        return self.column("gap")

    @property
    def wall_ms(self) -> float:
        return self.records[-1].wall_ms if self.records else 0.0

    def to_csv(self, fh=None) -> str:
        buf = fh if fh is not None else io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in self.records:
            writer.writerow([_fmt(v) for v in r])
        return buf.getvalue() if fh is None else ""


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


class StepInfo(NamedTuple):
    """What a step callback sees: the point, direction, estimate and the
    batch context the line search ran on (``idx=None`` means the full sum)."""

    k: int
    w: np.ndarray
    d: np.ndarray
    g: np.ndarray
    idx: Optional[np.ndarray]
    corr: np.ndarray
    result: LineSearchResult


class GradientTable:
    """Last-seen gradient of every sample plus their running mean."""

    def __init__(self, table: np.ndarray, recompute_every: int = 1000):
        self.table = table
        self.mean = table.mean(axis=0)
        self.recompute_every = recompute_every
        self._updates = 0

    @classmethod
    def initialize(cls, obj: FiniteSumObjective, w, chunk: int = 4096, **kw):
        table = np.empty((obj.n, obj.d))
        for start in range(0, obj.n, chunk):
            idx = np.arange(start, min(start + chunk, obj.n))
            table[idx] = obj.batch_grads(w, idx)
        return cls(table, **kw)

    def rows(self, idx) -> np.ndarray:
        return self.table[idx]

    def update(self, idx, grads):
        """Overwrite rows ``idx`` with ``grads``; duplicates count once."""
        idx = np.asarray(idx)
        uniq, first = np.unique(idx, return_index=True)
        new = grads[first]
        n = self.table.shape[0]
        self.mean = self.mean + (new - self.table[uniq]).sum(axis=0) / n
        self.table[uniq] = new
        self._updates += 1
        if self._updates % self.recompute_every == 0:
            self.mean = self.table.mean(axis=0)

    def drift(self) -> float:
        exact = self.table.mean(axis=0)
        return float(np.linalg.norm(self.mean - exact) / max(np.linalg.norm(exact), 1e-300))


def line_function(obj: FiniteSumObjective, w, d, idx=None, corr=None, corrected=True):
    """Restriction of the batch model to the ray ``w + a d``.

    The slope is ``(grad f_S(w + a d) - corr) . d``, the directional
    derivative of the gradient estimate with its control-variate term held
    fixed. With ``corrected=True`` the value is ``f_S(w + a d) - a corr . d``
    so value and slope belong to the same function; with ``corrected=False``
    the value is the raw batch loss ``f_S(w + a d)``.
    """
    sel = slice(None) if idx is None else idx
    shift = 0.0 if (corr is None or not corrected) else float(corr @ d)

    def phi(a):
        x = w + a * d
        g = obj.batch_grad(x, sel)
        if corr is not None:
            g = g - corr
        return obj.batch_loss(x, sel) - a * shift, float(g @ d)

    return phi


class _Clock:
    """Wall clock that can be paused while the trace evaluates the full loss."""

    def __init__(self):
        self.elapsed = 0.0
        self._t = time.perf_counter()

    def pause(self):
        self.elapsed += time.perf_counter() - self._t

    def resume(self):
        self._t = time.perf_counter()

    @property
    def ms(self):
        return 1e3 * self.elapsed


def excess_loss(obj, w, w_star) -> float:
    if w_star is None:
        return math.nan
    if hasattr(obj, "excess_loss"):
        return obj.excess_loss(w, w_star)
    return obj.loss(w) - obj.loss(w_star)


class _Recorder:
    def __init__(self, obj, cfg: RunConfig, trace: RunTrace, w_star=None):
        self.obj = obj
        self.cfg = cfg
        self.trace = trace
        self.w_star = w_star
        self.clock = _Clock()
        self.loss0 = None

    def epoch_end(self, x):
        self.clock.pause()
        self.trace.epoch_losses.append(self.obj.loss(x))
        self.trace.epoch_gaps.append(excess_loss(self.obj, x, self.w_star))
        self.clock.resume()

    def __call__(self, k, w, alpha=math.nan, beta=math.nan, gam=None, ls=None, force=False):
        if not (force or k % self.cfg.eval_every == 0):
            return
        self.clock.pause()
        loss = self.obj.loss(w)
        gnorm = float(np.linalg.norm(self.obj.full_grad(w)))
        if self.loss0 is None:
            self.loss0 = loss
        if gam is None:
            gmin = gmax = math.nan
            fb = 0
        else:
            gmin, gmax, fb = float(gam.gamma.min()), float(gam.gamma.max()), gam.fallback_count
        rec = TraceRecord(
            k, loss, gnorm, float(alpha), float(beta), gmin, gmax, fb, self.clock.ms,
            ls.evals if ls is not None else 0, bool(ls.success) if ls is not None else True,
            excess_loss(self.obj, w, self.w_star),
        )
        if self.trace.records and self.trace.records[-1].iter == k:
            self.trace.records[-1] = rec
        else:
            self.trace.records.append(rec)
        if not (math.isfinite(loss) and math.isfinite(gnorm)) or (
            loss > self.cfg.diverge_factor * max(self.loss0, 1e-300)
        ):
            self.trace.w = w
            raise DivergedError(f"run diverged at iteration {k} (loss={loss})", self.trace)
        self.clock.resume()


def _check_finite(k, *arrays, trace=None, w=None):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            if trace is not None:
                trace.w = w
            raise DivergedError(f"non-finite gradient estimate at iteration {k}", trace)


def _sample(rng, obj, cfg: RunConfig):
    if cfg.full_batch:
        return np.arange(obj.n)
    return rng.integers(0, obj.n, size=cfg.batch_size)


def _estimate(x_grads, y_grads, mu, cfg: RunConfig):
    if cfg.gamma_mode == "star" and x_grads.shape[0] < 2:
        raise ValueError("gamma* needs at least 2 samples per batch")
    return fused_estimate(x_grads, y_grads, mu, cfg.gamma_mode == "star", cfg.gamma_eps)


def _search(obj, w, d, g, idx, corr, wolfe, line_model, k, trace, callback):
    slope0 = float(g @ d)
    sel = slice(None) if idx is None else idx
    phi0 = obj.batch_loss(w, sel)
    ls = strong_wolfe(line_function(obj, w, d, idx, corr, corrected=line_model == "corrected"),
                      wolfe, phi0=phi0, dphi0=slope0)
    trace.steps += 1
    if not ls.success:
        trace.ls_failures += 1
    if callback is not None:
        callback(StepInfo(k, w, d, g, idx, corr, ls))
    return ls


def _initial_point(obj, w0):
    return np.zeros(obj.d) if w0 is None else np.array(w0, dtype=np.float64, copy=True)


def run_alg1(obj: FiniteSumObjective, cfg: RunConfig, w0=None,
             callback: Optional[Callable[[StepInfo], None]] = None, w_star=None) -> RunTrace:
    """Gradient-table stochastic CG (SCGA when ``gamma_mode='one'``).

    Each iteration: strong Wolfe step along ``d_{k-1}``, fresh batch
    gradients at ``w_k``, control variates read from the table rows, the
    minimum-variance estimate with checkpoint mean ``mu_{k-1}``, a PRP-FR
    direction, then the table rows and mean are refreshed.
    """
    if cfg.algorithm != "alg1":
        raise ValueError("run_alg1 needs cfg.algorithm == 'alg1'")
    if obj.n * obj.d * 8 > cfg.memory_budget:
        warnings.warn(
            f"gradient table needs {obj.n * obj.d * 8 / 1e9:.2f} GB "
            f"(budget {cfg.memory_budget / 1e9:.2f} GB)", ResourceWarning, stacklevel=2,
        )
    rng = np.random.default_rng(cfg.seed)
    trace = RunTrace(variant=cfg.variant)
    rec = _Recorder(obj, cfg, trace, w_star)
    w = _initial_point(obj, w0)

    table = GradientTable.initialize(obj, w, recompute_every=cfg.recompute_every)
    mu = table.mean
    g = mu.copy()
    d = -g
    state = DirectionState.from_step(g, d)
    idx, corr = None, None
    rec(0, w, force=True)

    for k in range(1, cfg.max_iters + 1):
        if not float(g @ d) < 0.0:
            break  # zero gradient estimate
        ls = _search(obj, w, d, g, idx, corr, cfg.wolfe, cfg.line_model, k - 1, trace, callback)
        w = w + ls.alpha * d

        idx = _sample(rng, obj, cfg)
        x_grads = obj.batch_grads(w, idx)
        g, corr, gam = _estimate(x_grads, table.rows(idx), mu, cfg)
        _check_finite(k, g, trace=trace, w=w)

        d, beta = update_direction(g, state)
        state = DirectionState.from_step(g, d)
        table.update(idx, x_grads)
        mu = table.mean
        rec(k, w, ls.alpha, beta, gam, ls, force=k == cfg.max_iters)

    trace.w = w
    return trace


def run_alg2(obj: FiniteSumObjective, cfg: RunConfig, w0=None,
             callback: Optional[Callable[[StepInfo], None]] = None, w_star=None) -> RunTrace:
    """Epoch-checkpoint stochastic CG (CGVR when ``gamma_mode='one'``).

    Outer loop ``l``: full gradient ``mu`` at ``x_{l-1}``, restart from
    ``g_0 = h_{l-1}``. Inner loop: Wolfe step, batch gradients at ``w_k``
    and at the epoch start, minimum-variance estimate, PRP-FR direction.
    ``x_l`` is the last inner iterate (option 1) or a random one (option 2).
    Iterations in the trace are counted globally across epochs.
    """
    if cfg.algorithm != "alg2":
        raise ValueError("run_alg2 needs cfg.algorithm == 'alg2'")
    rng = np.random.default_rng(cfg.seed)
    trace = RunTrace(variant=cfg.variant)
    rec = _Recorder(obj, cfg, trace, w_star)
    x = _initial_point(obj, w0)
    h = obj.full_grad(x)
    idx, corr = None, None
    rec(0, x, force=True)
    rec.epoch_end(x)
    total = 0

    for _ in range(cfg.outer):
        mu = obj.full_grad(x)
        w_anchor = x
        w = x
        g = h
        d = -g
        state = DirectionState.from_step(g, d)
        inner_points = []
        for _k in range(cfg.inner):
            if not float(g @ d) < 0.0:
                break
            ls = _search(obj, w, d, g, idx, corr, cfg.wolfe, cfg.line_model, total, trace, callback)
            w = w + ls.alpha * d
            total += 1

            idx = _sample(rng, obj, cfg)
            g, corr, gam = _estimate(obj.batch_grads(w, idx), obj.batch_grads(w_anchor, idx),
                                     mu, cfg)
            _check_finite(total, g, trace=trace, w=w)

            d, beta = update_direction(g, state)
            state = DirectionState.from_step(g, d)
            if cfg.option == 2:
                inner_points.append(w)
            rec(total, w, ls.alpha, beta, gam, ls, force=total == cfg.total_iters)
        h = g
        if cfg.option == 2 and inner_points:
            x = inner_points[int(rng.integers(0, len(inner_points)))]
        else:
            x = w
        rec.epoch_end(x)

    trace.w = x
    return trace


def run(obj: FiniteSumObjective, cfg: RunConfig, w0=None, callback=None, w_star=None) -> RunTrace:
    fn = run_alg1 if cfg.algorithm == "alg1" else run_alg2
    return fn(obj, cfg, w0=w0, callback=callback, w_star=w_star)


# Full-gradient CG needs steps near 1 / curvature, far beyond the stochastic cap of 1.
CG_WOLFE = WolfeParams(alpha_max=1e6)


@dataclass
class CGResult:
    iterates: List[np.ndarray]
    descent_ratios: List[float]
    ls_results: List[LineSearchResult]
    converged: bool

    @property
    def w(self):
        return self.iterates[-1]


def cg_minimize(obj: FiniteSumObjective, w0=None, wolfe: WolfeParams = CG_WOLFE,
                max_iters: int = 100, gtol: float = 0.0) -> CGResult:
    """Deterministic full-gradient PRP-FR conjugate gradient.

    Stores every iterate ``w_0 .. w_K`` and the ratio
    ``<g_k, d_k> / ||g_k||^2`` for each direction used. Stops early once
    ``||g|| <= gtol`` or the line search can no longer find a decrease.
    """
    w = _initial_point(obj, w0)
    g = obj.full_grad(w)
    d, _ = update_direction(g)
    state = DirectionState.from_step(g, d)
    iterates = [w]
    ratios = []
    searches = []
    converged = False
    for _ in range(max_iters):
        gg = float(g @ g)
        if math.sqrt(gg) <= gtol or gg == 0.0:
            converged = True
            break
        ratios.append(float(g @ d) / gg)
        ls = strong_wolfe(line_function(obj, w, d), wolfe,
                          phi0=obj.loss(w), dphi0=float(g @ d))
        searches.append(ls)
        w_new = w + ls.alpha * d
        if not ls.success and (not math.isfinite(ls.phi) or np.array_equal(w_new, w)):
            # no representable decrease left: numerically converged
            converged = True
            break
        w = w_new
        iterates.append(w)
        g = obj.full_grad(w)
        d, _ = update_direction(g, state)
        state = DirectionState.from_step(g, d)
    else:
        converged = float(np.linalg.norm(g)) <= gtol
    return CGResult(iterates, ratios, searches, converged)
