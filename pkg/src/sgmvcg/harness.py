"""Experiment drivers: estimator variance along a CG path, and solver comparisons."""
from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .data import Dataset, synth_ridge
from .linesearch import WolfeParams
from .model import RidgeObjective
from .optimize import CG_WOLFE, DivergedError, RunConfig, RunTrace, cg_minimize, run
from .sgmv import DEFAULT_GAMMA_EPS, BatchGradients, estimate_gamma, sgmv_estimate, unit_gamma
from .svg import emit_svg_lines

logger = logging.getLogger(__name__)

VARIANCE_COLUMNS = ("k", "var_gamma_star", "var_gamma_one")


@dataclass(frozen=True)
class VarianceExperimentConfig:
    lam: float = 1e-3
    num_checkpoints: int = 100
    num_batches: int = 100
    batch_size: int = 64
    seed: int = 0
    wolfe: WolfeParams = CG_WOLFE
    gamma_eps: float = DEFAULT_GAMMA_EPS
    gtol: float = 1e-12
    gamma_one_only: bool = False

    def __post_init__(self):
        if self.num_checkpoints < 1:
            raise ValueError("num_checkpoints must be >= 1")
        if self.num_batches < 2:
            raise ValueError("num_batches must be >= 2")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 for gamma* statistics")


@dataclass
class VarianceResult:
    k: np.ndarray
    var_gamma_star: np.ndarray
    var_gamma_one: np.ndarray
    meta: Dict[str, object]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.meta.items():
            buf.write(f"# {key}={value}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(VARIANCE_COLUMNS)
        for row in zip(self.k, self.var_gamma_star, self.var_gamma_one):
            writer.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2]))])
        return buf.getvalue()


def variance_experiment(ds: Dataset, cfg: VarianceExperimentConfig = VarianceExperimentConfig()
                        ) -> VarianceResult:
    """Variance of the gamma* and gamma=1 estimates of the gradient at a fixed target.

    Deterministic CG from 0 supplies iterates ``w_0 .. w_K``; ``w_K`` is the
    target and ``w_0 .. w_{K-1}`` are the checkpoints. For each checkpoint
    ``w_k`` and each of a fixed set of batches ``S_l``::

        g(gamma) = grad f_S(w_K) - gamma * (grad f_S(w_k) - grad f(w_k))

    The reported variance is over ``l`` (divisor L), summed over coordinates.
    """
    obj = RidgeObjective(ds, cfg.lam)
    K = cfg.num_checkpoints
    path = cg_minimize(obj, np.zeros(obj.d), cfg.wolfe, max_iters=K, gtol=cfg.gtol)
    iterates = path.iterates
    if len(iterates) < K + 1:
        warnings.warn(
            f"CG converged after {len(iterates) - 1} iterations; "
            f"using {max(len(iterates) - 1, 1)} checkpoints instead of {K}",
            RuntimeWarning, stacklevel=2,
        )
    if len(iterates) == 1:
        iterates = iterates * 2
    target = iterates[-1]
    checkpoints = iterates[:-1]

    rng = np.random.default_rng(cfg.seed)
    batches = [rng.integers(0, obj.n, size=cfg.batch_size) for _ in range(cfg.num_batches)]
    target_grads = [obj.batch_grads(target, idx) for idx in batches]

    var_star = np.empty(len(checkpoints))
    var_one = np.empty(len(checkpoints))
    for k, w_k in enumerate(checkpoints):
        mu = obj.full_grad(w_k)
        g_star = np.empty((cfg.num_batches, obj.d))
        g_one = np.empty((cfg.num_batches, obj.d))
        for l, idx in enumerate(batches):
            bg = BatchGradients(target_grads[l], obj.batch_grads(w_k, idx), idx)
            gam = unit_gamma(obj.d) if cfg.gamma_one_only else estimate_gamma(bg, cfg.gamma_eps)
            g_star[l] = sgmv_estimate(bg, mu, gam)
            g_one[l] = sgmv_estimate(bg, mu, 1.0)
        var_star[k] = g_star.var(axis=0).sum()
        var_one[k] = g_one.var(axis=0).sum()

    meta = {
        "dataset": ds.name, "n": obj.n, "d": obj.d, "lambda": cfg.lam,
        "batch_size": cfg.batch_size, "num_batches": cfg.num_batches,
        "checkpoints_requested": K, "checkpoints_used": len(checkpoints),
        "cg": "PRP-FR full gradient, strong Wolfe", "seed": cfg.seed,
    }
    return VarianceResult(np.arange(len(checkpoints)), var_star, var_one, meta)


# ---------------------------------------------------------------------------
# solver comparison


@dataclass
class RunSummary:
    dataset: str
    variant: str
    seed: int
    failed: bool
    final_loss: float = math.nan
    final_gap: float = math.nan
    wall_ms: float = math.nan
    iters_to_threshold: Optional[int] = None
    trace: Optional[RunTrace] = None
    error: str = ""


SUMMARY_COLUMNS = ("dataset", "variant", "seed", "status", "final_loss", "final_gap",
                   "iters_to_threshold", "wall_ms")


@dataclass
class ComparisonReport:
    runs: List[RunSummary]
    datasets: List[str]
    variants: List[str]
    threshold: float

    def cell(self, dataset, variant) -> List[RunSummary]:
        return [r for r in self.runs if r.dataset == dataset and r.variant == variant]

    def mean_log10_curve(self, dataset, variant, column="loss"):
        """Seed-average of log10 of the traced ``column``; None if every run failed."""
        traces = [r.trace for r in self.cell(dataset, variant) if not r.failed]
        if not traces:
            return None
        iters = traces[0].iters
        vals = [np.log10(t.column(column)) for t in traces]
        length = min(len(v) for v in vals)
        return iters[:length], np.mean([v[:length] for v in vals], axis=0)

    def mean_final_log10(self, dataset, variant, column="loss") -> float:
        curve = self.mean_log10_curve(dataset, variant, column)
        return math.nan if curve is None else float(curve[1][-1])

    def total_wall_ms(self, variant) -> float:
        return float(sum(r.wall_ms for r in self.runs if r.variant == variant and not r.failed))

    def curve_csv(self, dataset, column="loss") -> str:
        """``iter`` then one ``log10_<column>`` column per variant (seed mean)."""
        curves = {v: self.mean_log10_curve(dataset, v, column) for v in self.variants}
        ok = {v: c for v, c in curves.items() if c is not None}
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter"] + [f"{v}" for v in self.variants])
        if not ok:
            return buf.getvalue()
        length = min(len(c[0]) for c in ok.values())
        iters = next(iter(ok.values()))[0][:length]
        for i in range(length):
            row = [int(iters[i])]
            for v in self.variants:
                row.append(repr(float(curves[v][1][i])) if curves[v] is not None else "failed")
            writer.writerow(row)
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for r in self.runs:
            writer.writerow([
                r.dataset, r.variant, r.seed, "failed" if r.failed else "ok",
                repr(r.final_loss), repr(r.final_gap),
                "" if r.iters_to_threshold is None else r.iters_to_threshold,
                repr(r.wall_ms),
            ])
        return buf.getvalue()

    def write(self, out_dir, column="loss"):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(self.summary_csv())
        for ds in self.datasets:
            stem = _safe(ds)
            (out / f"{stem}_curves.csv").write_text(self.curve_csv(ds, column))
            series = {}
            for v in self.variants:
                c = self.mean_log10_curve(ds, v, column)
                if c is not None:
                    series[v] = list(zip(c[0], c[1]))
            if series:
                emit_svg_lines(series, out / f"{stem}.svg", xlabel="iteration",
                               ylabel=f"log10 {column}", title=ds)
        return out


def _safe(name):
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def _summarize(ds_name, cfg: RunConfig, trace: RunTrace, threshold) -> RunSummary:
    last = trace.records[-1]
    hit = None
    for r in trace.records:
        if r.loss <= threshold:
            hit = r.iter
            break
    return RunSummary(ds_name, cfg.variant, cfg.seed, False, last.loss, last.gap,
                      trace.wall_ms, hit, trace)


def _one_run(ds: Dataset, obj, w_star, cfg: RunConfig, threshold, timing_repeats=1):
    try:
        trace = run(obj, cfg, w_star=w_star)
    except DivergedError as exc:
        logger.warning("%s / %s seed %d diverged: %s", ds.name, cfg.variant, cfg.seed, exc)
        return RunSummary(ds.name, cfg.variant, cfg.seed, True, trace=exc.trace, error=str(exc))
    summary = _summarize(ds.name, cfg, trace, threshold)
    for _ in range(timing_repeats - 1):
        # runs are deterministic given the seed; repeats only sharpen the timing
        summary.wall_ms = min(summary.wall_ms, run(obj, cfg, w_star=w_star).wall_ms)
    return summary


def compare_convergence(datasets: Sequence[Dataset], variants: Sequence[RunConfig],
                        seeds: Sequence[int] = (0,), lam: float = 1e-3,
                        threshold: float = -math.inf, threads: int = 1,
                        timing_repeats: int = 1) -> ComparisonReport:
    """Run every (dataset, variant, seed) and collect traces.

    ``threshold`` is a loss level for ``iters_to_threshold``. Diverged runs
    are kept and marked failed. With ``timing_repeats > 1`` each run is
    repeated and its ``wall_ms`` is the fastest repeat.
    """
    if timing_repeats < 1:
        raise ValueError("timing_repeats must be >= 1")
    jobs = []
    for ds in datasets:
        obj = RidgeObjective(ds, lam)
        w_star = obj.exact_minimizer() if lam > 0 else None
        for cfg in variants:
            for s in seeds:
                jobs.append((ds, obj, w_star, cfg.with_(seed=s), threshold, timing_repeats))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(lambda j: _one_run(*j), jobs))
    else:
        runs = [_one_run(*j) for j in jobs]
    names = []
    for cfg in variants:
        if cfg.variant not in names:
            names.append(cfg.variant)
    return ComparisonReport(runs, [d.name for d in datasets], names, threshold)


def standard_variants(iters: int = 100, inner: int = 20, **common) -> List[RunConfig]:
    """SCGA, Algorithm1, CGVR, Algorithm2 with shared batch size and Wolfe settings.

    The epoch variants use ``iters // inner`` outer loops so all four take
    ``iters`` stochastic steps.
    """
    outer = max(1, iters // inner)
    return [
        RunConfig(algorithm="alg1", gamma_mode="one", max_iters=iters, **common),
        RunConfig(algorithm="alg1", gamma_mode="star", max_iters=iters, **common),
        RunConfig(algorithm="alg2", gamma_mode="one", outer=outer, inner=inner, **common),
        RunConfig(algorithm="alg2", gamma_mode="star", outer=outer, inner=inner, **common),
    ]


def linear_fit_r2(y) -> tuple:
    """Least-squares line through ``(i, y_i)``; returns ``(slope, r2)``."""
    y = np.asarray(y, dtype=np.float64)
    x = np.arange(len(y), dtype=np.float64)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


SUITE_DIMS = (12, 22, 54, 74, 90, 123)


def synth_suite(dims: Sequence[int] = SUITE_DIMS, n: int = 2000, noise_sd: float = 0.1,
                seed: int = 100) -> List[Dataset]:
    """Synthetic ridge instances spanning a range of dimensions.

    Instance ``d`` uses data seed ``seed + d``.
    """
    return [synth_ridge(n, d, noise_sd, seed=seed + d, name=f"synth_d{d}")[0] for d in dims]


PAIRS = (("Algorithm1", "SCGA"), ("Algorithm2", "CGVR"))


def runtime_ratio(report: ComparisonReport, pairs=PAIRS) -> float:
    """Total wall time of the gamma* variants over their gamma=1 partners.

    Only (dataset, seed) runs where both members of a pair finished are
    counted, so a diverged baseline cannot shrink the denominator.
    """
    index = {(r.dataset, r.variant, r.seed): r for r in report.runs}
    num = den = 0.0
    for (ds, variant, seed), r in index.items():
        for star, one in pairs:
            if variant != star:
                continue
            partner = index.get((ds, one, seed))
            if partner is None or r.failed or partner.failed:
                continue
            num += r.wall_ms
            den += partner.wall_ms
    return num / den if den > 0 else math.nan


def count_wins(report: ComparisonReport, star: str, one: str, column="loss") -> int:
    """Datasets where ``star`` ends with mean log10 ``column`` <= ``one``'s.

    A variant with every run failed counts as +inf.
    """
    wins = 0
    for ds in report.datasets:
        a = report.mean_final_log10(ds, star, column)
        b = report.mean_final_log10(ds, one, column)
        a = math.inf if math.isnan(a) else a
        b = math.inf if math.isnan(b) else b
        if math.isfinite(a) and a <= b:
            wins += 1
    return wins
