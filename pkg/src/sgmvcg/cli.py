"""Command line entry point: ``sgmvcg {synth,train,variance-exp,compare}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .data import LibsvmParseError, dump_libsvm, load_libsvm, maxmin_scale, synth_ridge
from .harness import (
    PAIRS,
    SUITE_DIMS,
    VarianceExperimentConfig,
    compare_convergence,
    count_wins,
    runtime_ratio,
    standard_variants,
    synth_suite,
    variance_experiment,
)
from .linesearch import WolfeParams
from .model import RidgeObjective
from .optimize import DivergedError, RunConfig, run
from .sgmv import DEFAULT_GAMMA_EPS
from .svg import emit_svg_lines

logger = logging.getLogger("sgmvcg")


class ConfigError(ValueError):
    pass


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment. Keys use flag names."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global")
    g.add_argument("--config", help="flat key=value file; command-line flags win")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", default=".")
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _data_args(p):
    g = p.add_argument_group("data")
    g.add_argument("--data", help="LIBSVM file (default: a synthetic ridge instance)")
    g.add_argument("--n", type=int, default=1000, help="synthetic sample count")
    g.add_argument("--d", type=int, default=10, help="synthetic dimension")
    g.add_argument("--noise", type=float, default=0.1, help="synthetic target noise sd")
    g.add_argument("--data-seed", type=int, default=None,
                   help="synthetic data seed (default: --seed)")
    g.add_argument("--scale", choices=("none", "maxmin"), default="none")
    g.add_argument("--lambda", dest="lam", type=float, default=1e-3)


def _solver_args(p):
    g = p.add_argument_group("solver")
    g.add_argument("--batch-size", type=int, default=64)
    g.add_argument("--gamma-eps", type=float, default=DEFAULT_GAMMA_EPS)
    g.add_argument("--sigma1", type=float, default=1e-4)
    g.add_argument("--sigma2", type=float, default=0.1)
    g.add_argument("--alpha-init", type=float, default=1.0)
    g.add_argument("--alpha-max", type=float, default=1.0)
    g.add_argument("--ls-max-evals", type=int, default=20)
    g.add_argument("--line-model", choices=("corrected", "batch"), default="corrected")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="sgmvcg",
        description="Stochastic conjugate gradient with minimum-variance gradient estimates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic ridge dataset")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--output", help="LIBSVM output path (default: <out-dir>/<name>.libsvm)")
    p.add_argument("--w-true", help="also write the generating weights, one per line")

    p = sub.add_parser("train", parents=[common], help="run one solver and write its trace")
    _data_args(p)
    _solver_args(p)
    p.add_argument("--algorithm", choices=("alg1", "alg2"), default="alg1")
    p.add_argument("--gamma", choices=("star", "one"), default="star")
    p.add_argument("--iters", type=int, default=100, help="alg1 iterations")
    p.add_argument("--outer", type=int, default=5, help="alg2 outer loops")
    p.add_argument("--inner", type=int, default=20, help="alg2 inner iterations")
    p.add_argument("--option", type=int, choices=(1, 2), default=1)
    p.add_argument("--eval-every", type=int, default=1)
    p.add_argument("--trace", help="trace CSV path (default: <out-dir>/trace.csv)")
    p.add_argument("--coef", help="write fitted weights here, one per line")

    p = sub.add_parser("variance-exp", parents=[common],
                       help="estimator variance along a deterministic CG path")
    _data_args(p)
    _solver_args(p)
    p.add_argument("--checkpoints", type=int, default=100)
    p.add_argument("--batches", type=int, default=100)
    p.add_argument("--gamma-one-only", action="store_true",
                   help="force gamma=1 in both columns (sanity check)")
    p.add_argument("--output", help="CSV path (default: <out-dir>/variance.csv)")

    p = sub.add_parser("compare", parents=[common],
                       help="SCGA / Algorithm1 / CGVR / Algorithm2 on several datasets")
    _solver_args(p)
    p.add_argument("--data", action="append", default=[], help="LIBSVM file; repeatable")
    p.add_argument("--suite", action="store_true",
                   help=f"add the synthetic suite (d in {list(SUITE_DIMS)})")
    p.add_argument("--suite-n", type=int, default=2000)
    p.add_argument("--scale", choices=("none", "maxmin"), default="none")
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.add_argument("--seeds", type=int, default=5, help="seeds --seed .. --seed+N-1")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--inner", type=int, default=20)
    p.add_argument("--threshold", type=float, default=float("-inf"))
    p.add_argument("--timing-repeats", type=int, default=1)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` fill in flags not given explicitly."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = read_config(args.config)
    except (OSError, ConfigError) as exc:
        parser.error(str(exc))
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {}
    for action in sub._actions:
        known[action.dest] = action
        for opt in action.option_strings:
            known[opt.lstrip("-").replace("-", "_")] = action
    unknown = sorted(set(cfg) - set(known) - {"config"})
    if unknown:
        parser.error(f"unknown config keys for {args.command}: {', '.join(unknown)}")
    defaults = {}
    for key, raw in cfg.items():
        action = known.get(key)
        if action is None:
            continue
        try:
            if action.nargs == 0:
                value = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                value = action.type(raw)
            else:
                value = raw
        except ValueError as exc:
            parser.error(f"config key {key}: {exc}")
        if action.choices is not None and value not in action.choices:
            parser.error(f"config key {key}: {value!r} not in {list(action.choices)}")
        defaults[action.dest] = [value] if isinstance(action, argparse._AppendAction) else value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _wolfe(args) -> WolfeParams:
    return WolfeParams(sigma1=args.sigma1, sigma2=args.sigma2, alpha_init=args.alpha_init,
                       alpha_max=args.alpha_max, max_evals=args.ls_max_evals)


def _load(args):
    if args.data:
        ds = load_libsvm(args.data)
    else:
        seed = args.seed if args.data_seed is None else args.data_seed
        ds, _ = synth_ridge(args.n, args.d, args.noise, seed=seed)
    return maxmin_scale(ds) if args.scale == "maxmin" else ds


def _write_vector(path, v):
    Path(path).write_text("".join(f"{float(x)!r}\n" for x in v))


def cmd_synth(args, out):
    ds, w_true = synth_ridge(args.n, args.d, args.noise, seed=args.seed)
    path = Path(args.output) if args.output else out / f"{ds.name}.libsvm"
    path.write_text(dump_libsvm(ds))
    if args.w_true:
        _write_vector(args.w_true, w_true)
    print(f"wrote {path} (n={ds.n}, d={ds.d})")
    return 0


def cmd_train(args, out):
    ds = _load(args)
    obj = RidgeObjective(ds, args.lam)
    cfg = RunConfig(algorithm=args.algorithm, gamma_mode=args.gamma,
                    batch_size=args.batch_size, wolfe=_wolfe(args), max_iters=args.iters,
                    outer=args.outer, inner=args.inner, option=args.option, seed=args.seed,
                    eval_every=args.eval_every, gamma_eps=args.gamma_eps,
                    line_model=args.line_model)
    w_star = obj.exact_minimizer() if args.lam > 0 else None
    status = 0
    try:
        trace = run(obj, cfg, w_star=w_star)
    except DivergedError as exc:
        logger.error("%s", exc)
        trace, status = exc.trace, 3
    path = Path(args.trace) if args.trace else out / "trace.csv"
    path.write_text(trace.to_csv())
    if args.coef and trace.w is not None:
        _write_vector(args.coef, trace.w)
    last = trace.records[-1]
    print(f"{cfg.variant} on {ds.name}: iter={last.iter} loss={last.loss:.6g} "
          f"gap={last.gap:.3g} wall_ms={last.wall_ms:.1f} "
          f"ls_failures={trace.ls_failures}/{trace.steps} trace={path}")
    return status


def cmd_variance(args, out):
    ds = _load(args)
    cfg = VarianceExperimentConfig(lam=args.lam, num_checkpoints=args.checkpoints,
                                   num_batches=args.batches, batch_size=args.batch_size,
                                   seed=args.seed, wolfe=_wolfe(args),
                                   gamma_eps=args.gamma_eps,
                                   gamma_one_only=args.gamma_one_only)
    res = variance_experiment(ds, cfg)
    path = Path(args.output) if args.output else out / "variance.csv"
    path.write_text(res.to_csv())
    series = {
        "gamma*": list(zip(res.k, res.var_gamma_star)),
        "gamma=1": list(zip(res.k, res.var_gamma_one)),
    }
    if np.all(res.var_gamma_star > 0) and np.all(res.var_gamma_one > 0):
        emit_svg_lines(series, path.with_suffix(".svg"), xlabel="checkpoint k",
                       ylabel="variance", title=ds.name, log_y=True)
    frac = float(np.mean(res.var_gamma_star <= res.var_gamma_one))
    print(f"{len(res.k)} checkpoints; var_gamma_star <= var_gamma_one at {frac:.0%}; csv={path}")
    return 0


def cmd_compare(args, out):
    datasets = [load_libsvm(p) for p in args.data]
    if args.suite:
        datasets.extend(synth_suite(n=args.suite_n))
    if not datasets:
        raise SystemExit("compare: give --data and/or --suite")
    if args.scale == "maxmin":
        datasets = [maxmin_scale(ds) for ds in datasets]
    variants = standard_variants(args.iters, args.inner, batch_size=args.batch_size,
                                 wolfe=_wolfe(args), gamma_eps=args.gamma_eps,
                                 line_model=args.line_model)
    seeds = range(args.seed, args.seed + args.seeds)
    report = compare_convergence(datasets, variants, seeds, lam=args.lam,
                                 threshold=args.threshold, threads=args.threads,
                                 timing_repeats=args.timing_repeats)
    report.write(out)
    for star, one in PAIRS:
        print(f"{star} <= {one} on {count_wins(report, star, one)}/{len(datasets)} datasets")
    print(f"runtime ratio (gamma* / gamma=1, paired runs): {runtime_ratio(report):.3f}")
    print(f"report written to {out}")
    return 0


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "variance-exp": cmd_variance,
            "compare": cmd_compare}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](args, out)
    except (LibsvmParseError, OSError, ValueError) as exc:
        print(f"sgmvcg {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
