"""Command-line interface.

Subcommands mirror the experiment kinds; every run writes CSV tables and a
JSON manifest into --out and exits nonzero when any verdict fails.

    fbmlab fbm sample      sample a path to CSV/JSON (--verify-trials runs
                           the increment-covariance exactness check)
    fbmlab lemma2          increment-covariance sum asymptotics
    fbmlab smalldev        small-deviation Monte Carlo vs the analytic bound
    fbmlab fracint check   pairing-integral exactness, independence,
                           additivity, oracle triangle, change of variable
    fbmlab represent run   the sequential construction, traces + diagnostics
    fbmlab mollifier rate  smoothing discrepancy decay
    fbmlab config validate check a JSON config file against all windows
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

from .errors import FbmLabError
from .grid import TimeGrid
from .harness import ExperimentConfig, run_experiment, validate_config
from .paths import CovarianceModel, path_to_csv, path_to_json, sample_fbm
from .representation import build_partition, construction_grid


def _add_common(p: argparse.ArgumentParser, defaults: ExperimentConfig) -> None:
    p.add_argument("--hurst", type=float, default=defaults.hurst)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--out", default=defaults.out_dir, help="report directory")


def _config_from_args(kind: str, args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(kind=kind)
    for f in fields(ExperimentConfig):
        name = f.name if f.name != "out_dir" else "out"
        if hasattr(args, name):
            setattr(cfg, f.name, getattr(args, name))
    cfg.kind = kind
    return cfg


def _finish(report, out_dir: str) -> int:
    paths = report.write(out_dir)
    for v in report.verdicts:
        state = "PASS" if v.passed else "FAIL"
        print(f"[{state}] {v.name}: measured {v.measured:.6g} vs {v.threshold:.6g}"
              f"  ({v.criterion})")
    for p in paths:
        print(f"wrote {p}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    d = ExperimentConfig(kind="lemma2-asymptotics")
    top = argparse.ArgumentParser(prog="fbmlab", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = top.add_subparsers(dest="command", required=True)

    fbm = sub.add_parser("fbm", help="path sampling")
    fbm_sub = fbm.add_subparsers(dest="fbm_command", required=True)
    smp = fbm_sub.add_parser("sample", help="sample one path, or verify the sampler")
    _add_common(smp, d)
    smp.add_argument("--grid", choices=["uniform", "construction"], default="uniform")
    smp.add_argument("--grid-size", dest="grid_size", type=int, default=1025)
    smp.add_argument("--kappa", type=float, default=d.kappa)
    smp.add_argument("--a", type=float, default=d.a)
    smp.add_argument("--n-max", dest="n_max", type=int, default=d.n_max)
    smp.add_argument("--verify-trials", dest="trials", type=int, default=0,
                     help="run the increment-covariance exactness check with "
                          "this many paths instead of writing a single path")

    lem = sub.add_parser("lemma2", help="increment-covariance sum asymptotics")
    _add_common(lem, d)
    lem.add_argument("--n", dest="n_values", type=int, nargs="+",
                     default=[4096, 8192, 16384])

    dev = sub.add_parser("smalldev", help="small-deviation Monte Carlo")
    _add_common(dev, d)
    dev.add_argument("--dev-alpha", dest="dev_alpha", type=float, default=d.dev_alpha)
    dev.add_argument("--n", dest="n_values", type=int, nargs="+", default=[4, 8, 16, 64])
    dev.add_argument("--trials", type=int, default=d.trials)

    fri = sub.add_parser("fracint", help="pairing-integral checks")
    fri_sub = fri.add_subparsers(dest="fracint_command", required=True)
    chk = fri_sub.add_parser("check")
    _add_common(chk, d)
    chk.add_argument("--alpha", type=float, default=d.alpha)
    chk.add_argument("--grid-size", dest="grid_size", type=int, default=d.grid_size)

    rpr = sub.add_parser("represent", help="the sequential construction")
    rpr_sub = rpr.add_subparsers(dest="represent_command", required=True)
    run = rpr_sub.add_parser("run")
    _add_common(run, d)
    run.add_argument("--kappa", type=float, default=d.kappa)
    run.add_argument("--a", type=float, default=d.a)
    run.add_argument("--n-max", dest="n_max", type=int, default=d.n_max)
    run.add_argument("--alpha", type=float, default=d.alpha)
    run.add_argument("--mu", type=float, default=d.mu)
    run.add_argument("--seeds", dest="n_seeds", type=int, default=d.n_seeds)
    run.add_argument("--target", choices=["identity", "zero"], default="identity")

    mol = sub.add_parser("mollifier", help="smoothing-rate diagnostics")
    mol_sub = mol.add_subparsers(dest="mollifier_command", required=True)
    rate = mol_sub.add_parser("rate")
    _add_common(rate, d)
    rate.add_argument("--N", dest="mollifier_n", type=int, nargs="+",
                      default=[16, 64, 256])

    cfgp = sub.add_parser("config", help="config file utilities")
    cfg_sub = cfgp.add_subparsers(dest="config_command", required=True)
    val = cfg_sub.add_parser("validate")
    val.add_argument("path", help="JSON config file")
    return top


def _cmd_fbm_sample(args) -> int:
    if args.trials:
        cfg = _config_from_args("sampler-exactness", args)
        return _finish(run_experiment(cfg), args.out)
    if args.grid == "construction":
        scheme = build_partition(args.kappa, args.a, args.n_max, args.hurst)
        grid = construction_grid(scheme)
    else:
        grid = TimeGrid.uniform(args.grid_size)
    path = sample_fbm(args.hurst, grid, args.seed, CovarianceModel())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"fbm_H{args.hurst}_seed{args.seed}"
    with open(out / f"{stem}.csv", "w", newline="") as fp:
        path_to_csv(path, fp)
    with open(out / f"{stem}.json", "w") as fp:
        path_to_json(path, fp)
    print(f"wrote {out / (stem + '.csv')}")
    print(f"wrote {out / (stem + '.json')}")
    return 0


def _cmd_config_validate(args) -> int:
    with open(args.path) as fp:
        cfg = ExperimentConfig.from_json(fp)
    violations = validate_config(cfg)
    if not violations:
        print("config valid")
        return 0
    for v in violations:
        print(f"violation: {v.field}: must satisfy {v.constraint}; {v.message}")
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fbm":
            return _cmd_fbm_sample(args)
        if args.command == "config":
            return _cmd_config_validate(args)
        kind = {
            "lemma2": "lemma2-asymptotics",
            "smalldev": "small-deviation",
            "fracint": "frac-integral-props",
            "represent": "representation",
            "mollifier": "mollifier-rate",
        }[args.command]
        cfg = _config_from_args(kind, args)
        return _finish(run_experiment(cfg), args.out)
    except FbmLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
