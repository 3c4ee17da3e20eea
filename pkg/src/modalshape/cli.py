"""Command-line entry point.

Exit codes:
  0  success
  2  configuration error (missing, unreadable or invalid config)
  3  I/O error reading or writing a data file
  4  CSV schema mismatch
  5  filter divergence (non-finite estimate, singular or ill-conditioned innovation)
  6  Jacobian validation threshold violated
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import csvio
from .config import ConfigError, RunConfig, load_config
from .estimator import FilterDivergence, IllConditionedInnovation, InnovationCovarianceError
from .jacobians import DegenerateHomotopyError, oracle_suite, oracle_thresholds
from .simulator import PARAM_NAMES, Metrics, run_filter, score_arrays, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SCHEMA = 4
EXIT_DIVERGED = 5
EXIT_THRESHOLD = 6


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _metrics_json(m: Metrics) -> str:
    def clean(v):
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, float) and not math.isfinite(v):
            return None
        return v

    return json.dumps(clean(m.summary()), indent=2, sort_keys=True) + "\n"


def _metrics_path(out: Path) -> Path:
    return out.with_name(out.name + ".metrics.json")


def cmd_simulate(args, cfg: RunConfig) -> int:
    out = Path(args.out or cfg.output_dataset)
    ds = simulate(cfg.sim, cfg.geometry, cfg.quadrature)
    try:
        csvio.write_dataset(out, ds, seed=cfg.sim.seed)
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot write {out}: {exc}") from exc
    w = ", ".join(f"{n}={v:.6g}" for n, v in zip(PARAM_NAMES, ds.w_true.as_array()))
    _say(args, f"n_samples={len(ds)} seed={cfg.sim.seed}\nperturbed w: {w}\nwrote {out}")
    return EXIT_OK


def _read_dataset(path):
    try:
        return csvio.read_dataset(path)
    except csvio.SchemaError as exc:
        raise CommandError(EXIT_SCHEMA, str(exc)) from exc
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise CommandError(EXIT_IO, f"cannot read dataset {path}: {exc}") from exc
    except ValueError as exc:  # e.g. truth sidecar with an invalid parameter vector
        raise CommandError(EXIT_SCHEMA, f"{path}: {exc}") from exc


def _summary_text(m: Metrics) -> str:
    lines = [f"{'quantity':<8} {'final_rel_err':>14} {'conv_tick':>9} {'excluded':>8}"]
    final = m.final()
    for name in m.rel_err:
        tick = m.convergence_tick[name]
        lines.append(f"{name:<8} {final[name]:>14.4g} {str(tick):>9} {m.excluded[name]:>8}")
    return "\n".join(lines)


def cmd_estimate(args, cfg: RunConfig) -> int:
    ds = _read_dataset(args.dataset or cfg.output_dataset)
    out = Path(args.out or cfg.output_estimates)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", IllConditionedInnovation)
            est = run_filter(ds, cfg.estimator, cfg.geometry, cfg.quadrature, cfg.sim.input_mode)
    except (FilterDivergence, InnovationCovarianceError, IllConditionedInnovation,
            DegenerateHomotopyError) as exc:
        raise CommandError(EXIT_DIVERGED, f"filter diverged: {exc}") from exc
    except ValueError as exc:  # parameter estimate left the model's domain
        raise CommandError(EXIT_DIVERGED, f"filter diverged: {exc}") from exc
    metrics = score_arrays(ds, [e.t for e in est], [e.params.mean for e in est],
                           cfg.geometry, cfg.quadrature)
    try:
        csvio.write_estimates(out, est)
        _metrics_path(out).write_text(_metrics_json(metrics))
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot write {out}: {exc}") from exc
    _say(args, f"{_summary_text(metrics)}\nwrote {out}")
    return EXIT_OK


def cmd_report(args, cfg: RunConfig) -> int:
    ds = _read_dataset(args.dataset or cfg.output_dataset)
    path = args.estimates or cfg.output_estimates
    try:
        table = csvio.read_estimates(path)
    except csvio.SchemaError as exc:
        raise CommandError(EXIT_SCHEMA, str(exc)) from exc
    except OSError as exc:
        raise CommandError(EXIT_IO, f"cannot read estimates {path}: {exc}") from exc
    if len(table) != len(ds):
        raise CommandError(EXIT_SCHEMA, f"{path}: {len(table)} rows for {len(ds)} dataset rows")
    try:
        metrics = score_arrays(ds, table[:, 1], table[:, 2:7], cfg.geometry, cfg.quadrature)
    except ValueError as exc:
        raise CommandError(EXIT_SCHEMA, f"{path}: {exc}") from exc
    text = _metrics_json(metrics)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise CommandError(EXIT_IO, f"cannot write {args.out}: {exc}") from exc
    _say(args, _summary_text(metrics))
    return EXIT_OK


def cmd_validate(args, cfg: RunConfig) -> int:
    n = cfg.validate_trials if args.trials is None else args.trials
    if n < 1:
        raise CommandError(EXIT_CONFIG, "--trials must be at least 1")
    sign = -1.0 if args.flip_sign else 1.0
    worst = oracle_suite(n, cfg.geometry, cfg.quadrature, seed=cfg.validate_seed,
                         spread=cfg.validate_spread, sign=sign)
    limits = oracle_thresholds()
    ok = True
    for name, dev in worst.items():
        passed = dev <= limits[name]
        ok &= passed
        _say(args, f"{name:<6} max_rel_dev={dev:.3e} limit={limits[name]:.0e} "
                   f"{'ok' if passed else 'FAIL'}")
    _say(args, f"trials={n} seed={cfg.validate_seed}")
    return EXIT_OK if ok else EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="config file (dotted keys, TOML syntax)")
    common.add_argument("--out", metavar="PATH", help="output path")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--quiet", action="store_true", help="suppress the printed summary")

    p = argparse.ArgumentParser(prog="modalshape", description=__doc__.splitlines()[0],
                                epilog=__doc__.split("\n", 1)[1],
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="generate a synthetic dataset CSV")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", parents=[common], help="run the dual EKF over a dataset CSV")
    e.add_argument("--dataset", metavar="PATH")
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser("validate-jacobians", parents=[common],
                       help="compare analytic Jacobians with finite differences")
    v.add_argument("--trials", type=int)
    v.add_argument("--flip-sign", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("report", parents=[common], help="score an estimates CSV against its dataset")
    r.add_argument("--dataset", metavar="PATH")
    r.add_argument("--estimates", metavar="PATH")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(all="ignore"):
            return args.func(args, cfg)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
