"""Command-line entry point: ``probmax {solve,bench,verify,reference}``."""

from __future__ import annotations

import argparse
import json
import sys

from ._backend import BACKEND
from .geometry import GeometryError
from .harness.config import ConfigError, load_config
from .harness.experiment import run_experiment
from .harness.reference import cached_reference
from .harness.report import emit_report
from .harness.verify import run_verify
from .solvers import ScheduleError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def build_parser():
    p = argparse.ArgumentParser(prog="probmax",
                                description="Probability maximization by stochastic approximation.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_default="table1"):
        sp.add_argument("--config", default=config_default,
                        help="JSON config file or preset name (table1, table2)")
        sp.add_argument("--seed", type=int, help="override base_seed")
        sp.add_argument("--out", help="output directory (default: config 'output')")
        sp.add_argument("--replications", type=int, help="override replications")
        sp.add_argument("--workers", type=int, help="parallel worker processes")
        sp.add_argument("--quiet", action="store_true")

    s = sub.add_parser("solve", help="run one schedule of the config")
    common(s)
    s.add_argument("--schedule", type=int, default=0, help="schedule index (default 0)")
    common(sub.add_parser("bench", help="run every schedule and write the report files"))
    v = sub.add_parser("verify", help="property and oracle checks")
    v.add_argument("--seed", type=int, default=0)
    r = sub.add_parser("reference", help="compute and cache the reference solution")
    common(r)
    return p


def _apply_overrides(cfg, args):
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(f"--seed: must be >= 0, got {args.seed}")
        cfg.base_seed = args.seed
    if args.replications is not None:
        if args.replications < 1:
            raise ConfigError(f"--replications: must be >= 1, got {args.replications}")
        cfg.replications = args.replications
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError(f"--workers: must be >= 1, got {args.workers}")
        cfg.workers = args.workers
    if args.out:
        cfg.output = args.out
    return cfg


def _log(args):
    if args.quiet:
        return None
    return lambda msg: print(msg, file=sys.stderr, flush=True)


def _print_summary(report):
    cols = ("problem", "scheme", "a", "K_projections", "samples", "median_error", "se_error")
    print("  ".join(f"{c:>14}" for c in cols))
    for row in report.aggregates:
        cells = []
        for c in cols:
            v = row[c]
            cells.append(f"{v:>14.3e}" if isinstance(v, float) and c != "a" else f"{str(v):>14}")
        print("  ".join(cells))
    for note in report.notes:
        print(f"note: {note}")


def cmd_run(args, single=False):
    cfg = _apply_overrides(load_config(args.config), args)
    if single:
        if not 0 <= args.schedule < len(cfg.schedules):
            raise ConfigError(
                f"--schedule: index {args.schedule} out of range (config has {len(cfg.schedules)})")
        cfg.schedules = [cfg.schedules[args.schedule]]
    report = run_experiment(cfg, log=_log(args))
    paths = emit_report(report, cfg.output)
    _print_summary(report)
    print(f"wrote {paths['summary']}, {paths['trajectories']}, {paths['report']}")
    return EXIT_OK


def cmd_verify(args):
    results = run_verify(seed=args.seed)
    for r in results:
        print(r.line())
    print(f"backend: {BACKEND}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVALID


def cmd_reference(args):
    cfg = _apply_overrides(load_config(args.config), args)
    rc = cfg.reference
    out = []
    for name, spec in cfg.problems:
        kw = dict(seed=cfg.base_seed, batch=rc.batch, max_steps=rc.max_steps, tol=rc.tol,
                  eval_samples=rc.eval_samples, lipschitz_pairs=cfg.lipschitz_pairs,
                  lipschitz_batch=cfg.lipschitz_batch)
        cache = rc.cache_dir or cfg.output
        ref = cached_reference(spec, cache, **kw)
        out.append({"problem": name, **ref.to_dict()})
    print(json.dumps(out, indent=2))
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "reference":
            return cmd_reference(args)
        return cmd_run(args, single=args.command == "solve")
    except (ConfigError, ScheduleError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
