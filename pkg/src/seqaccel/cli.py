"""Command-line entry point: ``seqaccel run`` and ``seqaccel compare``."""
from __future__ import annotations

import argparse
import logging
import sys

from .harness import Comparison, ExperimentConfig, compare_runs, load_config, read_report, run_experiment

# flag -> config key
_OVERRIDES = {
    "dt": "dt", "nt": "nt", "t0": "t0", "method": "method", "M": "M", "m": "m",
    "refresh": "refresh_period", "tol": "tol", "max_iters": "max_iters", "seed": "seed", "out": "output_path",
}


def _parse_grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) == 1:
        return int(parts[0]), int(parts[0])
    if len(parts) == 2:
        return int(parts[0]), int(parts[1])
    raise argparse.ArgumentTypeError(f"grid must look like 60 or 60x60, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqaccel", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a sequence of test-case systems and write a CSV report")
    run.add_argument("--config", help="flat key=value file; flags below override it")
    run.add_argument("--grid", type=_parse_grid, help="interior points, e.g. 100 or 100x100")
    run.add_argument("--dt", type=float)
    run.add_argument("--nt", type=int)
    run.add_argument("--t0", type=float)
    run.add_argument("--method", choices=("baseline", "pod", "rand"))
    run.add_argument("--M", type=int, help="history size")
    run.add_argument("--m", type=int, help="reduced dimension")
    run.add_argument("--refresh", type=int, help="rebuild the sketch every this many steps")
    run.add_argument("--tol", type=float)
    run.add_argument("--max-iters", dest="max_iters", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="CSV report path")

    cmp_ = sub.add_parser("compare", help="speedups of one report over a baseline report")
    cmp_.add_argument("baseline")
    cmp_.add_argument("reports", nargs="+")
    cmp_.add_argument("--post-warmup", action="store_true",
                      help="only count steps where the method's history window is full")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    values = load_config(args.config) if args.config else {}
    if args.grid is not None:
        values["nx"], values["ny"] = args.grid
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag)
        if value is not None:
            values[key] = value
    return ExperimentConfig.from_mapping(values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = _config_from_args(args)
            report = run_experiment(cfg)
            for key, value in report.aggregates().items():
                print(f"{key}: {value:.6g}" if isinstance(value, float) else f"{key}: {value}")
            if cfg.output_path:
                print(f"report written to {cfg.output_path}")
        else:
            base = read_report(args.baseline)
            print(" | ".join(Comparison.HEADER))
            for path in args.reports:
                print(compare_runs(base, read_report(path), post_warmup=args.post_warmup).format())
    except (OSError, ValueError) as exc:
        print(f"seqaccel: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
