"""Command-line front end: rmse / outlier / crb / range sweeps and frame info."""

import argparse
import sys

from . import harness


def _add_common(parser):
    parser.add_argument("--config", help="JSON experiment configuration")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--trials", type=int, help="override trials per point")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


def _load(args):
    if args.config:
        cfg = harness.load_experiment(args.config)
    else:
        cfg = harness.ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    return cfg


def _emit(rows, args):
    text = (harness.rows_to_csv(rows) if args.format == "csv"
            else harness.rows_to_json(rows))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="uwisac",
        description="Unique-word ISAC frame simulation and sensing analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("rmse", "Monte Carlo RMSE sweep of the DD estimators"),
        ("outlier", "simulated outlier probability and analytic upper bounds"),
        ("crb", "sqrt-CRB report per frame kind and SNR"),
        ("range", "iso-range and constant-SNR range tables"),
        ("info", "frame-comparison table for a configuration"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    args = parser.parse_args(argv)
    cfg = _load(args)

    if args.command == "rmse":
        _emit(harness.run_rmse_sweep(cfg), args)
    elif args.command == "outlier":
        _emit(harness.run_outlier_sweep(cfg), args)
    elif args.command == "crb":
        cfg.include_crb = True
        _emit(harness.run_crb_report(cfg), args)
    elif args.command == "range":
        _emit(harness.run_range_analysis(cfg), args)
    else:
        table = harness.frame_info_table(cfg)
        cols = list(table[0].keys())
        widths = {c: max(len(c), max(len(_fmt(r[c])) for r in table)) for c in cols}
        lines = ["  ".join(c.ljust(widths[c]) for c in cols)]
        for r in table:
            lines.append("  ".join(_fmt(r[c]).ljust(widths[c]) for c in cols))
        text = "\n".join(lines) + "\n"
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return 0


def _fmt(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


if __name__ == "__main__":
    raise SystemExit(main())
