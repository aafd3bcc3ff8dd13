"""Command line entry point.

    riskonoff run --config cfg.json [--universe U]... [--strategy S]... --data-dir DIR --out DIR
    riskonoff signals --config cfg.json --data-dir DIR --out DIR
    riskonoff table --run-dir DIR [--universe U]... --out-format csv|md
    riskonoff make-fixtures --out DIR [--days N] [--seed N]

Exit codes: 0 success, 2 validation failure, 3 computation error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ExperimentConfig, StrategyId, Universe, load_config
from .errors import ComputationError, ValidationError
from .experiment import ExperimentMatrix, export_signals, perf_table_markdown_from_csv, run_matrix

EXIT_OK, EXIT_VALIDATION, EXIT_COMPUTATION = 0, 2, 3


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if getattr(args, "universe", None):
        changes["universes"] = tuple(Universe(u) for u in args.universe)
    if getattr(args, "strategy", None):
        changes["strategies"] = tuple(StrategyId(s) for s in args.strategy)
    return cfg.with_overrides(**changes) if changes else cfg


def _data_dir(args, cfg: ExperimentConfig) -> Path:
    d = args.data_dir or cfg.data_dir
    if not d:
        raise ValidationError("no data directory: pass --data-dir or set data_dir in the config")
    return Path(d)


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    d = args.out or cfg.output_dir
    if not d:
        raise ValidationError("no output directory: pass --out or set output_dir in the config")
    return Path(d)


def cmd_run(args) -> int:
    cfg = _config(args)
    manifest = run_matrix(ExperimentMatrix.from_config(cfg), _data_dir(args, cfg), _out_dir(args, cfg))
    print(f"{len(manifest.experiments)} experiments written to {_out_dir(args, cfg)}")
    return EXIT_OK


def cmd_signals(args) -> int:
    cfg = _config(args)
    files = export_signals(cfg, _data_dir(args, cfg), _out_dir(args, cfg))
    print(f"{len(files)} signal files written to {_out_dir(args, cfg)}")
    return EXIT_OK


def cmd_table(args) -> int:
    run_dir = Path(args.run_dir)
    universes = args.universe or [u.value for u in Universe]
    found = 0
    for u in universes:
        path = run_dir / u / "perf_table.csv"
        if not path.is_file():
            if args.universe:
                raise ValidationError(f"no performance table for {u} under {run_dir}")
            continue
        found += 1
        if args.out_format == "csv":
            sys.stdout.write(path.read_text(encoding="utf-8"))
        else:
            sys.stdout.write(perf_table_markdown_from_csv(path, u))
            sys.stdout.write("\n")
    if not found:
        raise ValidationError(f"no performance tables under {run_dir}")
    return EXIT_OK


def cmd_make_fixtures(args) -> int:
    from .synthetic import write_dataset

    out = write_dataset(args.out, n_days=args.days, seed=args.seed)
    print(f"synthetic dataset written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riskonoff", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the universe x strategy matrix")
    run.add_argument("--config")
    run.add_argument("--universe", action="append", choices=[u.value for u in Universe])
    run.add_argument("--strategy", action="append", choices=[s.value for s in StrategyId])
    run.add_argument("--data-dir")
    run.add_argument("--out")
    run.set_defaults(func=cmd_run)

    sig = sub.add_parser("signals", help="export raw signals as date,value CSVs")
    sig.add_argument("--config")
    sig.add_argument("--universe", action="append", choices=[u.value for u in Universe])
    sig.add_argument("--data-dir")
    sig.add_argument("--out")
    sig.set_defaults(func=cmd_signals)

    tab = sub.add_parser("table", help="print performance tables of a finished run")
    tab.add_argument("--run-dir", default=".")
    tab.add_argument("--universe", action="append", choices=[u.value for u in Universe])
    tab.add_argument("--out-format", choices=["csv", "md"], default="md")
    tab.set_defaults(func=cmd_table)

    fx = sub.add_parser("make-fixtures", help="write the synthetic dataset")
    fx.add_argument("--out", required=True)
    fx.add_argument("--days", type=int, default=2520)
    fx.add_argument("--seed", type=int, default=7)
    fx.set_defaults(func=cmd_make_fixtures)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ComputationError, ArithmeticError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTATION


if __name__ == "__main__":
    sys.exit(main())
