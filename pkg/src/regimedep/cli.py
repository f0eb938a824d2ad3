"""Command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, PipelineConfig, load_config
from .pipeline import PipelineError, run_pipeline
from .report import emit_plot_data, emit_report

# subcommand -> last pipeline stage
COMMANDS = {
    "ingest": "ingest",
    "diagnose": "diagnostics",
    "changepoint": "changepoint",
    "fit-marginals": "marginals",
    "fit-copulas": "copulas",
    "functionals": "functionals",
    "report": "independence",
    "all": "independence",
}
PLOT_DIR = "plot_data"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regimedep", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "simulate"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML configuration file")
        p.add_argument("--seed", type=int, help="master seed (simulate: dataset seed)")
        p.add_argument("--out", type=Path, help="output directory")
        if name != "simulate":
            p.add_argument("--period-split", metavar="DATE", help="change date override (YYYY-MM-DD)")
            p.add_argument("--mode", choices=("parametric", "semiparametric", "both"))
    return parser


def resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output = str(args.out)
    if getattr(args, "period_split", None):
        cfg.changepoint.override = args.period_split
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    return cfg.validate()


def _simulate(args) -> int:
    from .synthetic import generate

    seed = args.seed if args.seed is not None else 2028
    if args.config:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.data.synthetic_seed
    out = args.out or Path("data")
    prices, ann = generate(seed).write(out)
    print(f"wrote {prices} and {ann}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return _simulate(args)
        cfg = resolve_config(args)
        rep = run_pipeline(cfg, COMMANDS[args.command])
        files = emit_report(rep, cfg.output)
        if args.command == "all":
            files += emit_plot_data(rep, Path(cfg.output) / PLOT_DIR)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(files)} files to {cfg.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
