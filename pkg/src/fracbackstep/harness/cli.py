"""Command-line entry point: ``simulate``, ``table`` and ``verify``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .metrics import export_csv, write_metrics
from .simulation import ScenarioDivergence, run_scenario
from .table import run_table
from .verify import verify


def _outdir(path: str | None) -> Path | None:
    if path is None:
        return None
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _outdir(args.out) or Path(".")
    try:
        rec, met = run_scenario(cfg)
    except ScenarioDivergence as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        if cfg.output.csv and exc.last_good is not None:
            path = export_csv(exc.last_good, out / cfg.output.csv)
            print(f"last good samples written to {path}", file=sys.stderr)
        return 1
    print(f"{cfg.name} ({cfg.controller.variant}): {met.describe()}")
    if cfg.output.csv:
        print(f"trajectory: {export_csv(rec, out / cfg.output.csv)}")
    if cfg.output.metrics:
        path = write_metrics(met, rec.truth, out / cfg.output.metrics, variant=rec.variant, p_floor_hits=rec.p_floor_hits)
        print(f"metrics: {path}")
    return 0


def cmd_table(args) -> int:
    table = run_table(args.example, horizon=args.horizon, h=args.h)
    text = table.render()
    print(f"Example {args.example}")
    print(text)
    out = _outdir(args.out)
    if out is not None:
        (out / f"table_example{args.example}.txt").write_text(text + "\n")
        (out / f"table_example{args.example}.csv").write_text(table.to_csv())
    return 0 if table.ok else 1


def cmd_verify(args) -> int:
    report = verify()
    text = report.render()
    print(text)
    out = _outdir(args.out)
    if out is not None:
        (out / "verify_report.txt").write_text(text + "\n")
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracbackstep", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run one scenario from a YAML/JSON config")
    sp.add_argument("config")
    sp.add_argument("--out", default=None, help="output directory (default: current directory)")
    sp.set_defaults(func=cmd_simulate)

    tp = sub.add_parser("table", help="three-case comparison table for a benchmark example")
    tp.add_argument("--example", type=int, choices=(1, 2), required=True)
    tp.add_argument("--out", default=None)
    tp.add_argument("--horizon", type=float, default=None, help="override the 20 s horizon")
    tp.add_argument("--h", type=float, default=None, help="override the 1e-3 step")
    tp.set_defaults(func=cmd_table)

    vp = sub.add_parser("verify", help="run the numerical oracle checks")
    vp.add_argument("--out", default=None, help="directory for verify_report.txt")
    vp.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
