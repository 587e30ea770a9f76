"""Regenerate the data behind the outage, ECR, SR and rate-region figures.

Runs every CLI subcommand on a spec file (the baseline preset by default)
and writes CSV/JSON into one directory per command.

    python scripts/reproduce_figures.py --out results --threads 4
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from mimo_isac import cli

ROOT = Path(__file__).resolve().parents[1]


@dataclass
class FigureRun:
    spec: Path = ROOT / "presets" / "baseline.cfg"
    out: Path = ROOT / "results"
    threads: int | None = None
    commands: tuple[str, ...] = ("op", "ecr", "sr", "region")


def run(cfg: FigureRun) -> int:
    for command in cfg.commands:
        start = time.time()
        argv = [command, str(cfg.spec), "--out", str(cfg.out / command)]
        if cfg.threads is not None:
            argv += ["--threads", str(cfg.threads)]
        code = cli.main(argv)
        print(f"{command}: exit {code} in {time.time() - start:.1f} s")
        if code:
            return code
    return 0


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spec", type=Path, default=FigureRun.spec)
    ap.add_argument("--out", type=Path, default=FigureRun.out)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--only", nargs="*", choices=FigureRun.commands, default=list(FigureRun.commands))
    args = ap.parse_args()
    return run(FigureRun(args.spec, args.out, args.threads, tuple(args.only)))


if __name__ == "__main__":
    sys.exit(main())
