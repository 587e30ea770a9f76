"""Command-line front end.

Usage::

    mimo-isac {op,ecr,sr,region} SPEC --out DIR [--threads N]

``SPEC`` is a plain-text file of ``key = value`` lines. ``#`` starts a
comment, lists are comma separated, and a list entry ``a:b:step`` expands to
the inclusive arithmetic range. Recognised keys:

==============  ========  =====================================================
key             required  meaning
==============  ========  =====================================================
M, N, K, L      yes       antennas / users, sensing receivers, user antennas,
                          frame length
lambdas         one of    sensing correlation eigenvalues (``M`` values)
targets         one of    point targets ``sigma2@theta_deg`` (instead of lambdas)
corr_seed       no        seed of the random eigenbasis (default 0)
snr_db          op/ecr/sr SNR grid in dB
trials, seed    yes       Monte Carlo draws per point and base seed
R0              no        outage threshold in bits/s/Hz (default 2)
designs         no        subset of SC, CC, Pareto, FDSAC (default all)
alpha           no        Pareto rate-profile weight (default 0.5)
kappa, mu       no        FDSAC bandwidth and power shares (default 0.5)
region_snr_db   no        SNR of the region command (default 5)
alpha_grid      no        ISAC boundary grid (default 0:1:0.05)
kappa_grid      no        FDSAC grid (default 0:1:0.05)
mu_grid         no        FDSAC grid (default 0:1:0.05)
epsilon_grid    no        auxiliary-region grid (default 0:1:0.1)
==============  ========  =====================================================

Exit codes: 0 success, 1 numerical failure, 2 invalid spec or arguments.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .allocation import CommCentric, ConvergenceError, DegenerateInputError, Fdsac, Pareto, SensingCentric, sensing_waterfill
from .model import (
    RankDeficiencyError,
    SensingCorrelation,
    SystemConfig,
    TargetScene,
    build_correlation_from_eigenvalues,
    build_correlation_from_scene,
    db_to_linear,
    reference_diversity,
)
from .montecarlo import MIN_TRIALS, diversity_window, fit_diversity_order, fit_high_snr_slope, sweep
from .rates import (
    asymptote_ecr,
    asymptote_fdsac_ecr,
    asymptote_fdsac_sr,
    asymptote_sr,
    ecr_closed_form,
)
from .region import check_containment, fdsac_points, isac_boundary, verify_sandwich
from .specfun import DomainError

log = logging.getLogger("mimo_isac")

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_INVALID = 2

DESIGN_NAMES = ("SC", "CC", "Pareto", "FDSAC")
REQUIRED = ("M", "N", "K", "L", "trials", "seed")
SLOPE_FROM_DB = 30.0


class SpecError(ValueError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.field = field
        self.line = line


def _unit_grid(step: float) -> tuple[float, ...]:
    n = int(round(1.0 / step))
    return tuple(round(i / n, 12) for i in range(n + 1))


@dataclass(frozen=True)
class ExperimentSpec:
    M: int
    N: int
    K: int
    L: int
    trials: int
    seed: int
    lambdas: tuple[float, ...] | None = None
    targets: tuple[tuple[float, float], ...] | None = None  # (sigma2, theta in degrees)
    corr_seed: int = 0
    snr_db: tuple[float, ...] = ()
    R0: float = 2.0
    designs: tuple[str, ...] = DESIGN_NAMES
    alpha: float = 0.5
    kappa: float = 0.5
    mu: float = 0.5
    region_snr_db: float = 5.0
    alpha_grid: tuple[float, ...] = field(default_factory=lambda: _unit_grid(0.05))
    kappa_grid: tuple[float, ...] = field(default_factory=lambda: _unit_grid(0.05))
    mu_grid: tuple[float, ...] = field(default_factory=lambda: _unit_grid(0.05))
    epsilon_grid: tuple[float, ...] = field(default_factory=lambda: _unit_grid(0.1))

    def system(self, snr_db: float = 0.0) -> SystemConfig:
        return SystemConfig(self.M, self.N, self.K, self.L, db_to_linear(snr_db), self.R0)

    def correlation(self) -> SensingCorrelation:
        if self.lambdas is not None:
            return build_correlation_from_eigenvalues(self.lambdas, self.corr_seed)
        scene = TargetScene([(s, math.radians(t)) for s, t in self.targets])
        return build_correlation_from_scene(scene, self.M)

    def design_tags(self) -> list:
        make = {
            "SC": SensingCentric,
            "CC": CommCentric,
            "Pareto": lambda: Pareto(self.alpha),
            "FDSAC": lambda: Fdsac(self.kappa, self.mu),
        }
        return [make[name]() for name in self.designs]

    def resolved(self) -> dict:
        out = asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = [list(v) if isinstance(v, tuple) else v for v in value]
        return out


# parsing

_INT = ("M", "N", "K", "L", "trials", "seed", "corr_seed")
_FLOAT = ("R0", "alpha", "kappa", "mu", "region_snr_db")
_FLOAT_LIST = ("lambdas", "snr_db", "alpha_grid", "kappa_grid", "mu_grid", "epsilon_grid")
_KNOWN = set(_INT) | set(_FLOAT) | set(_FLOAT_LIST) | {"targets", "designs"}


def _to_float(text: str, key: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise SpecError(f"{key}: expected a number, got {text!r}", key, line) from None
    if not math.isfinite(value):
        raise SpecError(f"{key}: value must be finite, got {text!r}", key, line)
    return value


def _to_int(text: str, key: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise SpecError(f"{key}: expected an integer, got {text!r}", key, line) from None


def _float_list(text: str, key: str, line: int) -> tuple[float, ...]:
    out: list[float] = []
    for item in (t.strip() for t in text.split(",")):
        if not item:
            raise SpecError(f"{key}: empty list entry", key, line)
        if ":" in item:
            parts = item.split(":")
            if len(parts) != 3:
                raise SpecError(f"{key}: range entries look like start:stop:step, got {item!r}", key, line)
            a, b, step = (_to_float(p, key, line) for p in parts)
            if step <= 0 or b < a:
                raise SpecError(f"{key}: range {item!r} needs step > 0 and stop >= start", key, line)
            n = int(math.floor((b - a) / step + 1e-9))
            out += [round(a + i * step, 12) for i in range(n + 1)]
        else:
            out.append(_to_float(item, key, line))
    return tuple(out)


def _targets(text: str, line: int) -> tuple[tuple[float, float], ...]:
    out = []
    for item in (t.strip() for t in text.split(",")):
        if item.count("@") != 1:
            raise SpecError(f"targets: entries look like sigma2@theta_deg, got {item!r}", "targets", line)
        s, t = item.split("@")
        out.append((_to_float(s, "targets", line), _to_float(t, "targets", line)))
    return tuple(out)


def parse_spec_text(text: str) -> ExperimentSpec:
    """Parse and fully validate a spec; raises ``SpecError`` naming the field."""
    values: dict = {}
    lines: dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise SpecError(f"expected 'key = value', got {body!r}", None, number)
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in _KNOWN:
            raise SpecError(f"unknown field {key!r}", key, number)
        if key in values:
            raise SpecError(f"field {key!r} given twice (first on line {lines[key]})", key, number)
        if not value:
            raise SpecError(f"{key}: missing value", key, number)
        if key in _INT:
            values[key] = _to_int(value, key, number)
        elif key in _FLOAT:
            values[key] = _to_float(value, key, number)
        elif key in _FLOAT_LIST:
            values[key] = _float_list(value, key, number)
        elif key == "targets":
            values[key] = _targets(value, number)
        else:
            names = tuple(t.strip() for t in value.split(","))
            bad = [n for n in names if n not in DESIGN_NAMES]
            if bad or len(set(names)) != len(names):
                raise SpecError(f"designs: choose distinct names from {', '.join(DESIGN_NAMES)}, got {value!r}", key, number)
            values[key] = names
        lines[key] = number
    for key in REQUIRED:
        if key not in values:
            raise SpecError(f"missing required field {key!r}", key)
    spec = ExperimentSpec(**values)
    _validate(spec, lines)
    return spec


def _validate(spec: ExperimentSpec, lines: dict[str, int]):
    def fail(key, message):
        raise SpecError(message, key, lines.get(key))

    try:
        spec.system()
    except ValueError as exc:
        fail("M", f"invalid system dimensions: {exc}")
    if spec.trials < MIN_TRIALS:
        fail("trials", f"trials must be at least {MIN_TRIALS}, got {spec.trials}")
    if (spec.lambdas is None) == (spec.targets is None):
        fail("lambdas", "give exactly one of 'lambdas' or 'targets'")
    if spec.lambdas is not None:
        if len(spec.lambdas) != spec.M:
            fail("lambdas", f"lambdas needs M = {spec.M} values, got {len(spec.lambdas)}")
        if any(v <= 0 for v in spec.lambdas):
            fail("lambdas", "lambdas must be positive")
    else:
        if any(s <= 0 for s, _ in spec.targets):
            fail("targets", "target strengths must be positive")
        try:
            spec.correlation()
        except RankDeficiencyError as exc:
            fail("targets", f"targets: {exc}")
    if spec.R0 < 0:
        fail("R0", "R0 must be nonnegative")
    for key in ("alpha", "kappa", "mu"):
        if not 0.0 <= getattr(spec, key) <= 1.0:
            fail(key, f"{key} must lie in [0, 1]")
    for key in ("alpha_grid", "kappa_grid", "mu_grid", "epsilon_grid"):
        grid = getattr(spec, key)
        if not grid or any(not 0.0 <= v <= 1.0 for v in grid):
            fail(key, f"{key} must be a nonempty list within [0, 1]")
    if 0.0 not in spec.alpha_grid or 1.0 not in spec.alpha_grid:
        fail("alpha_grid", "alpha_grid must contain 0 and 1")


def load_spec(path: str | Path) -> ExperimentSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"cannot read spec file: {exc}") from None
    return parse_spec_text(text)


# output

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: Path, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2)
        fh.write("\n")


def _require_grid(spec: ExperimentSpec):
    if not spec.snr_db:
        raise SpecError("missing required field 'snr_db' (must be a nonempty list)", "snr_db")


def _slope_fits(curves: dict[str, list[tuple[float, float]]]) -> dict:
    fits = {}
    for label, pts in curves.items():
        high = [(db_to_linear(db), v) for db, v in pts if db >= SLOPE_FROM_DB]
        if len(high) < 3:
            fits[label] = {"note": f"needs 3 or more points at or above {SLOPE_FROM_DB} dB"}
            continue
        f = fit_high_snr_slope(high, SLOPE_FROM_DB)
        fits[label] = {"slope": f.slope, "intercept": f.intercept, "r2": f.r2, "snr_db": [db for db, _ in pts if db >= SLOPE_FROM_DB]}
    return fits


# subcommands

def cmd_op(spec: ExperimentSpec, out: Path, threads: int | None) -> dict:
    _require_grid(spec)
    cfg, corr, designs = spec.system(), spec.correlation(), spec.design_tags()
    res = sweep(cfg, corr, designs, spec.snr_db, spec.trials, spec.seed, metrics=("op",), R0=spec.R0, threads=threads)
    order = reference_diversity(cfg)
    rows, curves = [], {}
    for db in spec.snr_db:
        for d in designs:
            est = res.op[(d.label, db)]
            rows.append([db, d.label, est.mean, est.std_err, est.events, est.upper_bound, db_to_linear(db) ** (-order)])
            curves.setdefault(d.label, []).append((db, est))
    write_csv(out / "op.csv", ["snr_db", "design", "op", "std_err", "events", "upper_bound", "reference"], rows)
    fits = {}
    for label, pts in curves.items():
        window = diversity_window(pts)
        if len(window) >= 3:
            f = fit_diversity_order(window)
            fits[label] = {"order": f.slope, "r2": f.r2, "p": f.grid}
        else:
            fits[label] = {"note": "fewer than 3 points with OP in [1e-6, 1e-2] and 10+ events"}
    report = {"command": "op", "spec": spec.resolved(), "reference_order": order, "diversity_fits": fits}
    write_json(out / "op.json", report)
    return report


def cmd_ecr(spec: ExperimentSpec, out: Path, threads: int | None) -> dict:
    _require_grid(spec)
    cfg, corr, designs = spec.system(), spec.correlation(), spec.design_tags()
    res = sweep(cfg, corr, designs, spec.snr_db, spec.trials, spec.seed, metrics=("ecr",), threads=threads)
    rows, curves = [], {}
    for db in spec.snr_db:
        c = cfg.with_power_db(db)
        for d in designs:
            est = res.ecr[(d.label, db)]
            closed = None
            if isinstance(d, SensingCentric):
                closed = ecr_closed_form(sensing_waterfill(corr, c).powers, c.Kprime)
            if isinstance(d, Fdsac):
                asym = asymptote_fdsac_ecr(c, d.kappa, d.mu)
            else:
                asym = asymptote_ecr(c)
            rows.append([db, d.label, est.mean, est.std_err, closed, asym])
            curves.setdefault(d.label, []).append((db, est.mean))
    write_csv(out / "ecr.csv", ["snr_db", "design", "ecr", "std_err", "closed_form", "asymptote"], rows)
    report = {"command": "ecr", "spec": spec.resolved(), "slope_fits": _slope_fits(curves)}
    write_json(out / "ecr.json", report)
    return report


def cmd_sr(spec: ExperimentSpec, out: Path, threads: int | None) -> dict:
    _require_grid(spec)
    cfg, corr, designs = spec.system(), spec.correlation(), spec.design_tags()
    res = sweep(cfg, corr, designs, spec.snr_db, spec.trials, spec.seed, metrics=("sr",), threads=threads)
    rows, curves = [], {}
    for db in spec.snr_db:
        c = cfg.with_power_db(db)
        for d in designs:
            est = res.sr[(d.label, db)]
            if isinstance(d, Fdsac):
                asym = asymptote_fdsac_sr(corr, c, d.kappa, d.mu)
            else:
                asym = asymptote_sr(corr, c)
            rows.append([db, d.label, est.mean, est.std_err, asym])
            curves.setdefault(d.label, []).append((db, est.mean))
    write_csv(out / "sr.csv", ["snr_db", "design", "sr", "std_err", "asymptote"], rows)
    report = {"command": "sr", "spec": spec.resolved(), "slope_fits": _slope_fits(curves)}
    write_json(out / "sr.json", report)
    return report


def cmd_region(spec: ExperimentSpec, out: Path, threads: int | None) -> dict:
    cfg, corr = spec.system(spec.region_snr_db), spec.correlation()
    T, seed = spec.trials, spec.seed
    isac = isac_boundary(cfg, corr, spec.alpha_grid, T, seed, threads)
    fd = fdsac_points(cfg, corr, spec.kappa_grid, spec.mu_grid, T, seed, threads)
    fd_front = fd.pareto_subset()
    containment = check_containment(fd, isac)
    sandwich = verify_sandwich(cfg, corr, spec.epsilon_grid, T, seed, fdsac=fd, threads=threads)

    header = ["alpha", "sr", "cr", "sr_std_err", "cr_std_err"]
    write_csv(out / "isac_boundary.csv", header, [list(r) for r in isac.rows()])
    front = set(fd_front.params)
    write_csv(
        out / "fdsac_points.csv",
        ["kappa", "mu", "sr", "cr", "sr_std_err", "cr_std_err", "on_boundary"],
        [[k, m, s, c, se, ce, (k, m) in front] for (k, m), s, c, se, ce in fd.rows()],
    )
    header[0] = "epsilon"
    write_csv(out / "aux_c1.csv", header, [list(r) for r in sandwich.c1.rows()])
    write_csv(out / "aux_c2.csv", header, [list(r) for r in sandwich.c2.rows()])

    by_alpha = {a: (s, c) for a, s, c, _, _ in isac.rows()}
    report = {
        "command": "region",
        "spec": spec.resolved(),
        "snr_db": spec.region_snr_db,
        "endpoints": {
            "P_s": {"design": "SC", "alpha": 1.0, "sr": by_alpha[1.0][0], "cr": by_alpha[1.0][1]},
            "P_c": {"design": "CC", "alpha": 0.0, "sr": by_alpha[0.0][0], "cr": by_alpha[0.0][1]},
        },
        "isac_monotone": isac.is_monotone(),
        "containment": containment.to_dict(),
        "sandwich": sandwich.to_dict(),
    }
    write_json(out / "region.json", report)
    return report


COMMANDS = {"op": cmd_op, "ecr": cmd_ecr, "sr": cmd_sr, "region": cmd_region}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimo-isac", description="MIMO-ISAC rate, outage and region experiments.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("spec", help="experiment spec file (key = value lines)")
    parser.add_argument("--out", required=True, help="output directory for CSV and JSON files")
    parser.add_argument("--threads", type=int, default=None, help="worker threads (default: $ISAC_REGION_THREADS or 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        spec = load_spec(args.spec)
        if args.command != "region":
            _require_grid(spec)
    except SpecError as exc:
        print(f"error: {args.spec}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = COMMANDS[args.command](spec, out, args.threads)
    except (ConvergenceError, DomainError, DegenerateInputError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.command == "region":
        print(f"containment: {'PASS' if report['containment']['passed'] else 'FAIL'}")
        print(f"sandwich: {'PASS' if report['sandwich']['passed'] else 'FAIL'}")
    print(f"wrote {args.command} results to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
