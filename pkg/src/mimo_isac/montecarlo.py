"""Monte Carlo estimators for ergodic rates and outage, and slope fitting.

All estimators share one engine: channel draws are produced block by block
from counter-based streams, every block is reduced to per-block moments, and
the blocks are merged in block order. Results are therefore bit-identical for
any thread count.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .allocation import (
    CommCentric,
    Fdsac,
    Pareto,
    SensingCentric,
    fdsac_comm_batch,
    fdsac_sense_powers,
    pareto_powers_batch,
    sensing_waterfill,
    waterfill_batch,
)
from .model import SensingCorrelation, SystemConfig, _channel_block, db_to_linear, map_blocks
from .rates import comm_sum_rate, fdsac_comm_rate, fdsac_sense_rate, sensing_rate

MIN_TRIALS = 100

Design = SensingCentric | CommCentric | Pareto | Fdsac


@dataclass
class McEstimate:
    mean: float
    std_err: float
    trials: int
    seed: int
    events: int | None = None
    upper_bound: float | None = None  # one-sided 95% bound when no outage was seen

    @property
    def zero_events(self) -> bool:
        return self.events == 0


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    grid: list[float] = field(default_factory=list)


@dataclass
class _Moments:
    """Count, mean, centered second moment and range, merged pairwise (Chan et al.)."""

    n: int
    mean: np.ndarray
    m2: np.ndarray
    hi: np.ndarray
    lo: np.ndarray

    @classmethod
    def of(cls, values: np.ndarray) -> "_Moments":
        # values: (n, ...) samples along axis 0
        mean = values.mean(axis=0)
        return cls(values.shape[0], mean, ((values - mean) ** 2).sum(axis=0), values.max(axis=0), values.min(axis=0))

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + delta**2 * (self.n * other.n / n)
        return _Moments(n, mean, m2, np.maximum(self.hi, other.hi), np.minimum(self.lo, other.lo))


def _merge_all(parts: Sequence[_Moments]) -> _Moments:
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


def design_rates(design: Design, rho: np.ndarray, corr: SensingCorrelation, cfg: SystemConfig):
    """Per-draw (SR, sum CR) arrays for ``design`` at power ``cfg.p``."""
    n = rho.shape[0]
    if isinstance(design, SensingCentric):
        s = sensing_waterfill(corr, cfg).powers
        return np.full(n, sensing_rate(s, corr, cfg)), comm_sum_rate(s[None, :], rho)
    if isinstance(design, CommCentric):
        c, _ = waterfill_batch(rho, cfg.p)
        return sensing_rate(c, corr, cfg), comm_sum_rate(c, rho)
    if isinstance(design, Pareto):
        _, _, sr, cr = pareto_powers_batch(rho, corr, cfg, design.alpha)
        return sr, cr
    if isinstance(design, Fdsac):
        a = fdsac_comm_batch(rho, cfg.p, design.kappa, design.mu)
        b = fdsac_sense_powers(corr, cfg, design.kappa, design.mu)
        cr = fdsac_comm_rate(a, rho, design.kappa)
        return np.full(n, fdsac_sense_rate(b, corr, cfg, design.kappa)), np.broadcast_to(cr, (n,)).astype(float)
    raise TypeError(f"unknown design {design!r}")


def outage_rate(design: Design, rho: np.ndarray, corr: SensingCorrelation, cfg: SystemConfig, R0: float) -> np.ndarray:
    """Per-draw sum CR, or a stand-in on the same side of ``R0``.

    Only the Pareto design takes shortcuts. Its solution is the S-C point
    when S-C already meets the rate profile, the C-C point when C-C does,
    and otherwise satisfies ``(1-alpha) SR = alpha CR`` with SR between the
    C-C and S-C values and CR between the S-C and C-C values. The solver
    only runs on draws where these brackets straddle ``R0``.
    """
    if not isinstance(design, Pareto) or design.alpha in (0.0, 1.0):
        return design_rates(design, rho, corr, cfg)[1]
    a, abar = design.alpha, 1.0 - design.alpha
    sr_s, cr_s = design_rates(SensingCentric(), rho, corr, cfg)
    sr_c, cr_c = design_rates(CommCentric(), rho, corr, cfg)
    s_ok = abar * sr_s <= a * cr_s
    c_ok = ~s_ok & (abar * sr_c >= a * cr_c)
    upper = np.minimum(cr_c, abar / a * sr_s)
    lower = np.maximum(cr_s, abar / a * sr_c)
    cr = np.where(upper < R0, upper, lower)
    cr = np.where(c_ok, cr_c, np.where(s_ok, cr_s, cr))
    open_ = np.flatnonzero(~s_ok & ~c_ok & (upper >= R0) & (lower < R0))
    if open_.size:
        cr[open_] = design_rates(design, rho[open_], corr, cfg)[1]
    return cr


@dataclass
class SweepResult:
    """Estimates keyed by ``(design label, snr_db)``."""

    ecr: dict = field(default_factory=dict)
    sr: dict = field(default_factory=dict)
    op: dict = field(default_factory=dict)
    trials: int = 0
    seed: int = 0


def sweep(
    cfg: SystemConfig,
    corr: SensingCorrelation,
    designs: Iterable[Design],
    snr_db: Iterable[float],
    trials: int,
    seed: int,
    *,
    metrics: Iterable[str] = ("ecr", "sr", "op"),
    R0: float | None = None,
    threads: int | None = None,
) -> SweepResult:
    """Evaluate several designs at several SNRs on one shared set of channel draws.

    Results are keyed by ``(design.label, snr_db)``.
    """
    snr_db = [float(x) for x in snr_db]
    return _sweep(cfg, corr, designs, snr_db, [db_to_linear(x) for x in snr_db], trials, seed, metrics, R0, threads)


def _sweep(cfg, corr, designs, keys, powers, trials, seed, metrics, R0, threads) -> SweepResult:
    designs = list(designs)
    metrics = tuple(metrics)
    if trials < MIN_TRIALS:
        raise ValueError(f"at least {MIN_TRIALS} trials are needed, got {trials}")
    if "op" in metrics:
        R0 = cfg.R0 if R0 is None else R0
        if R0 < 0:
            raise ValueError("outage needs R0 >= 0")
    rates_needed = "ecr" in metrics or "sr" in metrics
    cfgs = [cfg.with_power(p) for p in powers]

    def block(b, start, size):
        _, rho = _channel_block(cfg, corr.U, seed, b, start, size)
        cols = []
        for c in cfgs:
            for d in designs:
                if rates_needed:
                    cols += list(design_rates(d, rho, corr, c))
                if "op" in metrics:
                    cols.append((outage_rate(d, rho, corr, c, R0) < R0).astype(float))
        return _Moments.of(np.stack(cols, axis=1))

    total = _merge_all(map_blocks(block, trials, threads))
    mean = total.mean
    m2 = np.where(total.hi == total.lo, 0.0, total.m2)  # constant columns carry merge rounding
    out = SweepResult(trials=trials, seed=seed)
    col = 0
    for key in keys:
        for d in designs:
            if rates_needed:
                for name in ("sr", "ecr"):
                    if name in metrics:
                        getattr(out, name)[(d.label, key)] = _rate_estimate(mean[col], m2[col], trials, seed)
                    col += 1
            if "op" in metrics:
                out.op[(d.label, key)] = _op_estimate(mean[col], trials, seed)
                col += 1
    return out


def _rate_estimate(mean: float, m2: float, trials: int, seed: int) -> McEstimate:
    var = max(float(m2), 0.0) / (trials - 1)
    return McEstimate(float(mean), math.sqrt(var / trials), trials, seed)


def _op_estimate(mean: float, trials: int, seed: int) -> McEstimate:
    events = int(round(float(mean) * trials))
    if events == 0:
        return McEstimate(0.0, 0.0, trials, seed, events=0, upper_bound=3.0 / trials)
    q = events / trials
    return McEstimate(q, math.sqrt(q * (1.0 - q) / trials), trials, seed, events=events)


def _single(design, cfg, corr, trials, seed, metric, threads, R0=None) -> McEstimate:
    res = _sweep(cfg, corr, [design], [cfg.p], [cfg.p], trials, seed, (metric,), R0, threads)
    return getattr(res, metric)[(design.label, cfg.p)]


def estimate_ecr(design: Design, cfg: SystemConfig, corr: SensingCorrelation, trials: int, seed: int, threads: int | None = None) -> McEstimate:
    return _single(design, cfg, corr, trials, seed, "ecr", threads)


def estimate_avg_sr(design: Design, cfg: SystemConfig, corr: SensingCorrelation, trials: int, seed: int, threads: int | None = None) -> McEstimate:
    return _single(design, cfg, corr, trials, seed, "sr", threads)


def estimate_op(
    design: Design,
    cfg: SystemConfig,
    corr: SensingCorrelation,
    R0: float,
    trials: int,
    seed: int,
    threads: int | None = None,
) -> McEstimate:
    return _single(design, cfg, corr, trials, seed, "op", threads, R0=R0)


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), min(max(r2, 0.0), 1.0)


def _check_grid(ps: np.ndarray):
    if ps.size < 3:
        raise ValueError(f"slope fits need at least 3 points, got {ps.size}")
    if np.any(np.diff(ps) <= 0):
        raise ValueError("abscissae must be strictly increasing")


def fit_diversity_order(op_curve: Sequence[tuple[float, float]]) -> SlopeFit:
    """Least-squares slope of -log10 OP against log10 p (linear p)."""
    ps = np.array([p for p, _ in op_curve], dtype=float)
    ops = np.array([q for _, q in op_curve], dtype=float)
    _check_grid(ps)
    if np.any(ops <= 0):
        raise ValueError("zero outage probability in the fit window; increase the trial count")
    slope, intercept, r2 = _linfit(np.log10(ps), -np.log10(ops))
    return SlopeFit(slope, intercept, r2, ps.tolist())


def fit_high_snr_slope(rate_curve: Sequence[tuple[float, float]], min_snr_db: float | None = 30.0) -> SlopeFit:
    """Least-squares slope of rate against log2 p (linear p)."""
    ps = np.array([p for p, _ in rate_curve], dtype=float)
    rates = np.array([r for _, r in rate_curve], dtype=float)
    _check_grid(ps)
    if min_snr_db is not None and np.any(ps < db_to_linear(min_snr_db) * (1 - 1e-12)):
        raise ValueError(f"high-SNR slope fits use points at or above {min_snr_db} dB")
    slope, intercept, r2 = _linfit(np.log2(ps), rates)
    return SlopeFit(slope, intercept, r2, ps.tolist())


def diversity_window(
    points: Sequence[tuple[float, McEstimate]],
    lo: float = 1e-6,
    hi: float = 1e-2,
    min_events: int = 10,
    span_db: float = 10.0,
) -> list[tuple[float, float]]:
    """Pick the highest-SNR decade of (snr_db, OP) points with OP in [lo, hi].

    Points need at least ``min_events`` observed outages to enter the fit.
    Returns (linear p, OP) pairs.
    """
    usable = [
        (db, est.mean)
        for db, est in points
        if lo <= est.mean <= hi and (est.events or 0) >= min_events
    ]
    if not usable:
        return []
    top = max(db for db, _ in usable)
    return [(db_to_linear(db), q) for db, q in sorted(usable) if db >= top - span_db - 1e-9]
