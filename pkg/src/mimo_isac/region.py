"""SR-CR rate regions of ISAC and FDSAC and their containment checks."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .allocation import (
    LN2,
    ConvergenceError,
    fdsac_comm_batch,
    fdsac_sense_powers,
    pareto_powers_batch,
    sensing_gains,
    sensing_waterfill,
    waterfill_batch,
    weighted_powers,
)
from .model import SensingCorrelation, SystemConfig, _channel_block, map_blocks, sample_rho
from .montecarlo import MIN_TRIALS, _merge_all, _Moments
from .rates import comm_sum_rate, fdsac_comm_rate, fdsac_sense_rate, sensing_rate

LABELS = ("Isac", "Fdsac", "AuxC1", "AuxC2")


@dataclass
class RegionBoundary:
    """Averaged (SR, CR) points of one region, sorted by descending SR."""

    points: list[tuple[float, float]]
    params: list
    label: str
    sr_err: list[float] = field(default_factory=list)
    cr_err: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown region label {self.label!r}")
        if not self.sr_err:
            self.sr_err = [0.0] * len(self.points)
        if not self.cr_err:
            self.cr_err = [0.0] * len(self.points)
        order = sorted(range(len(self.points)), key=lambda i: (-self.points[i][0], self.points[i][1]))
        self.points = [tuple(map(float, self.points[i])) for i in order]
        self.params = [self.params[i] for i in order]
        self.sr_err = [float(self.sr_err[i]) for i in order]
        self.cr_err = [float(self.cr_err[i]) for i in order]

    @property
    def sr(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def cr(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def is_monotone(self, tol: float = 1e-6) -> bool:
        """CR nondecreasing while SR decreases."""
        return bool(np.all(np.diff(self.cr) >= -tol) and np.all(np.diff(self.sr) <= tol))

    def pareto_subset(self) -> "RegionBoundary":
        keep = []
        best = -math.inf
        for i, (_, c) in enumerate(self.points):
            if c > best:
                keep.append(i)
                best = c
        return RegionBoundary(
            [self.points[i] for i in keep],
            [self.params[i] for i in keep],
            self.label,
            [self.sr_err[i] for i in keep],
            [self.cr_err[i] for i in keep],
        )

    def rows(self):
        for (s, c), prm, se, ce in zip(self.points, self.params, self.sr_err, self.cr_err):
            yield prm, s, c, se, ce


def _check_trials(trials: int):
    if trials < MIN_TRIALS:
        raise ValueError(f"at least {MIN_TRIALS} trials are needed, got {trials}")


def _averaged(cfg, corr, trials, seed, threads, columns):
    """Block-reduce ``columns(rho) -> (n, k)`` into means and standard errors."""

    def block(b, start, size):
        _, rho = _channel_block(cfg, corr.U, seed, b, start, size)
        return _Moments.of(columns(rho))

    total = _merge_all(map_blocks(block, trials, threads))
    m2 = np.where(total.hi == total.lo, 0.0, np.maximum(total.m2, 0.0))
    se = np.sqrt(m2 / (trials - 1) / trials)
    return total.mean, se, total.hi


def isac_boundary(
    cfg: SystemConfig,
    corr: SensingCorrelation,
    alphas: Sequence[float],
    trials: int,
    seed: int,
    threads: int | None = None,
    mode: str = "average",
) -> RegionBoundary:
    """ISAC boundary points for every alpha in the grid.

    ``mode="average"`` (default) solves the rate-profile problem on the
    averaged rates: per-draw powers maximize ``(1-t) R_c + t R_s`` with one
    weight ``t`` shared by all draws, and ``t`` is bisected until the
    averaged rates meet the alpha ratio. This traces the boundary of the set
    of achievable (average SR, ECR) pairs. ``mode="per_draw"`` instead solves
    the rate-profile problem separately in each draw and averages the
    results, which gives points strictly inside that set in general.
    """
    alphas = [float(a) for a in alphas]
    if 0.0 not in alphas or 1.0 not in alphas:
        raise ValueError("the alpha grid must contain both 0 and 1")
    _check_trials(trials)
    if mode == "per_draw":
        return _isac_boundary_per_draw(cfg, corr, alphas, trials, seed, threads)
    if mode != "average":
        raise ValueError(f"unknown mode {mode!r}")

    rows = isac_ray_points(cfg, corr, alphas, trials, seed, threads)
    return RegionBoundary(
        [(r[0], r[1]) for r in rows], alphas, "Isac", [r[2] for r in rows], [r[3] for r in rows]
    )


def isac_ray_points(
    cfg: SystemConfig,
    corr: SensingCorrelation,
    alphas: Sequence[float],
    trials: int,
    seed: int,
    threads: int | None = None,
) -> list[tuple[float, float, float, float]]:
    """Averaged rate-profile solutions ``(sr, cr, sr_err, cr_err)`` for each alpha."""
    _check_trials(trials)
    rho = sample_rho(cfg, corr.U, trials, seed, threads)
    g = sensing_gains(corr, cfg)
    scale = cfg.N / cfg.L
    sense_only = np.broadcast_to(sensing_waterfill(corr, cfg).powers, rho.shape)

    def rates(x):
        sr = scale * np.sum(np.log1p(g * x), axis=1) / LN2
        cr = np.sum(np.log1p(rho * x), axis=1) / LN2
        return sr, cr

    cache = {0.0: rates(waterfill_batch(rho, cfg.p)[0]), 1.0: rates(sense_only)}

    def at(t):
        if t not in cache:
            cache[t] = rates(weighted_powers(rho, g, scale, cfg.p, np.full(rho.shape[0], t)))
        return cache[t]

    out = []
    for a in alphas:
        sr, cr = at(_balance_weight(float(a), lambda t: tuple(v.mean() for v in at(t))))
        out.append((float(sr.mean()), float(cr.mean()), _std_err(sr), _std_err(cr)))
    return out


def _std_err(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / np.sqrt(x.size))


def _balance_weight(alpha: float, mean_rates, tol: float = 1e-9, max_iter: int = 100) -> float:
    """Weight t in [0, 1] at which the mean rates satisfy (1-alpha) SR = alpha CR.

    Returns 0 or 1 when the corresponding single-objective solution already
    satisfies the profile; otherwise bisects the monotone balance function
    and returns the side with the larger profile scale.
    """
    if alpha <= 0.0:
        return 0.0
    if alpha >= 1.0:
        return 1.0
    abar = 1.0 - alpha

    def scale(t):
        sr, cr = mean_rates(t)
        return min(sr / alpha, cr / abar), abar * sr - alpha * cr

    if scale(0.0)[1] >= 0:
        return 0.0
    if scale(1.0)[1] <= 0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if scale(mid)[1] >= 0:
            hi = mid
        else:
            lo = mid
        if abs(scale(hi)[0] - scale(lo)[0]) <= tol:
            break
    else:
        raise ConvergenceError(f"alpha={alpha}: averaged rate-profile bisection did not converge", best=(lo, hi))
    return hi if scale(hi)[0] >= scale(lo)[0] else lo


def _isac_boundary_per_draw(cfg, corr, alphas, trials, seed, threads) -> RegionBoundary:
    def columns(rho):
        cols = []
        for a in alphas:
            try:
                _, _, sr, cr = pareto_powers_batch(rho, corr, cfg, a)
            except ConvergenceError as exc:
                raise ConvergenceError(f"alpha={a}: {exc}", exc.best, exc.residuals) from exc
            cols += [sr, cr]
        return np.stack(cols, axis=1)

    mean, se, _ = _averaged(cfg, corr, trials, seed, threads, columns)
    pts = [(mean[2 * i], mean[2 * i + 1]) for i in range(len(alphas))]
    return RegionBoundary(pts, alphas, "Isac", list(se[0::2]), list(se[1::2]))


def fdsac_points(
    cfg: SystemConfig,
    corr: SensingCorrelation,
    kappa_grid: Sequence[float],
    mu_grid: Sequence[float],
    trials: int,
    seed: int,
    threads: int | None = None,
) -> RegionBoundary:
    """Every (kappa, mu) grid point of the FDSAC region, averaged over draws."""
    _check_trials(trials)
    pairs = [(float(k), float(m)) for k in kappa_grid for m in mu_grid]
    for k, m in pairs:
        if not (0.0 <= k <= 1.0 and 0.0 <= m <= 1.0):
            raise ValueError(f"kappa and mu must lie in [0, 1], got {(k, m)}")
    srs = [fdsac_sense_rate(fdsac_sense_powers(corr, cfg, k, m), corr, cfg, k) for k, m in pairs]

    def columns(rho):
        cols = []
        for k, m in pairs:
            a = fdsac_comm_batch(rho, cfg.p, k, m)
            cols.append(np.broadcast_to(fdsac_comm_rate(a, rho, k), (rho.shape[0],)))
        return np.stack(cols, axis=1)

    mean, se, _ = _averaged(cfg, corr, trials, seed, threads, columns)
    pts = list(zip(srs, mean))
    return RegionBoundary(pts, pairs, "Fdsac", [0.0] * len(pairs), list(se))


def fdsac_boundary(cfg, corr, kappa_grid, mu_grid, trials, seed, threads=None) -> RegionBoundary:
    """Pareto-dominant subset of the FDSAC grid points."""
    return fdsac_points(cfg, corr, kappa_grid, mu_grid, trials, seed, threads).pareto_subset()


@dataclass
class ContainmentReport:
    inner: str
    outer: str
    margins: list[float]
    tolerances: list[float]
    violations: list[int]
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def min_margin(self) -> float:
        return min(self.margins) if self.margins else math.inf

    def to_dict(self) -> dict:
        return {
            "inner": self.inner,
            "outer": self.outer,
            "passed": self.passed,
            "min_margin": self.min_margin,
            "margins": self.margins,
            "tolerances": self.tolerances,
            "violations": self.violations,
            "notes": self.notes,
        }


def check_containment(inner: RegionBoundary, outer: RegionBoundary, abs_tol: float = 1e-6) -> ContainmentReport:
    """Check every inner point against the piecewise-linear outer boundary.

    The outer points are first reduced to their Pareto-dominant envelope.
    Inner SR values below the envelope's SR span are clamped to its
    highest-CR end; SR values above the span are violations unless within
    tolerance of the largest outer SR. Margin is interpolated outer CR minus
    inner CR; tolerance is 3 combined standard errors plus ``abs_tol``.
    """
    env = outer.pareto_subset()
    xs = env.sr[::-1]  # ascending SR, descending CR
    ys = env.cr[::-1]
    es = np.array(env.cr_err[::-1])
    sr_top_err = env.sr_err[0]
    margins, tols, bad, notes = [], [], [], []
    for i, ((s, c), c_err, s_err) in enumerate(zip(inner.points, inner.cr_err, inner.sr_err)):
        if s < xs[0]:
            y, e = ys[0], es[0]
            notes.append(f"point {i}: sr {s:.6g} below outer span, clamped to sr {xs[0]:.6g}")
        elif s > xs[-1]:
            y, e = ys[-1], es[-1]
            sr_tol = 3.0 * math.hypot(s_err, sr_top_err) + abs_tol
            if s - xs[-1] > sr_tol:
                notes.append(f"point {i}: sr {s:.6g} exceeds outer maximum {xs[-1]:.6g}")
                margins.append(float(xs[-1] - s))
                tols.append(sr_tol)
                bad.append(i)
                continue
            notes.append(f"point {i}: sr {s:.6g} at outer maximum {xs[-1]:.6g} within tolerance")
        else:
            y = float(np.interp(s, xs, ys))
            e = float(np.interp(s, xs, es))
        tol = 3.0 * math.hypot(c_err, e) + abs_tol
        margin = float(y - c)
        margins.append(margin)
        tols.append(tol)
        if margin < -tol:
            bad.append(i)
    return ContainmentReport(inner.label, outer.label, margins, tols, bad, notes)


def check_against_isac(
    inner: RegionBoundary,
    cfg: SystemConfig,
    corr: SensingCorrelation,
    trials: int,
    seed: int,
    threads: int | None = None,
    abs_tol: float = 1e-6,
) -> ContainmentReport:
    """Compare each inner point with the ISAC boundary on its own ray.

    A point ``(s, c)`` lies on the ray ``alpha = s / (s + c)`` at radius
    ``s + c``; the ISAC region reaches radius ``min(sr / alpha, cr / (1 - alpha))``
    there. Avoids the chord error of interpolating a sampled boundary.
    """
    alphas = [s / (s + c) if s + c > 0 else 0.0 for s, c in inner.points]
    rays = isac_ray_points(cfg, corr, alphas, trials, seed, threads)
    margins, tols, bad, notes = [], [], [], []
    for i, ((s, c), a, (sr, cr, sre, cre), s_err, c_err) in enumerate(
        zip(inner.points, alphas, rays, inner.sr_err, inner.cr_err)
    ):
        reach = min(sr / a if a > 0 else math.inf, cr / (1.0 - a) if a < 1 else math.inf)
        margin = float(reach - (s + c))
        tol = 3.0 * math.hypot(s_err + c_err, sre + cre) + abs_tol
        margins.append(margin)
        tols.append(tol)
        notes.append(f"point {i}: alpha {a:.6g}, radius {s + c:.6g}, ISAC reach {reach:.6g}")
        if margin < -tol:
            bad.append(i)
    return ContainmentReport(inner.label, "Isac", margins, tols, bad, notes)


@dataclass
class SandwichReport:
    c1: RegionBoundary
    c2: RegionBoundary
    reports: dict[str, ContainmentReport]
    power_excess: float
    dominance_violations: list[float]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports.values()) and not self.dominance_violations and self.power_excess <= 1e-9

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "power_excess": self.power_excess,
            "dominance_violations": self.dominance_violations,
            "inclusions": {k: v.to_dict() for k, v in self.reports.items()},
        }


def auxiliary_regions(cfg, corr, epsilon_grid, trials, seed, threads=None):
    """Boundaries of the two auxiliary regions plus the worst power excess.

    C1 splits power only: sensing water-filling with (1-eps)p and
    communication water-filling with eps p, each on the full band. C2 applies
    the summed powers k + u through the shared eigen-precoder.
    """
    eps = [float(e) for e in epsilon_grid]
    if any(not 0.0 <= e <= 1.0 for e in eps):
        raise ValueError("epsilon grid must lie in [0, 1]")
    _check_trials(trials)
    k_pows = [sensing_waterfill(corr, cfg, (1.0 - e) * cfg.p).powers for e in eps]
    sr1 = [sensing_rate(k, corr, cfg) for k in k_pows]

    def columns(rho):
        cols = []
        for e, k in zip(eps, k_pows):
            u = waterfill_batch(rho, e * cfg.p)[0] if e > 0 else np.zeros_like(rho)
            both = k[None, :] + u
            cols += [comm_sum_rate(u, rho), sensing_rate(both, corr, cfg), comm_sum_rate(both, rho), both.sum(axis=1)]
        return np.stack(cols, axis=1)

    mean, se, hi = _averaged(cfg, corr, trials, seed, threads, columns)
    cr1, sr2, cr2 = mean[0::4], mean[1::4], mean[2::4]
    c1 = RegionBoundary(list(zip(sr1, cr1)), eps, "AuxC1", [0.0] * len(eps), list(se[0::4]))
    c2 = RegionBoundary(list(zip(sr2, cr2)), eps, "AuxC2", list(se[1::4]), list(se[2::4]))
    return c1, c2, float(np.max(hi[3::4]) - cfg.p)


def verify_sandwich(
    cfg: SystemConfig,
    corr: SensingCorrelation,
    epsilon_grid: Sequence[float],
    trials: int,
    seed: int,
    *,
    fdsac: RegionBoundary,
    threads: int | None = None,
) -> SandwichReport:
    """Numerically check C_f in C1 in C2 in C_i on an epsilon grid.

    The last inclusion is checked ray by ray on the same channel draws.
    """
    c1, c2, excess = auxiliary_regions(cfg, corr, epsilon_grid, trials, seed, threads)
    reports = {
        "Cf<=C1": check_containment(fdsac, c1),
        "C1<=C2": check_containment(c1, c2),
        "C2<=Ci": check_against_isac(c2, cfg, corr, trials, seed, threads),
    }
    by_eps1 = {e: (s, c, ce) for e, s, c, _, ce in c1.rows()}
    dominance = []
    for e, s2, c2v, s2e, c2e in c2.rows():
        s1, c1v, c1e = by_eps1[e]
        tol = 3.0 * math.hypot(c1e, c2e) + 1e-6
        if s2 < s1 - 1e-9 or c2v < c1v - tol:
            dominance.append(e)
    return SandwichReport(c1, c2, reports, excess, dominance)
