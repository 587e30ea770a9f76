"""Power allocation: water-filling, FDSAC splits and the rate-profile Pareto solver.

Every solver has a batched form working on an ``(n, M)`` array of effective
gains (one row per channel draw) and a scalar convenience wrapper.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SensingCorrelation, SystemConfig

LN2 = np.log(2.0)


class DegenerateInputError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, best=None, residuals=None):
        super().__init__(message)
        self.best = best
        self.residuals = residuals


# Design tags. ``label`` is what reports and CSV files show.


@dataclass(frozen=True)
class SensingCentric:
    @property
    def label(self) -> str:
        return "SC"


@dataclass(frozen=True)
class CommCentric:
    @property
    def label(self) -> str:
        return "CC"


@dataclass(frozen=True)
class Pareto:
    alpha: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")

    @property
    def label(self) -> str:
        return f"Pareto({self.alpha:g})"


@dataclass(frozen=True)
class Fdsac:
    kappa: float
    mu: float

    def __post_init__(self):
        for name in ("kappa", "mu"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    @property
    def label(self) -> str:
        return f"FDSAC({self.kappa:g},{self.mu:g})"


@dataclass
class PowerAllocation:
    powers: np.ndarray
    design: str
    water_level: float | None = None


@dataclass
class ParetoPoint:
    alpha: float
    R: float
    powers: PowerAllocation
    sr: float
    cr: float


def waterfill_batch(gains: np.ndarray, budget) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise water-filling for ``max sum log(1 + g x)`` s.t. ``sum x <= budget``.

    ``gains`` is ``(n, M)`` with nonnegative entries (zero gains never get
    power); ``budget`` a scalar or ``(n,)``. Returns ``(powers, level)``
    with ``powers = max(0, level - 1/g)``. The level is found exactly from
    the sorted inverse gains, so the budget is met to rounding.
    """
    g = np.atleast_2d(np.asarray(gains, dtype=float))
    n, M = g.shape
    budget = np.broadcast_to(np.asarray(budget, dtype=float), (n,))
    with np.errstate(divide="ignore"):
        inv = np.where(g > 0, 1.0 / g, np.inf)
    inv_sorted = np.sort(inv, axis=1)
    csum = np.cumsum(inv_sorted, axis=1)
    k = np.arange(1, M + 1)
    with np.errstate(invalid="ignore"):
        levels = (budget[:, None] + csum) / k
        active = levels > inv_sorted
    count = active.sum(axis=1)
    level = levels[np.arange(n), np.maximum(count, 1) - 1]
    level = np.where(count > 0, level, 0.0)
    with np.errstate(invalid="ignore"):
        powers = np.maximum(0.0, level[:, None] - inv)
    powers = np.where(np.isfinite(powers), powers, 0.0)
    return powers, level


def waterfill(gains, budget: float, design: str = "waterfill") -> PowerAllocation:
    g = np.asarray(gains, dtype=float).ravel()
    if np.any(g < 0) or not budget > 0:
        raise ValueError("waterfill needs nonnegative gains and a positive budget")
    powers, level = waterfill_batch(g[None, :], budget)
    return PowerAllocation(powers=powers[0], design=design, water_level=float(level[0]))


def sensing_gains(corr: SensingCorrelation, cfg: SystemConfig) -> np.ndarray:
    return cfg.L * corr.lambdas


def sensing_waterfill(corr: SensingCorrelation, cfg: SystemConfig, budget: float | None = None) -> PowerAllocation:
    """S-C powers; the precoder is ``U diag(powers)^{1/2}``."""
    if np.any(corr.lambdas <= 0):
        raise ValueError("sensing water-filling needs a positive definite correlation")
    budget = cfg.p if budget is None else budget
    if budget <= 0:
        return PowerAllocation(np.zeros(corr.M), "SC", None)
    return waterfill(sensing_gains(corr, cfg), budget, design="SC")


def comm_waterfill(rho, budget: float) -> PowerAllocation:
    rho = np.asarray(rho, dtype=float).ravel()
    if not np.any(rho > 0):
        raise DegenerateInputError("all effective gains are zero")
    return waterfill(rho, budget, design="CC")


def fdsac_comm_batch(rho: np.ndarray, budget: float, kappa: float, mu: float) -> np.ndarray:
    rho = np.atleast_2d(rho)
    if kappa <= 0.0 or mu <= 0.0:
        return np.zeros_like(rho, dtype=float)
    powers, _ = waterfill_batch(rho / kappa, mu * budget)
    return powers


def fdsac_sense_powers(corr: SensingCorrelation, cfg: SystemConfig, kappa: float, mu: float) -> np.ndarray:
    if kappa >= 1.0 or mu >= 1.0:
        return np.zeros(corr.M)
    powers, _ = waterfill_batch((sensing_gains(corr, cfg) / (1.0 - kappa))[None, :], (1.0 - mu) * cfg.p)
    return powers[0]


def fdsac_allocate(rho, corr: SensingCorrelation, cfg: SystemConfig, kappa: float, mu: float):
    """Split bandwidth (kappa to comm) and power (mu to comm) and water-fill each part."""
    tag = Fdsac(kappa, mu)
    comm = fdsac_comm_batch(np.asarray(rho, dtype=float)[None, :], cfg.p, kappa, mu)[0]
    sense = fdsac_sense_powers(corr, cfg, kappa, mu)
    return (
        PowerAllocation(comm, f"FdsacComm({tag.kappa:g},{tag.mu:g})"),
        PowerAllocation(sense, f"FdsacSense({tag.kappa:g},{tag.mu:g})"),
    )


# Rate-profile solver


def _rates(x, rho, g, scale):
    cr = np.sum(np.log1p(rho * x), axis=-1) / LN2
    sr = scale * np.sum(np.log1p(g * x), axis=-1) / LN2
    return sr, cr


def _stream_power(eta, a, b, rho, g):
    """Positive root x of a/(1+rho x) + b/(1+g x) = eta, or 0 when inactive."""
    A = eta * rho * g
    B = eta * (rho + g) - a * g - b * rho
    C = eta - a - b
    disc = np.maximum(B * B - 4.0 * A * C, 0.0)
    root = np.sqrt(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(B > 0, -2.0 * C / (B + root), (root - B) / (2.0 * A))
    return np.where(C < 0, np.maximum(x, 0.0), 0.0)


def weighted_powers(rho: np.ndarray, g: np.ndarray, scale: float, budget: float, t: np.ndarray) -> np.ndarray:
    """Maximize (1-t) R_c + t R_s over the power simplex, row-wise.

    Stationarity per stream is a quadratic in the stream power for a given
    multiplier ``eta``; the multiplier is found by Newton iteration on the
    budget equation, which is convex and decreasing in ``eta`` so iterates
    started below the root increase monotonically to it.
    """
    t = np.asarray(t, dtype=float)[:, None]
    a = (1.0 - t) * rho
    b = t * scale * g[None, :]
    peak = a + b
    G = np.maximum(rho, g[None, :])
    eta = np.max(peak / (1.0 + G * budget), axis=1)
    for _ in range(200):
        x = _stream_power(eta[:, None], a, b, rho, g[None, :])
        gap = x.sum(axis=1) - budget
        active = x > 0
        slope = -(a * rho / (1.0 + rho * x) ** 2 + b * g / (1.0 + g * x) ** 2)
        with np.errstate(divide="ignore"):
            dx = np.where(active, 1.0 / slope, 0.0)
        deriv = dx.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(deriv < 0, gap / deriv, 0.0)
        # converged, or stalled at the rounding floor of the stream roots
        if np.all((np.abs(gap) <= 1e-12 * budget) | (np.abs(step) <= 4e-16 * eta)):
            break
        eta = eta - step
    else:  # pragma: no cover - Newton from the left is monotone and fast
        raise ConvergenceError("multiplier iteration did not converge", best=x, residuals=gap)
    total = x.sum(axis=1, keepdims=True)
    return x * (budget / np.where(total > 0, total, 1.0))


def pareto_powers_batch(
    rho: np.ndarray,
    corr: SensingCorrelation,
    cfg: SystemConfig,
    alpha: float,
    tol: float = 1e-10,
    max_iter: int = 200,
):
    """Rate-profile solution for every row of ``rho``.

    Maximizes ``R`` subject to ``R_s >= alpha R``, ``R_c >= (1 - alpha) R``
    and the sum-power budget. Both rates are separable and concave, so the
    optimum is the maximizer of a weighted sum ``(1-t) R_c + t R_s`` at the
    weight where ``(1-alpha) R_s = alpha R_c``; the weight is bisected.
    Returns ``(powers, R, sr, cr)``.
    """
    rho = np.atleast_2d(np.asarray(rho, dtype=float))
    n, M = rho.shape
    g = sensing_gains(corr, cfg)
    scale = cfg.N / cfg.L
    p = cfg.p
    s_star = sensing_waterfill(corr, cfg).powers
    sense_only = np.broadcast_to(s_star, (n, M)).copy()

    if alpha >= 1.0:
        sr, cr = _rates(sense_only, rho, g, scale)
        return sense_only, sr, sr, cr
    comm_only, _ = waterfill_batch(rho, p)
    if alpha <= 0.0:
        if not np.all(np.any(rho > 0, axis=1)):
            raise DegenerateInputError("all effective gains are zero in some draw")
        sr, cr = _rates(comm_only, rho, g, scale)
        return comm_only, cr, sr, cr

    abar = 1.0 - alpha

    def balance(x):
        sr, cr = _rates(x, rho, g, scale)
        return abar * sr - alpha * cr, sr, cr

    h0, sr0, cr0 = balance(comm_only)
    h1, sr1, cr1 = balance(sense_only)
    powers = np.empty((n, M))
    sr = np.empty(n)
    cr = np.empty(n)
    done_c = h0 >= 0
    done_s = (h1 <= 0) & ~done_c
    for mask, x, s, c in ((done_c, comm_only, sr0, cr0), (done_s, sense_only, sr1, cr1)):
        powers[mask], sr[mask], cr[mask] = x[mask], s[mask], c[mask]

    todo = np.flatnonzero(~(done_c | done_s))
    if todo.size:
        r = rho[todo]
        lo = np.zeros(todo.size)
        hi = np.ones(todo.size)
        x_lo, x_hi = comm_only[todo], sense_only[todo]
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            x_mid = weighted_powers(r, g, scale, p, mid)
            s_mid, c_mid = _rates(x_mid, r, g, scale)
            up = abar * s_mid - alpha * c_mid >= 0
            hi = np.where(up, mid, hi)
            lo = np.where(up, lo, mid)
            x_hi = np.where(up[:, None], x_mid, x_hi)
            x_lo = np.where(up[:, None], x_lo, x_mid)
            s_lo, c_lo = _rates(x_lo, r, g, scale)
            s_hi, c_hi = _rates(x_hi, r, g, scale)
            with np.errstate(over="ignore"):
                R_lo = np.minimum(s_lo / alpha, c_lo / abar)
                R_hi = np.minimum(s_hi / alpha, c_hi / abar)
            if np.all(np.abs(R_hi - R_lo) <= tol) or np.all(hi - lo <= 1e-15):
                break
        pick_hi = R_hi >= R_lo
        best = np.where(pick_hi[:, None], x_hi, x_lo)
        s_b, c_b = _rates(best, r, g, scale)
        resid = np.abs(R_hi - R_lo)
        if np.any(resid > 1e-7):
            raise ConvergenceError(
                f"rate-profile bisection stalled for alpha={alpha}", best=best, residuals=resid
            )
        powers[todo], sr[todo], cr[todo] = best, s_b, c_b

    with np.errstate(over="ignore"):
        R = np.minimum(sr / alpha, cr / abar)
    return powers, R, sr, cr


def pareto_allocate(rho, corr: SensingCorrelation, cfg: SystemConfig, alpha: float) -> ParetoPoint:
    tag = Pareto(alpha)
    powers, R, sr, cr = pareto_powers_batch(np.asarray(rho, dtype=float)[None, :], corr, cfg, alpha)
    return ParetoPoint(
        alpha=float(alpha),
        R=float(R[0]),
        powers=PowerAllocation(powers[0], tag.label),
        sr=float(sr[0]),
        cr=float(cr[0]),
    )
