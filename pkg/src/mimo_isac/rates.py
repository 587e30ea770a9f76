"""Sensing and communication rate evaluators, closed forms and high-SNR asymptotes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SensingCorrelation, SystemConfig
from .specfun import DomainError, digamma, exp_integral_Ei, scaled_exp_integral_E1

LN2 = math.log(2.0)


@dataclass(frozen=True)
class RateTuple:
    sr: float
    cr: float
    design: str = ""

    def __post_init__(self):
        if self.sr < 0 or self.cr < 0:
            raise ValueError(f"rates must be nonnegative, got sr={self.sr}, cr={self.cr}")


def log2_1p(x):
    return np.log1p(x) / LN2


def sensing_rate(powers, corr: SensingCorrelation, cfg: SystemConfig):
    """SR of the eigen-precoder ``U diag(powers)^{1/2}``; broadcasts over leading axes."""
    powers = np.asarray(powers, dtype=float)
    value = cfg.N / cfg.L * np.sum(log2_1p(cfg.L * corr.lambdas * powers), axis=-1)
    return float(value) if np.ndim(value) == 0 else value


def sensing_rate_det(W: np.ndarray, corr: SensingCorrelation, cfg: SystemConfig) -> float:
    """SR of an arbitrary precoder: (N/L) log2 det(I + L W^H R W)."""
    W = np.asarray(W, dtype=complex)
    A = np.eye(W.shape[1]) + cfg.L * (W.conj().T @ corr.R @ W)
    sign, logdet = np.linalg.slogdet(A)
    return cfg.N / cfg.L * float(logdet.real) / LN2


def comm_sum_rate(powers, rho):
    value = np.sum(log2_1p(np.asarray(powers, dtype=float) * np.asarray(rho, dtype=float)), axis=-1)
    return float(value) if np.ndim(value) == 0 else value


def _expected_ln1p_gamma(s: float, Kprime: int) -> float:
    """E ln(1 + s X) for X ~ Gamma(K'+1, 1).

    Integration by parts gives sum_{k<=K'} I_k / k! with
    I_k = int_0^inf x^k e^-x / (x + a) dx, a = 1/s, and
    I_k = (k-1)! - a I_{k-1}, I_0 = e^a E1(a). The forward recurrence
    amplifies rounding by about a^k / k!; when that gets large the integrals
    come from Gauss-Laguerre quadrature instead, which is accurate exactly
    there because the pole at -a is far from the nodes.
    """
    a = 1.0 / s
    amplification = max(a**k / math.factorial(k) for k in range(Kprime + 1))
    if amplification < 1e4:
        I = scaled_exp_integral_E1(a)
        total = I
        for k in range(1, Kprime + 1):
            I = math.factorial(k - 1) - a * I
            total += I / math.factorial(k)
        return total
    x, w = np.polynomial.laguerre.laggauss(120)
    integrand = sum(x**k / math.factorial(k) for k in range(Kprime + 1)) / (x + a)
    return float(np.dot(w, integrand))


def ecr_closed_form(s_star, Kprime: int) -> float:
    """Sum ergodic rate E sum_m log2(1 + s_m rho_m) with rho_m ~ Gamma(K'+1, 1).

    Zero entries (inactive streams) contribute nothing.
    """
    s = np.asarray(s_star, dtype=float).ravel()
    if np.any(s < 0) or np.any(~np.isfinite(s)):
        raise DomainError(f"stream powers must be nonnegative and finite, got {s.tolist()}")
    if int(Kprime) != Kprime or Kprime < 0:
        raise DomainError(f"K' must be a nonnegative integer, got {Kprime!r}")
    return sum(_expected_ln1p_gamma(float(v), int(Kprime)) for v in s if v > 0) / LN2


def ecr_closed_form_printed(s_star, Kprime: int, convention: str = "corrected") -> float:
    """Term-by-term evaluation of the published finite-sum ECR expression.

    ``convention="printed"`` uses the bracketed term exactly as typeset,
    ``-exp(-1/s) Ei(1/s)``; ``"corrected"`` replaces it with
    ``exp(1/s) E1(1/s) = -exp(1/s) Ei(-1/s)``. Only the corrected form agrees
    with Monte Carlo; the printed one is negative for K' = 0. Meant as a
    checksum for moderate ``s``: the alternating sum loses accuracy when
    ``1/s`` is large.
    """
    if convention not in ("printed", "corrected"):
        raise ValueError(f"unknown convention {convention!r}")
    total = 0.0
    for s in np.asarray(s_star, dtype=float).ravel():
        if s < 0:
            raise DomainError(f"stream power must be nonnegative, got {s}")
        if s == 0:
            continue
        a = 1.0 / s
        if convention == "printed":
            head = -math.exp(-a) * exp_integral_Ei(a)
        else:
            head = scaled_exp_integral_E1(a)
        for mu in range(Kprime + 1):
            j = Kprime - mu
            inner = head + sum(math.factorial(i - 1) * (-a) ** (-i) for i in range(1, j + 1))
            total += (-a) ** j / math.factorial(j) * inner
    return total / LN2


def asymptote_sr(corr: SensingCorrelation, cfg: SystemConfig, p: float | None = None) -> float:
    p = cfg.p if p is None else p
    M = corr.M
    offset = float(np.mean(np.log2(cfg.L * corr.lambdas / M)))
    return cfg.N * M / cfg.L * (math.log2(p) + offset)


def asymptote_sr_offset(corr: SensingCorrelation, cfg: SystemConfig) -> float:
    return float(np.mean(np.log2(cfg.L * corr.lambdas / corr.M)))


def asymptote_ecr(cfg: SystemConfig, p: float | None = None) -> float:
    p = cfg.p if p is None else p
    return cfg.M * (math.log2(p) - math.log2(cfg.M) + digamma(cfg.Kprime + 1) / LN2)


def fdsac_comm_rate(comm_powers, rho, kappa: float):
    if kappa <= 0.0:
        return np.zeros(np.shape(rho)[:-1]) if np.ndim(rho) > 1 else 0.0
    value = kappa * np.sum(log2_1p(np.asarray(comm_powers) * np.asarray(rho) / kappa), axis=-1)
    return float(value) if np.ndim(value) == 0 else value


def fdsac_sense_rate(sense_powers, corr: SensingCorrelation, cfg: SystemConfig, kappa: float) -> float:
    if kappa >= 1.0:
        return 0.0
    gains = cfg.L * corr.lambdas / (1.0 - kappa)
    return cfg.N * (1.0 - kappa) / cfg.L * float(np.sum(log2_1p(gains * np.asarray(sense_powers))))


def fdsac_rates(comm_alloc, sense_alloc, rho, corr: SensingCorrelation, cfg: SystemConfig, kappa: float) -> RateTuple:
    cr = fdsac_comm_rate(comm_alloc.powers, rho, kappa)
    sr = fdsac_sense_rate(sense_alloc.powers, corr, cfg, kappa)
    return RateTuple(sr=sr, cr=float(cr), design=comm_alloc.design.replace("FdsacComm", "FDSAC"))


def asymptote_fdsac_ecr(cfg: SystemConfig, kappa: float, mu: float, p: float | None = None) -> float:
    """High-SNR sum ECR of FDSAC: equal power mu p / M on a kappa sub-band."""
    p = cfg.p if p is None else p
    if kappa <= 0.0 or mu <= 0.0:
        return 0.0
    M = cfg.M
    return kappa * M * (math.log2(mu * p / (kappa * M)) + digamma(cfg.Kprime + 1) / LN2)


def asymptote_fdsac_sr(corr: SensingCorrelation, cfg: SystemConfig, kappa: float, mu: float, p: float | None = None) -> float:
    p = cfg.p if p is None else p
    if kappa >= 1.0 or mu >= 1.0:
        return 0.0
    share = (1.0 - mu) * p / (1.0 - kappa)
    return cfg.N * (1.0 - kappa) * corr.M / cfg.L * (math.log2(share) + asymptote_sr_offset(corr, cfg))
