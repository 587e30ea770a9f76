"""System configuration, sensing correlation and channel sampling."""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .specfun import DomainError

log = logging.getLogger(__name__)


class RankDeficiencyError(ValueError):
    def __init__(self, rank: int, required: int):
        super().__init__(f"correlation matrix has rank {rank}, need full rank {required}")
        self.rank = rank
        self.required = required


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions and power of the downlink.

    ``M`` users / transmit antennas, ``N`` sensing receive antennas, ``K``
    antennas per user, ``L`` frame length, ``p`` linear transmit SNR and
    ``R0`` the outage threshold in bits/s/Hz.
    """

    M: int
    N: int
    K: int
    L: int
    p: float
    R0: float = 0.0

    def __post_init__(self):
        for name in ("M", "N", "K", "L"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer, got {getattr(self, name)!r}")
        if self.K < self.M:
            raise ValueError(f"K >= M required for zero forcing (K={self.K}, M={self.M})")
        if self.L < self.M:
            raise ValueError(f"L >= M required (L={self.L}, M={self.M})")
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p!r}")
        if not self.R0 >= 0:
            raise ValueError(f"R0 must be nonnegative, got {self.R0!r}")

    @property
    def Kprime(self) -> int:
        return self.K - self.M

    def with_power(self, p: float) -> "SystemConfig":
        return replace(self, p=float(p))

    def with_power_db(self, snr_db: float) -> "SystemConfig":
        return self.with_power(db_to_linear(snr_db))


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (float(snr_db) / 10.0)


@dataclass(frozen=True)
class SensingCorrelation:
    R: np.ndarray
    lambdas: np.ndarray
    U: np.ndarray

    @property
    def M(self) -> int:
        return self.lambdas.size

    @classmethod
    def from_matrix(cls, R: np.ndarray) -> "SensingCorrelation":
        R = np.asarray(R, dtype=complex)
        R = 0.5 * (R + R.conj().T)
        w, V = np.linalg.eigh(R)
        order = np.argsort(w)[::-1]
        return cls(R=R, lambdas=w[order], U=V[:, order])


@dataclass(frozen=True)
class TargetScene:
    """Point targets seen through half-wavelength uniform linear arrays.

    ``targets`` holds ``(sigma2, theta)`` pairs: average reflection strength
    and direction in radians.
    """

    targets: Sequence[tuple[float, float]]

    def __post_init__(self):
        if len(self.targets) == 0:
            raise ValueError("scene needs at least one target")
        for sigma2, _ in self.targets:
            if not sigma2 > 0:
                raise ValueError(f"target strength must be positive, got {sigma2!r}")

    @staticmethod
    def tx_steering(theta: float, M: int) -> np.ndarray:
        return np.exp(1j * np.pi * np.arange(M) * np.sin(theta))

    @staticmethod
    def rx_steering(theta: float, N: int) -> np.ndarray:
        return np.exp(1j * np.pi * np.arange(N) * np.sin(theta))


@dataclass
class ChannelDraw:
    H: list[np.ndarray]
    rho: np.ndarray
    seed: tuple[int, int] = field(default=(0, 0))


def haar_unitary(M: int, seed: int) -> np.ndarray:
    gen = rng.block_generator(seed, rng.UNITARY_STREAM, 0)
    Z = rng.complex_normal(gen, (M, M))
    Q, Rr = np.linalg.qr(Z)
    d = np.diag(Rr)
    return Q * (d / np.abs(d))[None, :]


def build_correlation_from_eigenvalues(lambdas: Sequence[float], seed: int = 0) -> SensingCorrelation:
    lam = np.asarray(lambdas, dtype=float).ravel()
    if lam.size == 0:
        raise DomainError("need at least one eigenvalue")
    if np.any(~(lam > 0)):
        raise DomainError(f"eigenvalues must be positive, got {lam.tolist()}")
    order = np.argsort(lam, kind="stable")[::-1]
    lam = lam[order]
    U = haar_unitary(lam.size, seed)
    R = (U * lam[None, :]) @ U.conj().T
    R = 0.5 * (R + R.conj().T)
    return SensingCorrelation(R=R, lambdas=lam, U=U)


def build_correlation_from_scene(scene: TargetScene, M: int, rtol: float = 1e-10) -> SensingCorrelation:
    R = np.zeros((M, M), dtype=complex)
    for sigma2, theta in scene.targets:
        b = TargetScene.tx_steering(theta, M)
        R += sigma2 * np.outer(b, b.conj())
    corr = SensingCorrelation.from_matrix(R)
    rank = int(np.sum(corr.lambdas > rtol * max(corr.lambdas[0], 0.0)))
    if rank < M:
        raise RankDeficiencyError(rank, M)
    return corr


def zero_forcing_gains(P: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Effective gains for a batch of effective channels.

    ``P`` has shape ``(n, M, K, M)``: user ``m``'s effective channel
    ``H_m U``. The equalizer is the normalized m-th column of
    ``P_m (P_m^H P_m)^{-1}``. Returns ``(rho, v, ok)`` where ``ok`` flags rows
    whose Gram matrices were all invertible.
    """
    n, M, K, _ = P.shape
    gram = np.conj(np.swapaxes(P, -1, -2)) @ P
    rhs = np.broadcast_to(np.eye(M, dtype=complex)[:, :, None], (n, M, M, 1))
    try:
        y = np.linalg.solve(gram, rhs)
        ok = np.ones(n, dtype=bool)
    except np.linalg.LinAlgError:
        y = np.zeros((n, M, M, 1), dtype=complex)
        ok = np.zeros(n, dtype=bool)
        for i in range(n):
            try:
                y[i] = np.linalg.solve(gram[i], rhs[i])
                ok[i] = True
            except np.linalg.LinAlgError:
                pass
    q = (P @ y)[..., 0]
    norm = np.linalg.norm(q, axis=-1)
    ok &= np.all(np.isfinite(norm) & (norm > 0), axis=1)
    v = q / np.where(norm > 0, norm, 1.0)[..., None]
    h = np.diagonal(P, axis1=1, axis2=3).transpose(0, 2, 1)  # column m of user m
    rho = np.abs(np.sum(np.conj(v) * h, axis=-1)) ** 2
    ok &= np.all(np.isfinite(rho), axis=1)
    return rho, v, ok


def _channel_block(cfg: SystemConfig, U: np.ndarray, seed: int, block: int, start: int, size: int):
    gen = rng.block_generator(seed, rng.CHANNEL_STREAM, block)
    H = rng.complex_normal(gen, (size, cfg.M, cfg.K, cfg.M))
    rho, _, ok = zero_forcing_gains(H @ U)
    for row in np.flatnonzero(~ok):
        trial = start + row
        attempt = 0
        while True:
            attempt += 1
            log.warning("singular Gram matrix in trial %d (seed %d), resampling (attempt %d)", trial, seed, attempt)
            g = rng.block_generator(seed, rng.RESAMPLE_STREAM, 0, trial, attempt)
            Hi = rng.complex_normal(g, (1, cfg.M, cfg.K, cfg.M))
            r_i, _, ok_i = zero_forcing_gains(Hi @ U)
            if ok_i[0]:
                H[row] = Hi[0]
                rho[row] = r_i[0]
                break
    return H, rho


def map_blocks(func, count: int, threads: int | None = None) -> list:
    """Apply ``func(block, start, size)`` to every trial block; results in block order."""
    spans = rng.blocks(count)
    threads = rng.resolve_threads(threads)
    if threads == 1 or len(spans) == 1:
        return [func(*s) for s in spans]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: func(*s), spans))


def sample_rho(cfg: SystemConfig, U: np.ndarray, count: int, seed: int, threads: int | None = None) -> np.ndarray:
    """Effective gains for ``count`` trials as an ``(count, M)`` array."""
    parts = map_blocks(lambda b, s, n: _channel_block(cfg, U, seed, b, s, n)[1], count, threads)
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, cfg.M))


def sample_channels(cfg: SystemConfig, U: np.ndarray, count: int, seed: int) -> Iterator[ChannelDraw]:
    for b, start, size in rng.blocks(count):
        H, rho = _channel_block(cfg, U, seed, b, start, size)
        for row in range(size):
            yield ChannelDraw(H=list(H[row]), rho=rho[row].copy(), seed=(seed, start + row))


def sample_target_response(corr: SensingCorrelation, N: int, seed: int) -> np.ndarray:
    """N x M matrix whose rows are independent CN(0, R) draws."""
    if np.any(corr.lambdas <= 0):
        raise DomainError("target response needs a positive definite correlation")
    root = (corr.U * np.sqrt(corr.lambdas)[None, :]) @ corr.U.conj().T
    rows = []
    for b, _, size in rng.blocks(N):
        gen = rng.block_generator(seed, rng.TARGET_STREAM, b)
        rows.append(rng.complex_normal(gen, (size, corr.M)))
    Z = np.concatenate(rows, axis=0)
    return Z @ root.T


def reference_diversity(cfg: SystemConfig) -> int:
    return cfg.M * (cfg.K - cfg.M + 1)

