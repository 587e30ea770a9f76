"""Counter-based random streams.

Every random quantity is drawn from a Philox generator whose key is derived
from ``(seed, stream)`` and whose counter starts at a block index. Trial ``i``
lives in block ``i // BLOCK`` at row ``i % BLOCK``, so a trial's randomness is
a pure function of ``(seed, stream, i)`` no matter how blocks are scheduled.
"""

from __future__ import annotations

import os

import numpy as np

BLOCK = 4096

CHANNEL_STREAM = 0
TARGET_STREAM = 1
UNITARY_STREAM = 2
RESAMPLE_STREAM = 3

THREADS_ENV = "ISAC_REGION_THREADS"


def stream_key(seed: int, stream: int, *extra: int) -> np.ndarray:
    seq = np.random.SeedSequence([int(seed) & (2**64 - 1), int(stream), *map(int, extra)])
    return seq.generate_state(2, dtype=np.uint64)


def block_generator(seed: int, stream: int, block: int, *extra: int) -> np.random.Generator:
    # block index sits in counter word 2, far above anything one block consumes
    return np.random.Generator(np.random.Philox(key=stream_key(seed, stream, *extra), counter=int(block) << 128))


def complex_normal(gen: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """CN(0, 1) samples (x + iy)/sqrt(2); leading-axis prefixes are stable."""
    z = gen.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def blocks(count: int) -> list[tuple[int, int, int]]:
    """(block index, first trial, number of trials) covering ``count`` trials."""
    out = []
    for b, start in enumerate(range(0, count, BLOCK)):
        out.append((b, start, min(BLOCK, count - start)))
    return out


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))
