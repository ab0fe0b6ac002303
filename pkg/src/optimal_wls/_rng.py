"""Counter-based uniform variates.

Every variate is a pure function of ``(seed, k, q, retry)``: the SplitMix64
finalizer is chained over the four words, so draws do not depend on the
order in which samples are generated. The compiled kernels implement the
same function bit for bit.
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# Stream tags keep the different consumers of a master seed independent.
STREAM_ITS = 1
STREAM_RS = 2
STREAM_STANDARD = 3
STREAM_NOISE = 4
STREAM_EXPERIMENT = 5
STREAM_MC = 6


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def derive_seed(*words: int) -> int:
    """Fold integers into one 64-bit seed."""
    h = mix64(GOLDEN)
    for w in words:
        h = mix64((h ^ (int(w) & MASK)) + GOLDEN)
    return h


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def counter_hash(seed: int, k, q: int, retry=0) -> np.ndarray:
    k = np.asarray(k, dtype=np.uint64)
    retry = np.asarray(retry, dtype=np.uint64)
    h0 = np.uint64(mix64((int(seed) + GOLDEN) & MASK))
    with np.errstate(over="ignore"):
        h = _mix_array(h0 ^ k)
        word = (np.uint64(int(q) & 0xFFFFFFFF) << np.uint64(32)) | (retry & np.uint64(0xFFFFFFFF))
        h = _mix_array(h + word * np.uint64(GOLDEN))
    return h


def counter_uniform(seed: int, k, q: int, retry=0) -> np.ndarray:
    """Uniform variates in the open interval ``(0, 1)``."""
    h = counter_hash(seed, k, q, retry)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


class SamplingAnomaly(RuntimeError):
    """Rejection sampling exceeded its safety cap on proposal rounds."""
