"""Deterministic seed derivation and counter-keyed bit generation.

Every source of randomness in this package is derived from a 64-bit root
seed through a fixed mixing chain, so any trial, key segment, or password
draw is replayable in isolation and results are independent of worker
count or evaluation order.
"""
from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1

# SplitMix64 finalizer constants; the increment is the 64-bit golden ratio.
GOLDEN = 0x9E3779B97F4A7C15
GOLDEN2 = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_U_GOLDEN = np.uint64(GOLDEN)
_U_GOLDEN2 = np.uint64(GOLDEN2)
_UM1 = np.uint64(_M1)
_UM2 = np.uint64(_M2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)

TWO_NEG53 = 2.0 ** -53


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer over a uint64 array (wraps mod 2^64)."""
    z = (z ^ (z >> _S30)) * _UM1
    z = (z ^ (z >> _S27)) * _UM2
    return z ^ (z >> _S31)


def _mix64_int(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(root: int, *path: int) -> int:
    """Fold a path of integers into a new 64-bit seed.

    derive_seed(root, a, b) != derive_seed(root, a', b') whenever the paths
    differ, for all practical purposes; used to split key, password, and
    per-trial streams from one experiment seed.
    """
    state = _mix64_int(root)
    for part in path:
        state = _mix64_int(state ^ ((part + 1) * GOLDEN & MASK64))
    return state


def generator(root: int, *path: int) -> np.random.Generator:
    """A numpy Generator seeded from the derived path seed."""
    return np.random.default_rng(derive_seed(root, *path))


def threshold_for(p: float) -> np.uint64:
    """Integer threshold T with (h >> 11) < T  iff  (h >> 11) * 2^-53 < p.

    p * 2^53 is exact in floats (power-of-two scaling), so the per-bit
    acceptance probability equals p to within 2^-53.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    return np.uint64(min(math.ceil(p * 2.0 ** 53), 1 << 53) << 11)


def uniforms(seed: int, idx: np.ndarray, lane: int = 0) -> np.ndarray:
    """53-bit uniforms in [0, 1), one per index, replayable per index."""
    base = mix64(idx.astype(np.uint64) * _U_GOLDEN + np.uint64(derive_seed(seed, lane)))
    return (base >> _S11).astype(np.float64) * TWO_NEG53


def biased_bits(seed: int, p: float, m: int, idx: np.ndarray) -> np.ndarray:
    """m-bit values for each index, bits i.i.d. Bernoulli(p) under the seed.

    Bit j of index i comes from one 53-bit uniform draw compared against p;
    draws for distinct (i, j) use distinct mixed states.  Output is uint64
    with bit 0 holding the last (least significant) position.
    """
    idx64 = idx.astype(np.uint64)
    thr = threshold_for(p)
    base = mix64(idx64 * _U_GOLDEN + np.uint64(seed & MASK64))
    vals = np.zeros(idx64.shape, dtype=np.uint64)
    for j in range(m):
        lane = np.uint64(((j + 1) * GOLDEN2) & MASK64)  # python-int product, no scalar wrap
        h = mix64(base ^ lane)
        vals = (vals << _ONE) | (h < thr).astype(np.uint64)
    return vals


def geometric_from_uniform(u: np.ndarray, p: float) -> np.ndarray:
    """Inverse-CDF geometric sample (support 1, 2, ...) as float64.

    Kept in floats because the result can exceed int64 range for tiny p;
    callers compare against their truncation horizon before casting.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"success probability out of range: {p}")
    if p == 1.0:
        return np.ones_like(u)
    return np.floor(np.log1p(-u) / math.log1p(-p)) + 1.0
