"""Arithmetic over the fixed 64-bit ring.

Every secret, join key and aggregation value lives in Z_{2^64}. Vectors are
numpy uint64 arrays so that whole-vector gates are single numpy operations;
overflow wraps exactly as the ring requires.
"""
from __future__ import annotations

import numpy as np

K = 64
MASK = np.uint64(0xFFFFFFFFFFFFFFFF)

ARITH = "arith"
BINARY = "bin"


def as_ring(values) -> np.ndarray:
    """Coerce a scalar/list/array of ints into a uint64 ring vector (mod 2^64).

    Goes through Python ints for plain sequences so values above 2^63 never
    round-trip through float64.
    """
    if isinstance(values, np.ndarray):
        if values.dtype == np.uint64:
            return values
        if values.dtype.kind in "iu":
            return values.astype(np.uint64, casting="unsafe")
        values = values.tolist()
    if isinstance(values, (int, np.integer)):
        return np.array([int(values) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    flat = [int(v) & 0xFFFFFFFFFFFFFFFF for v in values]
    return np.array(flat, dtype=np.uint64)


def width_mask(width: int) -> np.uint64:
    if width >= K:
        return MASK
    return np.uint64((1 << width) - 1)


def radd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a + b


def rsub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a - b


def rmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a * b


def rneg(a: np.ndarray) -> np.ndarray:
    return np.uint64(0) - a


def bit_length_of(n: int) -> int:
    """Bits needed to write n itself (at least 1)."""
    return max(1, int(n).bit_length())
