"""Conversions between basis-state indices and bit arrays.

Bit ``j`` of an index is qubit/mask-position ``j`` (little-endian), the one
convention shared by the simulator, flat network masks, and lookup tables.
"""
from __future__ import annotations

import numpy as np


def index_to_bits(index: int, n_bits: int) -> np.ndarray:
    """Unpack an index into an array of n_bits 0/1 values, bit j first."""
    if not 0 <= index < (1 << n_bits):
        raise ValueError(f"index {index} out of range for {n_bits} bits")
    return (index >> np.arange(n_bits)) & 1


def bits_to_index(bits) -> int:
    """Inverse of :func:`index_to_bits`."""
    arr = np.asarray(bits, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d bit array, got shape {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bit array contains values other than 0 and 1")
    return int(np.dot(arr, 1 << np.arange(arr.size, dtype=np.int64)))


def all_patterns(n_bits: int) -> np.ndarray:
    """(2^n, n_bits) matrix whose row p is index_to_bits(p, n_bits)."""
    idx = np.arange(1 << n_bits)
    return (idx[:, None] >> np.arange(n_bits)[None, :]) & 1


def bits_to_string(bits) -> str:
    """Render bit j as character j (leftmost character = bit 0)."""
    return "".join(str(int(b)) for b in np.asarray(bits).ravel())
