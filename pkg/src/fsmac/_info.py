"""Entropy helpers in bits with the 0 log 0 = 0 convention."""
from __future__ import annotations

import numpy as np


def xlog2x(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def entropy(p, axes=None) -> np.ndarray | float:
    """Entropy in bits, summing over ``axes`` (all axes when None)."""
    v = -xlog2x(p)
    if axes is None:
        return float(v.sum())
    return v.sum(axis=axes)


def binary_entropy(p: float) -> float:
    return entropy(np.array([p, 1.0 - p]))


def safe_log2(p: np.ndarray) -> np.ndarray:
    """log2 with zero entries mapped to 0; callers multiply by a zero weight there."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = np.log2(p[pos])
    return out
