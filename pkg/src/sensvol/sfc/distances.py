"""Multi-field distance measures between per-voxel sensitivity vectors."""

from __future__ import annotations

import numpy as np

from ..errors import LengthMismatch


def pairwise_distance(kind: str, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-wise raw distance between (m, n) vector stacks.

    l1, l2, linf, ssd are raw magnitudes (normalized later at graph level);
    cosine is 1 - cosine similarity with the zero-vector convention: two
    zero vectors are identical (0), a zero against a nonzero is maximally
    different (1).
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape != B.shape:
        raise LengthMismatch(f"vector shapes differ: {A.shape} vs {B.shape}")
    diff = B - A
    if kind == "l1":
        return np.abs(diff).sum(axis=1)
    if kind == "l2":
        return np.sqrt((diff * diff).sum(axis=1))
    if kind == "linf":
        return np.abs(diff).max(axis=1)
    if kind == "ssd":
        return (diff * diff).sum(axis=1)
    if kind == "cosine":
        na = np.sqrt((A * A).sum(axis=1))
        nb = np.sqrt((B * B).sum(axis=1))
        dot = (A * B).sum(axis=1)
        both_zero = (na == 0) & (nb == 0)
        one_zero = (na == 0) ^ (nb == 0)
        denom = np.where((na == 0) | (nb == 0), 1.0, na * nb)
        d = 1.0 - dot / denom
        d = np.where(one_zero, 1.0, d)
        d = np.where(both_zero, 0.0, d)
        return np.clip(d, 0.0, None)
    raise ValueError(f"unknown distance kind {kind!r}")


def vector_distance(kind: str, va, vb) -> float:
    """Raw distance between two sensitivity vectors (see pairwise_distance)."""
    va = np.asarray(va, dtype=np.float64).reshape(1, -1)
    vb = np.asarray(vb, dtype=np.float64).reshape(1, -1)
    if va.shape[1] != vb.shape[1]:
        raise LengthMismatch(f"vector lengths differ: {va.shape[1]} vs {vb.shape[1]}")
    if not (np.all(np.isfinite(va)) and np.all(np.isfinite(vb))):
        raise ValueError("vector components must be finite")
    return float(pairwise_distance(kind, va, vb)[0])
