"""Hilbert order for square/cubic power-of-two grids."""

from __future__ import annotations

import numpy as np

from ..ensemble import GridDims
from ..errors import UnsupportedDims
from .curve import SfcCurve


def _is_pow2(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


def _transpose_to_axes(X: np.ndarray, bits: int) -> np.ndarray:
    """Skilling's inverse transform: transposed Hilbert index -> coordinates."""
    ndim = X.shape[0]
    # Gray decode
    t = X[ndim - 1] >> np.uint64(1)
    for i in range(ndim - 1, 0, -1):
        X[i] ^= X[i - 1]
    X[0] ^= t
    # undo excess work
    Q = np.uint64(2)
    N = np.uint64(1) << np.uint64(bits)
    while Q != N:
        P = Q - np.uint64(1)
        for i in range(ndim - 1, -1, -1):
            mask = (X[i] & Q) != 0
            t = np.where(mask, np.uint64(0), (X[0] ^ X[i]) & P)
            x0 = np.where(mask, X[0] ^ P, X[0] ^ t)
            X[i] = np.where(mask, X[i], X[i] ^ t)
            X[0] = x0
        Q <<= np.uint64(1)
    return X


def _hilbert_axes(bits: int, ndim: int, idx: np.ndarray) -> np.ndarray:
    """Coordinates (ndim, len(idx)) of curve positions idx."""
    idx = idx.astype(np.uint64)
    X = np.zeros((ndim, idx.size), dtype=np.uint64)
    for j in range(bits):  # distribute interleaved bits, most significant first
        for i in range(ndim):
            src = np.uint64(ndim * bits - 1 - (j * ndim + i))
            bit = (idx >> src) & np.uint64(1)
            X[i] |= bit << np.uint64(bits - 1 - j)
    return _transpose_to_axes(X, bits)


def hilbert_curve(dims: GridDims) -> SfcCurve:
    """Hilbert order over a 2D or 3D grid with equal power-of-two extents."""
    if dims.is_2d:
        if dims.nx != dims.ny or not _is_pow2(dims.nx):
            raise UnsupportedDims(
                f"2D Hilbert order needs a square power-of-two grid, got "
                f"{dims.nx}x{dims.ny}"
            )
        ndim, side = 2, dims.nx
    else:
        if not (dims.nx == dims.ny == dims.nz) or not _is_pow2(dims.nx):
            raise UnsupportedDims(
                f"3D Hilbert order needs a cubic power-of-two grid, got "
                f"{dims.nx}x{dims.ny}x{dims.nz}"
            )
        ndim, side = 3, dims.nx
    bits = int(side).bit_length() - 1
    V = dims.voxel_count
    if bits == 0:
        order = np.zeros(1, dtype=np.int64)
    else:
        X = _hilbert_axes(bits, ndim, np.arange(V))
        x = X[0].astype(np.int64)
        y = X[1].astype(np.int64)
        z = X[2].astype(np.int64) if ndim == 3 else np.zeros(V, dtype=np.int64)
        order = x + dims.nx * (y + dims.ny * z)
    curve = SfcCurve(dims=dims, order=order, kind="hilbert")
    curve.validate()
    return curve
