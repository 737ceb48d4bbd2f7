"""Serpentine (boustrophedon) scan order; adjacent steps on any grid."""

from __future__ import annotations

import numpy as np

from ..ensemble import GridDims
from .curve import SfcCurve


def scanline_curve(dims: GridDims) -> SfcCurve:
    nx, ny, nz = dims.nx, dims.ny, dims.nz
    order = np.empty(dims.voxel_count, dtype=np.int64)
    pos = 0
    xs_fwd = np.arange(nx)
    xs_rev = xs_fwd[::-1]
    for z in range(nz):
        ys = range(ny) if z % 2 == 0 else range(ny - 1, -1, -1)
        for y in ys:
            xs = xs_fwd if (y + z) % 2 == 0 else xs_rev
            order[pos : pos + nx] = xs + nx * (y + ny * z)
            pos += nx
    curve = SfcCurve(dims=dims, order=order, kind="scanline")
    curve.validate()
    return curve
