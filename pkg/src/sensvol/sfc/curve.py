"""Curve container, invariant validation, and the binary curve format."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..ensemble import GridDims
from ..errors import MalformedManifest, MissingFile, SizeMismatch

KINDS = ("datadriven", "hilbert", "scanline")
DISTANCES = ("l1", "l2", "linf", "ssd", "cosine")

_KIND_CODE = {k: i for i, k in enumerate(KINDS)}
_DIST_CODE = {d: i for i, d in enumerate(DISTANCES)}
_NO_DIST = 255

_MAGIC = b"SFC1"
_HEADER = struct.Struct("<4sBBH3Iid3d")  # magic, kind, dist, pad, dims, _, alpha...


@dataclass(frozen=True)
class SfcConfig:
    alpha: float = 0.1
    distance: str = "l1"
    ref_point: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.distance not in DISTANCES:
            raise ValueError(f"unknown distance {self.distance!r}")


@dataclass
class SfcCurve:
    """A Hamiltonian path (or cycle) over all voxels of a grid.

    order[t] is the voxel at curve position t; inverse[v] is the curve
    position of voxel v.
    """

    dims: GridDims
    order: np.ndarray
    kind: str
    meta: SfcConfig | None = None
    inverse: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        self.order = np.asarray(self.order, dtype=np.int64)
        inv = np.empty_like(self.order)
        inv[self.order] = np.arange(self.order.size)
        self.inverse = inv

    @property
    def is_cycle(self) -> bool:
        return self.kind == "datadriven"

    def validate(self) -> None:
        """Assert permutation, unit-step adjacency, and cycle closure."""
        V = self.dims.voxel_count
        if self.order.shape != (V,):
            raise AssertionError(f"order has {self.order.shape} entries, want {V}")
        if not np.array_equal(np.sort(self.order), np.arange(V)):
            raise AssertionError("order is not a permutation of the voxels")
        seq = self.order if not self.is_cycle else np.append(self.order, self.order[0])
        x, y, z = self.dims.unravel(seq)
        steps = (
            np.abs(np.diff(x)) + np.abs(np.diff(y)) + np.abs(np.diff(z))
        )
        if V > 1 and not np.all(steps == 1):
            bad = int(np.argmax(steps != 1))
            raise AssertionError(f"non-adjacent step at curve position {bad}")

    def positions(self) -> np.ndarray:
        """(V, 3) voxel coordinates in curve order."""
        x, y, z = self.dims.unravel(self.order)
        return np.column_stack([x, y, z]).astype(np.float64)


def write_curve(curve: SfcCurve, path: str | Path) -> Path:
    path = Path(path)
    meta = curve.meta or SfcConfig()
    dist_code = _DIST_CODE[meta.distance] if curve.kind == "datadriven" else _NO_DIST
    header = _HEADER.pack(
        _MAGIC,
        _KIND_CODE[curve.kind],
        dist_code,
        0,
        *curve.dims.as_tuple(),
        0,
        meta.alpha,
        *meta.ref_point,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(curve.order.astype("<u4").tobytes())
    return path


def load_curve(path: str | Path) -> SfcCurve:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    blob = path.read_bytes()
    if len(blob) < _HEADER.size or blob[:4] != _MAGIC:
        raise MalformedManifest(f"{path}: not a curve file")
    magic, kind_c, dist_c, _pad, nx, ny, nz, _r, alpha, rx, ry, rz = _HEADER.unpack(
        blob[: _HEADER.size]
    )
    if kind_c >= len(KINDS):
        raise MalformedManifest(f"{path}: unknown curve kind {kind_c}")
    dims = GridDims(nx, ny, nz)
    V = dims.voxel_count
    if len(blob) != _HEADER.size + 4 * V:
        raise SizeMismatch(f"{path}: expected {V} curve entries")
    order = np.frombuffer(blob, dtype="<u4", offset=_HEADER.size).astype(np.int64)
    distance = DISTANCES[dist_c] if dist_c != _NO_DIST else "l1"
    meta = SfcConfig(alpha=alpha, distance=distance, ref_point=(rx, ry, rz))
    return SfcCurve(dims=dims, order=order, kind=KINDS[kind_c], meta=meta)
