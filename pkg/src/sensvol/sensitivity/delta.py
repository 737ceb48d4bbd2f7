"""Moment-independent sensitivity: expected shift between output densities.

For each parameter the runs are sorted by that parameter's value and split
into equal-frequency slices. The unconditional output density and each
slice-conditional density are estimated by Gaussian KDE on a shared grid;
the index is half the slice-weighted mean of the integrated absolute
density differences, clamped to [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..ensemble import Ensemble
from ..errors import TooFewSamples
from .fields import FLAG_INERT, SensitivityFieldSet
from ._kernels import delta_batch

_VOXEL_CHUNK = 1024


@dataclass(frozen=True)
class DeltaConfig:
    slice_count: int | None = None  # None: clamp(isqrt(R) // 6, 4, 48)
    density_grid_points: int = 100
    kde_bandwidth: str = "scott"

    def __post_init__(self):
        if self.slice_count is not None and self.slice_count < 2:
            raise ValueError("slice_count must be >= 2")
        if self.density_grid_points < 2:
            raise ValueError("density_grid_points must be >= 2")
        if self.kde_bandwidth != "scott":
            raise ValueError(f"unsupported bandwidth rule {self.kde_bandwidth!r}")

    def resolve_slices(self, n_runs: int) -> int:
        """Slice count growing like sqrt(R): both the number of slices and
        the samples per slice increase with the run count, keeping the
        small-sample bias of the density comparison low."""
        if self.slice_count is not None:
            return self.slice_count
        return int(np.clip(math.isqrt(n_runs) // 6, 4, 48))


def _slice_bounds(n_runs: int, m: int) -> np.ndarray:
    bounds = np.linspace(0, n_runs, m + 1).astype(np.int64)
    if np.diff(bounds).min() < 2:
        raise TooFewSamples(
            f"{n_runs} runs cannot fill {m} slices with at least 2 samples each"
        )
    return bounds


def _param_orders(P: np.ndarray) -> np.ndarray:
    n = P.shape[1]
    orders = np.empty((n, P.shape[0]), dtype=np.int64)
    for i in range(n):
        orders[i] = np.argsort(P[:, i], kind="stable")
    return orders


def _constant_columns(P: np.ndarray) -> np.ndarray:
    return P.min(axis=0) == P.max(axis=0)


def delta_index(Y: np.ndarray, P: np.ndarray, cfg: DeltaConfig = DeltaConfig()) -> np.ndarray:
    """Index per parameter for a single output vector.

    Constant Y gives zeros, as does any parameter that never varies (its
    conditional slices carry no information).
    """
    Y = np.asarray(Y, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != Y.shape[0]:
        raise ValueError("P must be (R, n) matching Y")
    m = cfg.resolve_slices(Y.shape[0])
    bounds = _slice_bounds(Y.shape[0], m)
    orders = _param_orders(P)
    out, _inert = delta_batch(Y[None, :], orders, bounds, cfg.density_grid_points)
    out[0][_constant_columns(P)] = 0.0
    return out[0]


def delta_volume(ens: Ensemble, cfg: DeltaConfig = DeltaConfig()) -> SensitivityFieldSet:
    """Per-voxel map of delta_index; constant voxels become flagged zeros."""
    R = ens.n_runs
    V = ens.voxel_count
    n = ens.pspace.n_params
    m = cfg.resolve_slices(R)
    bounds = _slice_bounds(R, m)
    orders = _param_orders(ens.pspace.samples)

    fields = np.zeros((n, V))
    flags = np.zeros(V, dtype=np.uint8)
    constant = _constant_columns(ens.pspace.samples)
    for lo in range(0, V, _VOXEL_CHUNK):
        hi = min(lo + _VOXEL_CHUNK, V)
        Ys = ens.volumes[:, lo:hi].T.astype(np.float64)
        out, inert = delta_batch(np.ascontiguousarray(Ys), orders, bounds,
                                 cfg.density_grid_points)
        fields[:, lo:hi] = out.T
        flags[lo:hi] |= inert * FLAG_INERT
    fields[constant] = 0.0

    return SensitivityFieldSet(
        measure="delta",
        dims=ens.dims,
        param_names=ens.pspace.names,
        fields=fields,
        flags=flags,
    )
