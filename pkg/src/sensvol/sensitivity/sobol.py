"""First-order variance-based sensitivity from A/B/AB_i sample designs."""

from __future__ import annotations

import numpy as np

from ..ensemble import Ensemble
from ..errors import LayoutMismatch, NotSaltelliLayout, VarianceZero
from .fields import FLAG_INERT, FLAG_OUT_OF_RANGE, SensitivityFieldSet

_VOXEL_CHUNK = 4096


def sobol_first_order(Y: np.ndarray, n: int, base_n: int) -> np.ndarray:
    """First-order indices S_i = V_i / D for one output vector.

    Y must be laid out as [A block, B block, AB_1 .. AB_n] with base_n rows
    per block. V_i is estimated as mean(Y_B * (Y_ABi - Y_A)); D is the
    variance of Y over the A and B rows.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 1 or Y.shape[0] != base_n * (n + 2):
        raise LayoutMismatch(
            f"expected {base_n * (n + 2)} values (base_n={base_n}, n={n}), "
            f"got {Y.shape}"
        )
    # center on the A/B mean: leaves the expectation untouched but makes the
    # estimate exactly invariant under output shifts
    Y = Y - np.mean(Y[: 2 * base_n])
    A = Y[:base_n]
    B = Y[base_n : 2 * base_n]
    D = np.var(Y[: 2 * base_n])
    if D == 0.0:
        raise VarianceZero("constant output over the A and B blocks")
    out = np.empty(n)
    for i in range(n):
        ABi = Y[(2 + i) * base_n : (3 + i) * base_n]
        out[i] = np.mean(B * (ABi - A)) / D
    return out


def sobol_volume(ens: Ensemble, base_n: int | None = None) -> SensitivityFieldSet:
    """Per-voxel first-order indices for every parameter.

    The ensemble must carry an A/B/AB_i layout, declared in its manifest or
    passed explicitly via base_n. Constant voxels are stored as zeros with
    the inert flag; voxels with any index outside [0, 1] keep their values
    and get the out-of-range flag.
    """
    n = ens.pspace.n_params
    if base_n is None:
        info = ens.sampling
        if info is None or not info.is_saltelli or info.base_n < 2:
            raise NotSaltelliLayout(
                "ensemble does not declare an A/B/AB_i sample layout"
            )
        base_n = info.base_n
    if ens.n_runs != base_n * (n + 2):
        raise LayoutMismatch(
            f"{ens.n_runs} runs incompatible with base_n={base_n}, n={n}"
        )

    V = ens.voxel_count
    fields = np.zeros((n, V))
    flags = np.zeros(V, dtype=np.uint8)
    vols = ens.volumes
    for lo in range(0, V, _VOXEL_CHUNK):
        hi = min(lo + _VOXEL_CHUNK, V)
        block = vols[:, lo:hi].astype(np.float64)
        block -= np.mean(block[: 2 * base_n], axis=0)
        A = block[:base_n]
        B = block[base_n : 2 * base_n]
        D = np.var(block[: 2 * base_n], axis=0)
        inert = D == 0.0
        Dsafe = np.where(inert, 1.0, D)
        for i in range(n):
            ABi = block[(2 + i) * base_n : (3 + i) * base_n]
            Si = np.mean(B * (ABi - A), axis=0) / Dsafe
            fields[i, lo:hi] = np.where(inert, 0.0, Si)
        flags[lo:hi] |= np.where(inert, FLAG_INERT, np.uint8(0))

    out_of_range = ((fields < 0.0) | (fields > 1.0)).any(axis=0)
    out_of_range &= (flags & FLAG_INERT) == 0
    flags |= np.where(out_of_range, FLAG_OUT_OF_RANGE, np.uint8(0))

    return SensitivityFieldSet(
        measure="sobol",
        dims=ens.dims,
        param_names=ens.pspace.names,
        fields=fields,
        flags=flags,
    )
