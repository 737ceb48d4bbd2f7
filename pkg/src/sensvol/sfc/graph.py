"""Circuit graph over 2x2(x2) blocks and its minimum spanning tree.

The grid is tiled into blocks of 2x2 voxels (2D) or 2x2x2 (3D); each block
carries a local Hamiltonian cycle. The dual graph connects face-adjacent
blocks; edge weights blend value coherency (mean vector distance across the
shared face, globally max-normalized) with positional coherency (difference
of radial distances to a reference point, globally max-normalized).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ensemble import GridDims
from ..errors import Disconnected, OddDimension
from ..sensitivity.fields import SensitivityFieldSet
from .curve import SfcConfig
from .distances import pairwise_distance

_NORMALIZED_KINDS = ("l1", "l2", "linf", "ssd")


@dataclass
class CircuitGraph:
    dims: GridDims
    cell_dims: tuple[int, int, int]
    edges: np.ndarray  # (E, 2) cell indices, a < b
    weights: np.ndarray  # (E,) blended W
    n_term: np.ndarray  # (E,) normalized value-coherency term
    r_term: np.ndarray  # (E,) normalized positional term
    config: SfcConfig

    @property
    def n_cells(self) -> int:
        cx, cy, cz = self.cell_dims
        return cx * cy * cz

    @property
    def block_depth(self) -> int:
        """2 for 3D grids, 1 for 2D."""
        return 2 if self.dims.nz > 1 else 1

    def cell_index(self, cx: int, cy: int, cz: int) -> int:
        ncx, ncy, _ = self.cell_dims
        return cx + ncx * (cy + ncy * cz)

    def cell_coords(self, c: int):
        ncx, ncy, _ = self.cell_dims
        return c % ncx, (c // ncx) % ncy, c // (ncx * ncy)

    def cell_voxels(self, c: int) -> np.ndarray:
        """Linear voxel indices of the block, local-vertex order (x fastest)."""
        cx, cy, cz = self.cell_coords(c)
        out = []
        for dz in range(self.block_depth):
            for dy in range(2):
                for dx in range(2):
                    out.append(
                        self.dims.linear_index(2 * cx + dx, 2 * cy + dy, 2 * cz + dz)
                    )
        return np.array(out, dtype=np.int64)

    def local_cycle(self, c: int) -> np.ndarray:
        """Default local Hamiltonian cycle of the block, as voxel indices."""
        from .merge import canonical_cycles

        vox = self.cell_voxels(c)
        return vox[canonical_cycles(self.block_depth == 2)[0]]


def _check_even(dims: GridDims) -> None:
    bad = []
    if dims.nx % 2:
        bad.append(f"nx={dims.nx}")
    if dims.ny % 2:
        bad.append(f"ny={dims.ny}")
    if dims.nz != 1 and dims.nz % 2:
        bad.append(f"nz={dims.nz}")
    if bad:
        raise OddDimension(
            "voxel counts must be even to tile 2x2 blocks: " + ", ".join(bad)
        )


def build_circuit_graph(fields: SensitivityFieldSet, cfg: SfcConfig) -> CircuitGraph:
    dims = fields.dims
    _check_even(dims)
    depth = 2 if dims.nz > 1 else 1
    ncx, ncy, ncz = dims.nx // 2, dims.ny // 2, max(dims.nz // 2, 1)
    vectors = fields.fields.T  # (V, n)

    cell_ids = np.arange(ncx * ncy * ncz).reshape(ncz, ncy, ncx)

    edge_list = []
    pair_rows_a = []
    pair_rows_b = []
    # face-adjacent voxel pairs per dual edge: 2 per face in 2D, 4 in 3D
    for axis in range(3 if depth == 2 else 2):
        if axis == 0:
            a_cells = cell_ids[:, :, :-1].ravel()
            b_cells = cell_ids[:, :, 1:].ravel()
        elif axis == 1:
            a_cells = cell_ids[:, :-1, :].ravel()
            b_cells = cell_ids[:, 1:, :].ravel()
        else:
            a_cells = cell_ids[:-1, :, :].ravel()
            b_cells = cell_ids[1:, :, :].ravel()
        if a_cells.size == 0:
            continue
        for a, b in zip(a_cells, b_cells):
            edge_list.append((int(a), int(b)))
        # voxel pairs across the shared face
        acx = a_cells % ncx
        acy = (a_cells // ncx) % ncy
        acz = a_cells // (ncx * ncy)
        offs = []
        for dz in range(depth):
            for dy in range(2):
                for dx in range(2):
                    o = [dx, dy, dz]
                    if o[axis] == 1:  # face-side voxels of cell A
                        offs.append(o)
        pa = np.empty((a_cells.size, len(offs)), dtype=np.int64)
        pb = np.empty_like(pa)
        for k, (dx, dy, dz) in enumerate(offs):
            ax = 2 * acx + dx
            ay = 2 * acy + dy
            az = 2 * acz + dz
            bx, by, bz = ax.copy(), ay.copy(), az.copy()
            if axis == 0:
                bx += 1
            elif axis == 1:
                by += 1
            else:
                bz += 1
            pa[:, k] = ax + dims.nx * (ay + dims.ny * az)
            pb[:, k] = bx + dims.nx * (by + dims.ny * bz)
        pair_rows_a.append(pa)
        pair_rows_b.append(pb)

    edges = np.array(edge_list, dtype=np.int64).reshape(-1, 2)
    if edges.shape[0] == 0:
        n_raw = np.zeros(0)
    else:
        pa = np.vstack(pair_rows_a)
        pb = np.vstack(pair_rows_b)
        n_pairs = pa.shape[1]
        # value-coherency term: mean distance over the face's voxel pairs
        dists = pairwise_distance(
            cfg.distance, vectors[pa.ravel()], vectors[pb.ravel()]
        ).reshape(-1, n_pairs)
        n_raw = dists.mean(axis=1)
    if cfg.distance in _NORMALIZED_KINDS:
        peak = n_raw.max() if n_raw.size else 0.0
        n_term = n_raw / peak if peak > 0 else np.zeros_like(n_raw)
    else:
        n_term = n_raw  # cosine is already within [0, 1]

    # positional term: difference of radial distances of block centers
    cidx = np.arange(ncx * ncy * ncz)
    ccx = cidx % ncx
    ccy = (cidx // ncx) % ncy
    ccz = cidx // (ncx * ncy)
    centers = np.column_stack(
        [
            2.0 * ccx + 0.5,
            2.0 * ccy + 0.5,
            2.0 * ccz + (0.5 if depth == 2 else 0.0),
        ]
    )
    ref = np.asarray(cfg.ref_point, dtype=np.float64)
    radial = np.linalg.norm(centers - ref, axis=1)
    r_raw = np.abs(radial[edges[:, 0]] - radial[edges[:, 1]])
    peak = r_raw.max() if r_raw.size else 0.0
    r_term = r_raw / peak if peak > 0 else np.zeros_like(r_raw)

    weights = (1.0 - cfg.alpha) * n_term + cfg.alpha * r_term
    return CircuitGraph(
        dims=dims,
        cell_dims=(ncx, ncy, ncz),
        edges=edges,
        weights=weights,
        n_term=n_term,
        r_term=r_term,
        config=cfg,
    )


class _DisjointSet:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def mst(edges: np.ndarray, weights: np.ndarray, n_cells: int) -> np.ndarray:
    """Kruskal's minimum spanning tree; ties break on (cellA, cellB).

    Returns the selected (n_cells - 1, 2) cell-index pairs.
    """
    a = np.minimum(edges[:, 0], edges[:, 1])
    b = np.maximum(edges[:, 0], edges[:, 1])
    order = np.lexsort((b, a, weights))
    dsu = _DisjointSet(n_cells)
    chosen = []
    for e in order:
        if dsu.union(int(a[e]), int(b[e])):
            chosen.append((int(a[e]), int(b[e])))
            if len(chosen) == n_cells - 1:
                break
    if len(chosen) != n_cells - 1:
        raise Disconnected(
            f"spanning tree has {len(chosen)} edges for {n_cells} cells"
        )
    return np.array(chosen, dtype=np.int64).reshape(-1, 2)
