"""Server-side view payloads: subsampling, PCP axes, horizon bands,
selections, dependency heatmaps, and selection boundary meshes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree
from skimage import measure as _sk_measure

from .ensemble import Ensemble, GridDims
from .errors import (
    AllAxesFiltered,
    AllEmpty,
    BadParamIndex,
    EmptySelection,
    NegativeValue,
)
from .sensitivity.fields import SensitivityFieldSet
from .sfc.curve import SfcCurve

DEFAULT_SUBSAMPLE = 20_000
HEATMAP_PARAM_BINS = 150
HEATMAP_CURVE_BINS = 500


def monte_carlo_subsample(voxel_count: int, count: int, seed: int = 0) -> np.ndarray:
    """Sorted uniform sample of voxel indices without replacement."""
    if count < 1:
        raise ValueError("count must be >= 1")
    count = min(count, voxel_count)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 0xA11))))
    return np.sort(rng.choice(voxel_count, size=count, replace=False))


# ---------------------------------------------------------------------------
# Parallel coordinates
# ---------------------------------------------------------------------------

@dataclass
class PcpAxis:
    name: str
    mean: float
    sensitive_fraction: float
    is_aux: bool = False
    low: float = 0.0
    high: float = 1.0


@dataclass
class PcpPayload:
    axes: list[PcpAxis]
    aux_axes: list[PcpAxis]
    polylines: np.ndarray  # (samples, axes + aux) values
    sample_indices: np.ndarray
    scale_min: float
    scale_max: float  # shared scale across all sensitivity axes


def sensitive_fractions(fields: SensitivityFieldSet) -> np.ndarray:
    """Per-parameter fraction of voxels above the first-band threshold."""
    return (fields.fields > fields.band_width).mean(axis=1)


def axis_order_by_mean(fields: SensitivityFieldSet) -> list[str]:
    means = fields.fields.mean(axis=1)
    order = np.argsort(-means, kind="stable")
    return [fields.param_names[i] for i in order]


def pcp_payload(
    fields: SensitivityFieldSet,
    aux: Mapping[str, np.ndarray] | None = None,
    sample_idx: np.ndarray | None = None,
    filter_pct: float = 0.0,
    axis_order: Sequence[str] | None = None,
) -> PcpPayload:
    """Axes (filtered and ordered) plus one polyline per sampled voxel.

    filter_pct drops parameters whose share of sensitive voxels (value above
    the first band) is below the given percentage. Axes are ordered by
    descending mean sensitivity unless an explicit order is given. All
    sensitivity axes share one scale starting at zero.
    """
    V = fields.dims.voxel_count
    if sample_idx is None:
        sample_idx = monte_carlo_subsample(V, DEFAULT_SUBSAMPLE)
    fractions = sensitive_fractions(fields)
    means = fields.fields.mean(axis=1)
    keep = [
        i for i in range(fields.n_params) if fractions[i] * 100.0 >= filter_pct
    ]
    if not keep:
        raise AllAxesFiltered(
            f"no parameter reaches {filter_pct}% sensitive voxels"
        )
    if axis_order is not None:
        name_to_i = {n: i for i, n in enumerate(fields.param_names)}
        ordered = [name_to_i[n] for n in axis_order if name_to_i.get(n) in keep]
        ordered += [i for i in keep if i not in ordered]
    else:
        ordered = sorted(keep, key=lambda i: (-means[i], i))

    axes = [
        PcpAxis(
            name=fields.param_names[i],
            mean=float(means[i]),
            sensitive_fraction=float(fractions[i]),
        )
        for i in ordered
    ]
    cols = [fields.fields[i][sample_idx] for i in ordered]

    aux_axes = []
    for name, arr in (aux or {}).items():
        arr = np.asarray(arr, dtype=np.float64)
        aux_axes.append(
            PcpAxis(
                name=name,
                mean=float(arr.mean()),
                sensitive_fraction=float("nan"),
                is_aux=True,
                low=float(arr.min()),
                high=float(arr.max()),
            )
        )
        cols.append(arr[sample_idx])

    scale_max = float(max(fields.fields[i].max() for i in ordered))
    return PcpPayload(
        axes=axes,
        aux_axes=aux_axes,
        polylines=np.column_stack(cols),
        sample_indices=sample_idx,
        scale_min=0.0,
        scale_max=scale_max,
    )


# ---------------------------------------------------------------------------
# Horizon bands and the stacked sensitivity view
# ---------------------------------------------------------------------------

@dataclass
class HorizonSeries:
    name: str
    band_width: float
    full_bands: np.ndarray  # (S,) complete bands below the top band
    top_fill: np.ndarray  # (S,) fill of the top band, in (0, 1]; 0 iff value 0

    def reconstruct(self) -> np.ndarray:
        return self.band_width * (self.full_bands + self.top_fill)

    @property
    def band_counts(self) -> np.ndarray:
        """Total bands shown per position (full bands plus the partial top)."""
        return self.full_bands + (self.top_fill > 0)


COLOR_RAMP = {"band0": "gray", "bands": "white-to-red"}


def horizon_bands(values: np.ndarray, band_width: float) -> HorizonSeries:
    """Split non-negative values into fixed-height bands collapsed onto the
    baseline. Exact multiples fill the top band completely rather than
    opening an empty one."""
    values = np.asarray(values, dtype=np.float64)
    if band_width <= 0:
        raise ValueError("band_width must be positive")
    if values.size and values.min() < 0:
        raise NegativeValue(f"negative value {values.min()} cannot be banded")
    full = np.floor(values / band_width).astype(np.int64)
    top = values / band_width - full
    exact = (top == 0) & (full > 0)
    full[exact] -= 1
    top[exact] = 1.0
    return HorizonSeries(name="", band_width=band_width, full_bands=full, top_fill=top)


@dataclass
class SensitivityViewPayload:
    positions: np.ndarray  # curve positions of the sampled voxels
    horizon: list[HorizonSeries]  # first m fields, axis order
    line_fields: list[str]  # remaining fields, axis order
    line_values: np.ndarray  # (len(line_fields), S)
    draw_order: list[str]  # line chart back-to-front
    band_width: float
    color_ramp: dict = field(default_factory=lambda: dict(COLOR_RAMP))


def sensitivity_view(
    fields: SensitivityFieldSet,
    curve: SfcCurve,
    sample_idx: np.ndarray | None = None,
    m: int | None = None,
    axis_order: Sequence[str] | None = None,
) -> SensitivityViewPayload:
    """First m fields as horizon graphs, the rest as one line chart.

    Fields follow the PCP axis order; line-chart fields are drawn with the
    most sensitive-voxel-rich fields furthest back.
    """
    if curve.dims != fields.dims:
        raise ValueError("curve and fields grids differ")
    if m is None:
        m = fields.n_params
    if not 0 <= m <= fields.n_params:
        raise ValueError(f"m must lie in [0, {fields.n_params}]")
    order = list(axis_order) if axis_order else axis_order_by_mean(fields)
    V = fields.dims.voxel_count
    if sample_idx is None:
        sample_idx = monte_carlo_subsample(V, DEFAULT_SUBSAMPLE)
    # positions along the curve for the sampled voxels, ascending
    positions = np.sort(curve.inverse[sample_idx])
    voxels = curve.order[positions]

    bw = fields.band_width
    horizon = []
    for name in order[:m]:
        series = horizon_bands(fields.field(name)[voxels], bw)
        series.name = name
        horizon.append(series)

    line_names = order[m:]
    counts = {
        name: int((fields.field(name) > bw).sum()) for name in line_names
    }
    draw_order = sorted(line_names, key=lambda nm: (-counts[nm], nm))
    line_values = np.array(
        [fields.field(name)[voxels] for name in line_names]
    ).reshape(len(line_names), voxels.size)
    return SensitivityViewPayload(
        positions=positions,
        horizon=horizon,
        line_fields=line_names,
        line_values=line_values,
        draw_order=draw_order,
        band_width=bw,
    )


# ---------------------------------------------------------------------------
# Selections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Selection:
    voxel_indices: np.ndarray  # sorted unique
    pcp_brushes: dict
    sfc_intervals: tuple

    @property
    def size(self) -> int:
        return self.voxel_indices.size


def resolve_selection(
    pcp_brushes: Mapping[str, tuple[float, float]] | None,
    sfc_intervals: Sequence[tuple[int, int]] | None,
    fields: SensitivityFieldSet,
    curve: SfcCurve | None = None,
    aux: Mapping[str, np.ndarray] | None = None,
) -> Selection:
    """Brushed voxel set: intersection across axis brushes, union across
    curve intervals, intersection of both groups when both are present."""
    V = fields.dims.voxel_count
    pcp_brushes = dict(pcp_brushes or {})
    sfc_intervals = tuple(tuple(iv) for iv in (sfc_intervals or ()))
    for lo, hi in list(pcp_brushes.values()) + list(sfc_intervals):
        if lo > hi:
            raise ValueError(f"malformed interval [{lo}, {hi}]")

    mask = np.ones(V, dtype=bool)
    has_pcp = bool(pcp_brushes)
    for name, (lo, hi) in pcp_brushes.items():
        if name in fields.param_names:
            vals = fields.field(name)
        elif aux and name in aux:
            vals = np.asarray(aux[name], dtype=np.float64)
        else:
            raise BadParamIndex(f"unknown brush axis {name!r}")
        mask &= (vals >= lo) & (vals <= hi)

    if sfc_intervals:
        if curve is None:
            raise ValueError("curve intervals given without a curve")
        sfc_mask = np.zeros(V, dtype=bool)
        for a, b in sfc_intervals:
            a = max(0, int(a))
            b = min(V - 1, int(b))
            if a <= b:
                sfc_mask[curve.order[a : b + 1]] = True
        mask = (mask & sfc_mask) if has_pcp else sfc_mask

    return Selection(
        voxel_indices=np.flatnonzero(mask),
        pcp_brushes=pcp_brushes,
        sfc_intervals=sfc_intervals,
    )


# ---------------------------------------------------------------------------
# Parameter dependency heatmap
# ---------------------------------------------------------------------------

@dataclass
class HeatmapGrid:
    param_name: str
    param_low: float
    param_high: float
    values: np.ndarray  # (param_bins, curve_bins)
    empty: np.ndarray  # bool mask, same shape
    selection_size: int


def heatmap_aggregate(
    ens: Ensemble,
    curve: SfcCurve,
    selection: Selection,
    param_index: int,
    bins: tuple[int, int] = (HEATMAP_PARAM_BINS, HEATMAP_CURVE_BINS),
) -> HeatmapGrid:
    """Mean simulation output over (parameter bin) x (curve chunk) cells.

    Parameter bins split the declared range into equal widths; curve chunks
    split the selection's voxels, in curve order, into as-equal-as-possible
    contiguous groups (at most one chunk per selected voxel).
    """
    if not 0 <= param_index < ens.pspace.n_params:
        raise BadParamIndex(f"parameter index {param_index} out of range")
    if selection.size == 0:
        raise EmptySelection("selection holds no voxels")
    p_bins, c_bins = bins
    param = ens.pspace.params[param_index]
    pvals = ens.pspace.samples[:, param_index]
    width = param.high - param.low
    if width <= 0:
        bin_idx = np.zeros(ens.n_runs, dtype=np.int64)
        p_bins = 1
    else:
        bin_idx = np.minimum(
            ((pvals - param.low) / width * p_bins).astype(np.int64), p_bins - 1
        )

    # selection voxels in curve order, split into contiguous chunks
    sel_sorted = selection.voxel_indices[
        np.argsort(curve.inverse[selection.voxel_indices], kind="stable")
    ]
    c_bins = min(c_bins, sel_sorted.size)
    chunks = np.array_split(sel_sorted, c_bins)

    run_counts = np.bincount(bin_idx, minlength=p_bins).astype(np.float64)
    chunk_sums = np.empty((c_bins, ens.n_runs))
    chunk_sizes = np.empty(c_bins)
    for ci, chunk in enumerate(chunks):
        chunk_sums[ci] = ens.volumes[:, chunk].astype(np.float64).sum(axis=1)
        chunk_sizes[ci] = chunk.size
    # accumulate run sums into parameter bins
    bin_sums = np.zeros((p_bins, c_bins))
    np.add.at(bin_sums, bin_idx, chunk_sums.T)
    counts = run_counts[:, None] * chunk_sizes[None, :]
    empty = counts == 0
    values = np.divide(bin_sums, counts, out=np.zeros_like(bin_sums), where=~empty)
    return HeatmapGrid(
        param_name=param.name,
        param_low=param.low,
        param_high=param.high,
        values=values,
        empty=empty,
        selection_size=selection.size,
    )


def nn_fill(grid: HeatmapGrid) -> HeatmapGrid:
    """Fill empty cells from the nearest filled cell (Euclidean distance on
    grid indices; ties prefer the smaller row, then the smaller column)."""
    if not grid.empty.any():
        return HeatmapGrid(
            grid.param_name,
            grid.param_low,
            grid.param_high,
            grid.values.copy(),
            grid.empty.copy(),
            grid.selection_size,
        )
    filled = np.argwhere(~grid.empty)
    if filled.size == 0:
        raise AllEmpty("heatmap has no filled cells")
    empties = np.argwhere(grid.empty)
    tree = cKDTree(filled)
    d, _ = tree.query(empties, k=1)
    values = grid.values.copy()
    # exact integer tie-break: all filled cells at the minimal squared
    # distance, lexicographically smallest (row, col) wins
    for (r, c), dist in zip(empties, d):
        cand = tree.query_ball_point((r, c), dist + 1e-9)
        best = None
        best_d2 = None
        for idx in cand:
            fr, fc = filled[idx]
            d2 = (int(fr) - int(r)) ** 2 + (int(fc) - int(c)) ** 2
            key = (d2, int(fr), int(fc))
            if best is None or key < (best_d2, best[0], best[1]):
                best = (int(fr), int(fc))
                best_d2 = d2
        values[r, c] = grid.values[best]
    return HeatmapGrid(
        grid.param_name,
        grid.param_low,
        grid.param_high,
        values,
        np.zeros_like(grid.empty),
        grid.selection_size,
    )


# ---------------------------------------------------------------------------
# Selection boundary mesh
# ---------------------------------------------------------------------------

@dataclass
class TriangleMesh:
    vertices: np.ndarray  # (Nv, 3) float32, voxel coordinates
    triangles: np.ndarray  # (Nt, 3) uint32

    @property
    def triangle_count(self) -> int:
        return self.triangles.shape[0]


def selection_mesh(selection: Selection, dims: GridDims) -> TriangleMesh:
    """Closed boundary surface of the selected voxel mask (iso level 0.5 on
    the mask padded with one empty layer). Vertices in voxel coordinates."""
    if selection.size == 0:
        return TriangleMesh(
            vertices=np.zeros((0, 3), dtype=np.float32),
            triangles=np.zeros((0, 3), dtype=np.uint32),
        )
    mask = np.zeros(dims.voxel_count, dtype=np.float32)
    mask[selection.voxel_indices] = 1.0
    vol = np.pad(mask.reshape(dims.nz, dims.ny, dims.nx), 1)
    verts, faces, _normals, _vals = _sk_measure.marching_cubes(vol, level=0.5)
    # axes come back as (z, y, x); shift out the pad layer
    verts = verts[:, ::-1] - 1.0
    return TriangleMesh(
        vertices=verts.astype(np.float32),
        triangles=faces.astype(np.uint32),
    )


def mesh_to_binary(mesh: TriangleMesh) -> bytes:
    """uint32 triangle count, float32 vertex triplets, uint32 index triplets.

    The vertex count is implied by the total length:
    len = 4 + 12 * n_vertices + 12 * n_triangles.
    """
    head = np.array([mesh.triangle_count], dtype="<u4").tobytes()
    return (
        head
        + mesh.vertices.astype("<f4").tobytes()
        + mesh.triangles.astype("<u4").tobytes()
    )


def mesh_from_binary(blob: bytes) -> TriangleMesh:
    n_tri = int(np.frombuffer(blob, dtype="<u4", count=1)[0])
    n_vert = (len(blob) - 4 - 12 * n_tri) // 12
    verts = np.frombuffer(blob, dtype="<f4", count=3 * n_vert, offset=4)
    tris = np.frombuffer(blob, dtype="<u4", count=3 * n_tri, offset=4 + 12 * n_vert)
    return TriangleMesh(
        vertices=verts.reshape(-1, 3).copy(),
        triangles=tris.reshape(-1, 3).copy(),
    )
