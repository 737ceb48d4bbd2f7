import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensvol import errors
from sensvol.ensemble import (
    Ensemble,
    GridDims,
    Parameter,
    ParameterSpace,
    SYNTHETIC_PARAMS,
    SyntheticConfig,
    generate_synthetic,
    random_sample,
)
from sensvol.sensitivity import SensitivityFieldSet
from sensvol.sfc import hilbert_curve, scanline_curve
from sensvol.viewdata import (
    HeatmapGrid,
    Selection,
    heatmap_aggregate,
    horizon_bands,
    mesh_from_binary,
    mesh_to_binary,
    monte_carlo_subsample,
    nn_fill,
    pcp_payload,
    resolve_selection,
    selection_mesh,
    sensitivity_view,
)


def make_fields(dims, arrays, measure="delta"):
    arrays = np.asarray(arrays, dtype=np.float64)
    names = [f"P{i+1}" for i in range(arrays.shape[0])]
    return SensitivityFieldSet(measure, dims, names, arrays)


class TestSubsample:
    def test_count_clamped(self):
        s = monte_carlo_subsample(10, 50, seed=1)
        assert np.array_equal(s, np.arange(10))

    def test_deterministic(self):
        assert np.array_equal(
            monte_carlo_subsample(1000, 100, seed=7),
            monte_carlo_subsample(1000, 100, seed=7),
        )

    def test_inclusion_frequency(self):
        V, count, trials = 40, 10, 1000
        hits = np.zeros(V)
        for seed in range(trials):
            hits[monte_carlo_subsample(V, count, seed=seed)] += 1
        p = count / V
        sigma = np.sqrt(trials * p * (1 - p))
        assert np.all(np.abs(hits - trials * p) <= 4 * sigma)


class TestPcpPayload:
    def _fields(self):
        dims = GridDims(4, 4, 1)
        f = np.zeros((3, 16))
        f[0] = np.linspace(0, 1, 16)  # mean 0.5
        f[1] = np.linspace(0, 0.5, 16)  # mean 0.25
        f[2] = 0.0  # all zero, never sensitive
        return dims, make_fields(dims, f)

    def test_zero_field_excluded_at_5pct(self):
        _dims, fs = self._fields()
        p = pcp_payload(fs, filter_pct=5.0)
        assert [a.name for a in p.axes] == ["P1", "P2"]

    def test_filter_zero_keeps_all(self):
        _dims, fs = self._fields()
        p = pcp_payload(fs, filter_pct=0.0)
        assert [a.name for a in p.axes] == ["P1", "P2", "P3"]

    def test_all_axes_filtered(self):
        dims = GridDims(2, 2, 1)
        fs = make_fields(dims, np.zeros((2, 4)))
        with pytest.raises(errors.AllAxesFiltered):
            pcp_payload(fs, filter_pct=5.0)

    def test_axis_order_by_mean(self):
        dims = GridDims(2, 2, 1)
        f = np.array(
            [[0.1, 0.1, 0.1, 0.1], [0.9, 0.9, 0.9, 0.9], [0.5, 0.5, 0.5, 0.5]]
        )
        p = pcp_payload(make_fields(dims, f))
        assert [a.name for a in p.axes] == ["P2", "P3", "P1"]

    def test_explicit_order_override(self):
        _dims, fs = self._fields()
        p = pcp_payload(fs, axis_order=["P3", "P1", "P2"])
        assert [a.name for a in p.axes] == ["P3", "P1", "P2"]

    def test_shared_scale_and_aux(self):
        dims, fs = self._fields()
        aux = {"prob": np.linspace(-2, 2, 16)}
        p = pcp_payload(fs, aux=aux, sample_idx=np.arange(16))
        assert p.scale_min == 0.0
        assert p.scale_max == 1.0
        assert p.aux_axes[0].name == "prob"
        assert p.aux_axes[0].is_aux
        assert p.polylines.shape == (16, 4)


class TestHorizonBands:
    def test_simple_split(self):
        hs = horizon_bands(np.array([0.45]), 0.2)
        assert hs.full_bands[0] == 2
        assert abs(hs.top_fill[0] - 0.25) < 1e-12

    def test_exact_multiple_fills_top(self):
        hs = horizon_bands(np.array([1.0]), 0.2)
        assert hs.full_bands[0] == 4
        assert hs.top_fill[0] == 1.0
        assert hs.band_counts[0] == 5  # five bands shown in total

    def test_dgsa_bandwidth(self):
        hs = horizon_bands(np.array([2.3]), 1.0)
        assert hs.full_bands[0] == 2
        assert abs(hs.top_fill[0] - 0.3) < 1e-12

    def test_zero_value(self):
        hs = horizon_bands(np.array([0.0]), 0.2)
        assert hs.full_bands[0] == 0 and hs.top_fill[0] == 0.0
        assert hs.band_counts[0] == 0

    def test_negative_rejected(self):
        with pytest.raises(errors.NegativeValue):
            horizon_bands(np.array([-0.1]), 0.2)

    def test_reconstruction_million(self):
        rng = np.random.default_rng(0)
        vals = rng.random(1_000_000) * 3.0
        hs = horizon_bands(vals, 0.2)
        assert np.abs(hs.reconstruct() - vals).max() < 1e-9


class TestSensitivityView:
    def _setup(self):
        dims = GridDims(4, 4, 1)
        f = np.zeros((3, 16))
        f[0, :12] = 0.9  # most sensitive voxels
        f[1, :2] = 0.9
        f[2, :6] = 0.9
        fs = make_fields(dims, f)
        return fs, scanline_curve(dims)

    def test_all_horizon(self):
        fs, curve = self._setup()
        p = sensitivity_view(fs, curve, sample_idx=np.arange(16), m=3)
        assert len(p.horizon) == 3
        assert p.line_fields == []

    def test_all_line_chart_draw_order(self):
        fs, curve = self._setup()
        p = sensitivity_view(fs, curve, sample_idx=np.arange(16), m=0)
        assert len(p.horizon) == 0
        # P1 has the most sensitive voxels: drawn first (furthest back)
        assert p.draw_order[0] == "P1"
        assert set(p.draw_order) == {"P1", "P2", "P3"}
        assert p.draw_order.index("P1") < p.draw_order.index("P3")

    def test_axis_order_linked(self):
        fs, curve = self._setup()
        p = sensitivity_view(
            fs, curve, sample_idx=np.arange(16), m=2, axis_order=["P2", "P3", "P1"]
        )
        assert [h.name for h in p.horizon] == ["P2", "P3"]
        assert p.line_fields == ["P1"]

    def test_values_follow_curve_order(self):
        fs, curve = self._setup()
        p = sensitivity_view(fs, curve, sample_idx=np.arange(16), m=1)
        expected = fs.field(p.horizon[0].name)[curve.order]
        assert np.allclose(p.horizon[0].reconstruct(), expected)


class TestResolveSelection:
    def _fields(self):
        dims = GridDims(4, 4, 1)
        rng = np.random.default_rng(3)
        return make_fields(dims, rng.random((2, 16))), dims

    def test_single_brush(self):
        fs, _dims = self._fields()
        sel = resolve_selection({"P1": (0.5, 1.0)}, None, fs)
        want = np.flatnonzero((fs.field("P1") >= 0.5) & (fs.field("P1") <= 1.0))
        assert np.array_equal(sel.voxel_indices, want)

    def test_two_brushes_intersect(self):
        fs, _dims = self._fields()
        sel = resolve_selection({"P1": (0.3, 1.0), "P2": (0.0, 0.6)}, None, fs)
        m1 = (fs.field("P1") >= 0.3) & (fs.field("P1") <= 1.0)
        m2 = (fs.field("P2") >= 0.0) & (fs.field("P2") <= 0.6)
        assert np.array_equal(sel.voxel_indices, np.flatnonzero(m1 & m2))

    def test_sfc_intervals_union(self):
        fs, dims = self._fields()
        curve = scanline_curve(dims)
        sel = resolve_selection(None, [(0, 2), (8, 9)], fs, curve)
        want = np.sort(curve.order[np.r_[0:3, 8:10]])
        assert np.array_equal(sel.voxel_indices, want)

    def test_both_intersect(self):
        fs, dims = self._fields()
        curve = scanline_curve(dims)
        sel = resolve_selection({"P1": (0.2, 0.9)}, [(0, 7)], fs, curve)
        m1 = (fs.field("P1") >= 0.2) & (fs.field("P1") <= 0.9)
        m2 = np.zeros(16, dtype=bool)
        m2[curve.order[0:8]] = True
        assert np.array_equal(sel.voxel_indices, np.flatnonzero(m1 & m2))

    def test_empty_inputs_select_all(self):
        fs, _dims = self._fields()
        sel = resolve_selection(None, None, fs)
        assert np.array_equal(sel.voxel_indices, np.arange(16))

    def test_monotonicity(self):
        fs, dims = self._fields()
        curve = scanline_curve(dims)
        base = resolve_selection({"P1": (0.2, 0.9)}, [(0, 9)], fs, curve)
        narrowed = resolve_selection(
            {"P1": (0.2, 0.9), "P2": (0.1, 0.8)}, [(0, 9)], fs, curve
        )
        widened = resolve_selection({"P1": (0.2, 0.9)}, [(0, 9), (12, 14)], fs, curve)
        assert set(narrowed.voxel_indices) <= set(base.voxel_indices)
        assert set(widened.voxel_indices) >= set(base.voxel_indices)

    def test_brute_force_16cubed(self):
        dims = GridDims(16, 16, 16)
        rng = np.random.default_rng(11)
        fs = make_fields(dims, rng.random((3, dims.voxel_count)))
        curve = scanline_curve(dims)
        brushes = {"P1": (0.25, 0.75), "P3": (0.0, 0.5)}
        intervals = [(100, 900), (2000, 2500), (3000, 3005)]
        sel = resolve_selection(brushes, intervals, fs, curve)
        # brute force over every voxel
        want = []
        for v in range(dims.voxel_count):
            ok = all(
                lo <= fs.field(nm)[v] <= hi for nm, (lo, hi) in brushes.items()
            )
            pos = int(curve.inverse[v])
            ok &= any(a <= pos <= b for a, b in intervals)
            if ok:
                want.append(v)
        assert sel.voxel_indices.tolist() == want

    def test_unknown_axis(self):
        fs, _dims = self._fields()
        with pytest.raises(errors.BadParamIndex):
            resolve_selection({"nope": (0, 1)}, None, fs)

    def test_malformed_interval(self):
        fs, _dims = self._fields()
        with pytest.raises(ValueError):
            resolve_selection({"P1": (0.9, 0.1)}, None, fs)


class TestHeatmap:
    def _ens(self, n_runs=50, dims=GridDims(4, 4, 1), seed=0):
        ps = random_sample(SYNTHETIC_PARAMS, n_runs, seed=seed)
        rng = np.random.default_rng(seed + 1)
        vols = rng.random((n_runs, dims.voxel_count)).astype(np.float32)
        return Ensemble(dims, ps, vols)

    def test_single_run_single_column(self):
        dims = GridDims(4, 4, 1)
        ps = ParameterSpace(SYNTHETIC_PARAMS, np.array([[0.37, 0.5, 0.5]]))
        vols = np.arange(16, dtype=np.float32).reshape(1, 16)
        ens = Ensemble(dims, ps, vols)
        curve = scanline_curve(dims)
        sel = Selection(np.arange(16), {}, ())
        grid = heatmap_aggregate(ens, curve, sel, 0, bins=(10, 4))
        col = int(0.37 * 10)
        assert np.array_equal(~grid.empty[col], np.ones(4, dtype=bool))
        assert grid.empty[:col].all() and grid.empty[col + 1 :].all()
        # cells are per-chunk voxel means of the single run
        chunks = np.array_split(curve.order[np.argsort(curve.inverse[np.arange(16)])][np.argsort(np.arange(16))], 4)
        sel_sorted = np.arange(16)[np.argsort(curve.inverse[np.arange(16)])]
        chunks = np.array_split(sel_sorted, 4)
        for ci, ch in enumerate(chunks):
            assert abs(grid.values[col, ci] - vols[0, ch].mean()) < 1e-6

    def test_small_selection_fewer_rows(self):
        ens = self._ens()
        curve = scanline_curve(ens.dims)
        sel = Selection(np.array([3, 7, 11]), {}, ())
        grid = heatmap_aggregate(ens, curve, sel, 1, bins=(8, 500))
        assert grid.values.shape == (8, 3)
        # no all-empty row caused by construction
        assert not grid.empty.all(axis=0).any()

    def test_constant_ensemble_all_filled_equal(self):
        dims = GridDims(4, 2, 1)
        n_runs = 400
        ps = random_sample(SYNTHETIC_PARAMS, n_runs, seed=5)
        ens = Ensemble(dims, ps, np.full((n_runs, 8), 2.5, dtype=np.float32))
        curve = scanline_curve(dims)
        sel = Selection(np.arange(8), {}, ())
        grid = heatmap_aggregate(ens, curve, sel, 0, bins=(20, 8))
        assert not grid.empty.any()
        assert np.allclose(grid.values, 2.5)

    def test_monotone_single_voxel_p1(self):
        dims = GridDims(8, 8, 8)
        from sensvol.ensemble import saltelli_sample

        ps = saltelli_sample(SYNTHETIC_PARAMS, 200, seed=0)
        ens = generate_synthetic(SyntheticConfig(dims=dims, noise_max=0.0), ps)
        curve = scanline_curve(dims)
        v = dims.linear_index(7, 7, 7)
        sel = Selection(np.array([v]), {}, ())
        grid = heatmap_aggregate(ens, curve, sel, 0, bins=(20, 500))
        col_means = [
            grid.values[p, 0] for p in range(20) if not grid.empty[p, 0]
        ]
        diffs = np.diff(col_means)
        assert np.all(diffs >= -1e-12)

    def test_errors(self):
        ens = self._ens()
        curve = scanline_curve(ens.dims)
        with pytest.raises(errors.EmptySelection):
            heatmap_aggregate(ens, curve, Selection(np.array([], dtype=int), {}, ()), 0)
        with pytest.raises(errors.BadParamIndex):
            heatmap_aggregate(ens, curve, Selection(np.arange(4), {}, ()), 7)


class TestNnFill:
    def _grid(self, values, empty):
        return HeatmapGrid(
            "P1", 0.0, 1.0, np.asarray(values, float), np.asarray(empty, bool), 1
        )

    def test_single_gap(self):
        g = self._grid([[5.0, 0.0]], [[False, True]])
        f = nn_fill(g)
        assert f.values.tolist() == [[5.0, 5.0]]
        assert not f.empty.any()

    def test_identity_when_full(self):
        g = self._grid([[1.0, 2.0], [3.0, 4.0]], [[False, False], [False, False]])
        f = nn_fill(g)
        assert np.array_equal(f.values, g.values)

    def test_tie_prefers_smaller_row(self):
        # empty cell equidistant between a value above and below
        g = self._grid(
            [[3.0], [0.0], [9.0]],
            [[False], [True], [False]],
        )
        f = nn_fill(g)
        assert f.values[1, 0] == 3.0

    def test_tie_prefers_smaller_col(self):
        g = self._grid(
            [[3.0, 0.0, 9.0]],
            [[False, True, False]],
        )
        f = nn_fill(g)
        assert f.values[0, 1] == 3.0

    def test_all_empty(self):
        g = self._grid([[0.0]], [[True]])
        with pytest.raises(errors.AllEmpty):
            nn_fill(g)

    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_idempotent(self, data):
        rows = data.draw(st.integers(1, 8))
        cols = data.draw(st.integers(1, 8))
        seed = data.draw(st.integers(0, 1000))
        rng = np.random.default_rng(seed)
        empty = rng.random((rows, cols)) < 0.5
        if empty.all():
            empty[rng.integers(rows), rng.integers(cols)] = False
        vals = np.where(empty, 0.0, rng.random((rows, cols)))
        g = self._grid(vals, empty)
        f1 = nn_fill(g)
        f2 = nn_fill(f1)
        assert np.array_equal(f1.values, f2.values)
        assert not f1.empty.any()


class TestSelectionMesh:
    def test_empty_selection(self):
        mesh = selection_mesh(Selection(np.array([], dtype=int), {}, ()), GridDims(4, 4, 4))
        assert mesh.triangle_count == 0

    def test_single_voxel_watertight(self):
        dims = GridDims(5, 5, 5)
        v = dims.linear_index(2, 2, 2)
        mesh = selection_mesh(Selection(np.array([v]), {}, ()), dims)
        assert mesh.triangle_count > 0
        # Euler characteristic of a closed genus-0 surface: V - E + F = 2
        edges = set()
        for tri in mesh.triangles:
            for a, b in ((0, 1), (1, 2), (2, 0)):
                e = (min(tri[a], tri[b]), max(tri[a], tri[b]))
                edges.add(e)
        chi = mesh.vertices.shape[0] - len(edges) + mesh.triangle_count
        assert chi == 2

    def test_full_volume_bounds(self):
        dims = GridDims(4, 3, 2)
        sel = Selection(np.arange(dims.voxel_count), {}, ())
        mesh = selection_mesh(sel, dims)
        lo = mesh.vertices.min(axis=0)
        hi = mesh.vertices.max(axis=0)
        assert np.allclose(lo, [-0.5, -0.5, -0.5])
        assert np.allclose(hi, [dims.nx - 0.5, dims.ny - 0.5, dims.nz - 0.5])

    def test_binary_roundtrip(self):
        dims = GridDims(4, 4, 4)
        sel = Selection(np.arange(8), {}, ())
        mesh = selection_mesh(sel, dims)
        back = mesh_from_binary(mesh_to_binary(mesh))
        assert np.array_equal(back.triangles, mesh.triangles)
        assert np.allclose(back.vertices, mesh.vertices)
