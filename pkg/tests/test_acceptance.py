"""Acceptance suite: every criterion at its stated tolerance, one pass/fail
line each (see the terminal summary section).

The anchor dataset is the 32x32x32 synthetic ensemble with the largest
A/B/AB_i design of at most 4096 runs (base 819, 4095 rows). Thresholds were
verified over five sampling seeds before being frozen here.
"""

import itertools
import json
import math
import warnings

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import record_criterion
from sensvol.cli import main as cli_main
from sensvol.ensemble import (
    GridDims,
    Parameter,
    SYNTHETIC_PARAMS,
    SyntheticConfig,
    generate_synthetic,
    load_ensemble,
    saltelli_sample,
    synthetic_field,
)
from sensvol.evaluation import (
    convergence_study,
    positional_coherency,
    value_coherency,
)
from sensvol.sensitivity import (
    BootstrapThresholds,
    DgsaConfig,
    SensitivityFieldSet,
    cdf_distance,
    delta_volume,
    dgsa_volume,
    load_field_set,
    natural_breaks,
    sobol_first_order,
    sobol_volume,
)
from sensvol.service import create_app
from sensvol.sfc import (
    DISTANCES,
    SfcConfig,
    data_driven_curve,
    hilbert_curve,
    load_curve,
    scanline_curve,
)
from sensvol.viewdata import (
    HeatmapGrid,
    Selection,
    heatmap_aggregate,
    horizon_bands,
    nn_fill,
    resolve_selection,
)
from sensvol import errors

DIMS = GridDims(32, 32, 32)
BASE_N = 819  # 819 * (3 + 2) = 4095 runs, the largest design within 4096
SEED = 0


@pytest.fixture(scope="session")
def anchor_ensemble():
    ps = saltelli_sample(SYNTHETIC_PARAMS, BASE_N, seed=SEED)
    return generate_synthetic(
        SyntheticConfig(dims=DIMS, noise_max=0.01, seed=SEED), ps
    )


@pytest.fixture(scope="session")
def delta_fields(anchor_ensemble):
    return delta_volume(anchor_ensemble)


@pytest.fixture(scope="session")
def sobol_fields(anchor_ensemble):
    return sobol_volume(anchor_ensemble)


@pytest.fixture(scope="session")
def dgsa_fields(anchor_ensemble):
    return dgsa_volume(anchor_ensemble, DgsaConfig(seed=SEED))


def test_criterion_1_irrelevant_parameter(delta_fields, dgsa_fields):
    d3 = delta_fields.field("P3")
    assert d3.mean() < 0.05, f"delta P3 mean {d3.mean():.4f}"
    assert np.quantile(d3, 0.99) < 0.15, f"delta P3 p99 {np.quantile(d3, 0.99):.4f}"
    g3 = dgsa_fields.field("P3")
    frac = (g3 > 1.0).mean()
    assert frac < 0.01, f"dgsa P3 fraction above 1: {frac:.4f}"
    record_criterion(1, "irrelevant parameter stays quiet in delta and dgsa")


def test_criterion_2_localized_sensitivity(
    anchor_ensemble, sobol_fields, delta_fields, dgsa_fields
):
    v = DIMS.linear_index(7, 7, 7)
    s = np.array([f[v] for f in sobol_fields.fields])
    d = np.array([f[v] for f in delta_fields.fields])
    g = np.array([f[v] for f in dgsa_fields.fields])
    assert 0.9 <= s[0] <= 1.1, f"sobol P1 at peak: {s[0]:.4f}"
    assert d[0] > 0.3, f"delta P1 at peak: {d[0]:.4f}"
    assert g[0] > 1.0, f"dgsa P1 at peak: {g[0]:.4f}"
    for vals in (s, d, g):
        assert np.argmax(vals) == 0, f"P1 not ranked first: {vals}"
    assert d[0] / max(d[2], 1e-12) > 5.0, "delta P1/P3 ratio at the peak"
    record_criterion(2, "peak voxel attributed to P1 by all three measures")


def test_pcp_axis_order_on_anchor(delta_fields):
    # oracle-derived ordering of the synthetic delta fields: the moving
    # kernel gives P2 the largest support, the localized blobs put P1 second,
    # and the inert P3 comes last
    from sensvol.viewdata import axis_order_by_mean, pcp_payload

    assert axis_order_by_mean(delta_fields) == ["P2", "P1", "P3"]
    payload = pcp_payload(delta_fields, filter_pct=5.0)
    assert [a.name for a in payload.axes] == ["P2", "P1"]  # P3 filtered out


def test_criterion_3_sobol_oracle_ishigami():
    a, b = 7.0, 0.1
    base_n = 16384
    params = tuple(Parameter(f"x{i}", -math.pi, math.pi) for i in range(3))
    ps = saltelli_sample(params, base_n, seed=SEED)
    X = ps.samples
    Y = np.sin(X[:, 0]) + a * np.sin(X[:, 1]) ** 2 + b * X[:, 2] ** 4 * np.sin(X[:, 0])
    S = sobol_first_order(Y, 3, base_n)
    # closed-form first-order variances
    pi = math.pi
    D = a**2 / 8 + b * pi**4 / 5 + b**2 * pi**8 / 18 + 0.5
    expected = np.array([(b * pi**4 / 5 + b**2 * pi**8 / 50 + 0.5) / D,
                         (a**2 / 8) / D, 0.0])
    assert np.allclose(expected[:2], [0.3139, 0.4424], atol=5e-4)
    err = np.abs(S - expected)
    assert err.max() < 0.02, f"ishigami errors {err}"
    record_criterion(3, "ishigami first-order indices within 0.02 of closed form")


@pytest.fixture(scope="session")
def convergence_reports(anchor_ensemble):
    """Field sets over the run ladder 15..4095 (doubling, A/B/AB_i layout)."""
    base_ns = [3, 6, 13, 26, 51, 102, 205, 410, BASE_N]
    sobol_sets, delta_sets, run_counts = [], [], []
    for bn in base_ns:
        if bn == BASE_N:
            ens = anchor_ensemble
        else:
            ps = saltelli_sample(SYNTHETIC_PARAMS, bn, seed=SEED)
            ens = generate_synthetic(
                SyntheticConfig(dims=DIMS, noise_max=0.01, seed=SEED), ps
            )
        run_counts.append(ens.n_runs)
        sobol_sets.append(sobol_volume(ens))
        if ens.n_runs <= 512:
            delta_sets.append(delta_volume(ens))
        del ens
    sobol_rep = convergence_study(sobol_sets, run_counts, "sobol")
    delta_rep = convergence_study(
        delta_sets, run_counts[: len(delta_sets)], "delta"
    )
    return sobol_rep, delta_rep


def test_criterion_4_convergence_shape(convergence_reports):
    sobol_rep, delta_rep = convergence_reports
    first = sobol_rep.steps[0].mean_abs_diff
    last = sobol_rep.steps[-1].mean_abs_diff
    assert first >= 5.0 * last, (
        f"sobol mean|diff| first {first:.4f} vs last {last:.4f}"
    )
    sobol_by_run = {s.run_count: s.mean_abs_diff for s in sobol_rep.steps}
    for step in delta_rep.steps:
        assert step.run_count <= 512
        assert step.mean_abs_diff < sobol_by_run[step.run_count], (
            f"delta {step.mean_abs_diff:.4f} not below sobol "
            f"{sobol_by_run[step.run_count]:.4f} at {step.run_count} runs"
        )
    record_criterion(4, "sobol converges >= 5x; delta stays below sobol early")


def test_criterion_5_curve_validity():
    grids = [
        GridDims(4, 4, 4),
        GridDims(8, 8, 8),
        GridDims(16, 16, 16),
        GridDims(32, 32, 32),
        GridDims(6, 4, 2),
    ]
    rng = np.random.default_rng(5)
    for dims in grids:
        fields = SensitivityFieldSet(
            "delta",
            dims,
            ["P1", "P2", "P3"],
            rng.random((3, dims.voxel_count)),
        )
        data_driven_curve(fields, SfcConfig()).validate()
        scanline_curve(dims).validate()
        if dims.nx == dims.ny == dims.nz:
            hilbert_curve(dims).validate()
        else:
            with pytest.raises(errors.UnsupportedDims):
                hilbert_curve(dims)
    record_criterion(5, "permutation/adjacency/closure hold on all grids")


def test_criterion_6_coherency_ordering(delta_fields):
    curves = {"scanline": scanline_curve(DIMS), "hilbert": hilbert_curve(DIMS)}
    for dist in DISTANCES:
        curves[f"datadriven_{dist}"] = data_driven_curve(
            delta_fields, SfcConfig(alpha=0.1, distance=dist)
        )
    value = {k: value_coherency(c, delta_fields) for k, c in curves.items()}
    pos = {k: positional_coherency(c) for k, c in curves.items()}

    for name in curves:
        if name == "scanline":
            continue
        assert value["scanline"] < value[name], (
            f"scanline value coherency {value['scanline']:.4f} not below "
            f"{name} ({value[name]:.4f})"
        )
        assert pos["scanline"] < pos[name], (
            f"scanline positional coherency not strictly worst vs {name}"
        )
    assert pos["hilbert"] == max(pos.values()), (
        f"hilbert not best positionally: {pos}"
    )
    assert value["datadriven_l1"] > value["hilbert"], (
        f"l1 value coherency {value['datadriven_l1']:.4f} "
        f"not above hilbert {value['hilbert']:.4f}"
    )
    # soft check: l1 should essentially lead the data-driven field
    for dist in DISTANCES:
        other = value[f"datadriven_{dist}"]
        if value["datadriven_l1"] < other - 0.01:
            warnings.warn(
                f"value coherency: datadriven_{dist} ({other:.4f}) beats l1 "
                f"({value['datadriven_l1']:.4f}) by more than 0.01"
            )
    record_criterion(6, "coherency ordering matches the qualitative ranking")


def test_criterion_7_dgsa_internals(anchor_ensemble):
    # exact clustering objective vs exhaustive search, 1000 random cases
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(4, 13))
        x = np.sort(rng.normal(0, 1, n))
        kmax = min(5, len(np.unique(x)))
        for k in range(2, kmax + 1):
            labels = natural_breaks(x, k)
            got = sum(
                ((x[labels == c] - x[labels == c].mean()) ** 2).sum()
                for c in range(k)
            )
            best = np.inf
            for cuts in itertools.combinations(range(1, n), k - 1):
                b = (0,) + cuts + (n,)
                tot = 0.0
                for i in range(k):
                    seg = x[b[i] : b[i + 1]]
                    tot += ((seg - seg.mean()) ** 2).sum()
                best = min(best, tot)
            assert abs(got - best) <= 1e-9 * max(1.0, best)

    # analytic CDF distance: top half of a uniform sample
    p = np.random.default_rng(17).random(4096)
    cluster = np.sort(p)[2048:]
    assert abs(cdf_distance(cluster, p, 0.0, 1.0) - 0.25) < 0.02

    # threshold cache transparency on a small volume
    ps = saltelli_sample(SYNTHETIC_PARAMS, 64, seed=3)
    small = generate_synthetic(
        SyntheticConfig(dims=GridDims(4, 4, 2), noise_max=0.01, seed=3), ps
    )
    cfg = DgsaConfig(bootstrap_b=300, seed=3)
    with_cache = dgsa_volume(small, cfg, use_cache=True)
    without = dgsa_volume(small, cfg, use_cache=False)
    assert np.array_equal(with_cache.fields, without.fields)
    assert np.array_equal(with_cache.flags, without.flags)
    record_criterion(7, "natural breaks exact; cdf analytic; cache transparent")


def test_criterion_8_viewdata_properties():
    # horizon reconstruction on a million random values
    rng = np.random.default_rng(8)
    vals = rng.random(1_000_000) * 4.0
    hs = horizon_bands(vals, 0.2)
    assert np.abs(hs.reconstruct() - vals).max() < 1e-9

    # nn_fill: idempotent, tie rules honored
    g = HeatmapGrid(
        "P1", 0.0, 1.0,
        np.array([[3.0], [0.0], [9.0]]),
        np.array([[False], [True], [False]]),
        1,
    )
    f = nn_fill(g)
    assert f.values[1, 0] == 3.0  # smaller row wins
    g2 = HeatmapGrid(
        "P1", 0.0, 1.0,
        np.array([[3.0, 0.0, 9.0]]),
        np.array([[False, True, False]]),
        1,
    )
    assert nn_fill(g2).values[0, 1] == 3.0  # smaller column wins
    rnd = HeatmapGrid(
        "P1", 0.0, 1.0,
        rng.random((20, 30)),
        rng.random((20, 30)) < 0.6,
        1,
    )
    f1 = nn_fill(rnd)
    f2 = nn_fill(f1)
    assert np.array_equal(f1.values, f2.values)

    # selection semantics against brute force on 16^3
    dims = GridDims(16, 16, 16)
    fs = SensitivityFieldSet(
        "delta", dims, ["P1", "P2", "P3"], rng.random((3, dims.voxel_count))
    )
    curve = scanline_curve(dims)
    brushes = {"P1": (0.3, 0.8), "P2": (0.1, 0.9)}
    intervals = [(0, 400), (1000, 1500)]
    sel = resolve_selection(brushes, intervals, fs, curve)
    want = []
    for v in range(dims.voxel_count):
        ok = all(lo <= fs.field(nm)[v] <= hi for nm, (lo, hi) in brushes.items())
        pos = int(curve.inverse[v])
        ok &= any(a <= pos <= b for a, b in intervals)
        if ok:
            want.append(v)
    assert sel.voxel_indices.tolist() == want

    # heatmap over P1 for the noiseless peak voxel: columns non-decreasing
    dims8 = GridDims(8, 8, 8)
    ps = saltelli_sample(SYNTHETIC_PARAMS, 819, seed=SEED)
    ens = generate_synthetic(SyntheticConfig(dims=dims8, noise_max=0.0), ps)
    curve8 = scanline_curve(dims8)
    v = dims8.linear_index(7, 7, 7)
    grid = heatmap_aggregate(ens, curve8, Selection(np.array([v]), {}, ()), 0)
    col = [grid.values[p, 0] for p in range(grid.values.shape[0])
           if not grid.empty[p, 0]]
    assert np.all(np.diff(col) >= -1e-12)
    record_criterion(8, "horizon/nn-fill/selection/heatmap properties hold")


def test_criterion_9_end_to_end_cli(tmp_path):
    data = tmp_path / "ds"
    assert cli_main([
        "generate-synthetic", "--out", str(data), "--dims", "16",
        "--runs", "160", "--seed", "7",
    ]) == 0
    assert cli_main(["sensitivity", "--data", str(data), "--measure", "delta"]) == 0
    assert cli_main([
        "sfc", "--data", str(data), "--kind", "datadriven", "--distance", "l1",
        "--alpha", "0.1",
    ]) == 0
    report = tmp_path / "report.json"
    assert cli_main([
        "evaluate", "--fields", str(data / "sensitivity" / "delta"),
        "--curves", str(data / "curves" / "datadriven_l1.sfc"),
        "--out", str(report),
    ]) == 0

    # all artifacts parse back
    ens = load_ensemble(data)
    assert ens.n_runs == 160
    fs = load_field_set(data / "sensitivity" / "delta")
    assert fs.measure == "delta"
    curve = load_curve(data / "curves" / "datadriven_l1.sfc")
    curve.validate()
    assert json.loads(report.read_text())["coherency"]

    # the service answers the full endpoint set on the preprocessed data
    client = TestClient(create_app(data))
    assert client.get("/api/meta").status_code == 200
    assert client.get("/api/pcp", params={"count": 200}).status_code == 200
    sv = client.get("/api/sensitivity-view", params={"m": 1, "count": 200})
    assert sv.status_code == 200
    sid = client.post(
        "/api/selection", json={"pcpBrushes": {"P1": [0.0, 1.0]}}
    ).json()["id"]
    assert client.get(
        "/api/heatmap", params={"param": "P1", "selection": sid, "fill": 1}
    ).status_code == 200
    assert client.get("/api/mesh", params={"selection": sid}).status_code == 200
    assert client.post(
        "/api/axis-order", json={"order": ["P2", "P1", "P3"]}
    ).status_code == 200
    after = client.get(
        "/api/sensitivity-view", params={"m": 2, "count": 200}
    ).json()
    assert [h["name"] for h in after["horizon"]] == ["P2", "P1"]
    record_criterion(9, "generate -> sensitivity -> sfc -> evaluate -> serve")
