"""HTTP service for the explorer UI.

Serves precomputed view data only: the dataset directory must already hold
sensitivity field sets and a curve (the preprocessing CLI produces them).
Request handlers never run measure or curve computation, only the view-data
transforms.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import viewdata
from .ensemble import Ensemble, load_ensemble
from .errors import (
    AllAxesFiltered,
    BadParamIndex,
    EmptySelection,
    SensVolError,
)
from .sensitivity.fields import MEASURES, SensitivityFieldSet, load_field_set
from .sfc.curve import SfcCurve, load_curve

SCHEMA_VERSION = 1
MEASURE_PREFERENCE = ("delta", "sobol", "dgsa")

SENSITIVITY_SUBDIR = "sensitivity"
CURVES_SUBDIR = "curves"


def _magma_table() -> list[list[int]]:
    from matplotlib import colormaps

    ramp = colormaps["magma"](np.linspace(0, 1, 256))[:, :3]
    return (ramp * 255).astype(int).tolist()


class SessionState:
    """Mutable per-process view state (last writer wins)."""

    def __init__(self, n_fields: int):
        self.lock = threading.Lock()
        self.axis_order: Optional[list[str]] = None
        self.m = n_fields
        self.subsample_seed = 0
        self.subsample_count = viewdata.DEFAULT_SUBSAMPLE
        self.selections: dict[str, viewdata.Selection] = {}
        self._next_id = 1

    def store_selection(self, sel: viewdata.Selection) -> str:
        with self.lock:
            sid = str(self._next_id)
            self._next_id += 1
            self.selections[sid] = sel
            return sid


class Dataset:
    def __init__(self, ensemble, fields_by_measure, curve, curve_file):
        self.ensemble: Ensemble = ensemble
        self.fields_by_measure: dict[str, SensitivityFieldSet] = fields_by_measure
        self.curve: SfcCurve = curve
        self.curve_file: str = curve_file


def load_dataset(
    data_dir: str | Path,
    measure: str | None = None,
    curve_file: str | Path | None = None,
) -> tuple[Optional[Dataset], str]:
    """Load ensemble, field sets, and curve. Returns (dataset, problem);
    dataset is None when preprocessing artifacts are missing."""
    data_dir = Path(data_dir)
    try:
        ens = load_ensemble(data_dir)
    except SensVolError as e:
        return None, f"ensemble not loadable: {e}"

    fields = {}
    sens_root = data_dir / SENSITIVITY_SUBDIR
    for m in MEASURES:
        d = sens_root / m
        if (d / "sensitivity.json").is_file():
            fields[m] = load_field_set(d)
    if not fields:
        return None, "no sensitivity field sets found (run the sensitivity command)"
    if measure is None:
        measure = next(m for m in MEASURE_PREFERENCE if m in fields)
    elif measure not in fields:
        return None, f"measure {measure!r} not preprocessed"

    if curve_file is None:
        curve_dir = data_dir / CURVES_SUBDIR
        candidates = sorted(curve_dir.glob("*.sfc")) if curve_dir.is_dir() else []
        preferred = [c for c in candidates if c.name.startswith("datadriven")]
        if preferred:
            curve_file = preferred[0]
        elif candidates:
            curve_file = candidates[0]
        else:
            return None, "no curve file found (run the sfc command)"
    try:
        curve = load_curve(curve_file)
    except SensVolError as e:
        return None, f"curve not loadable: {e}"
    if curve.dims != ens.dims:
        return None, "curve grid does not match the ensemble grid"

    ordered = {measure: fields[measure]}
    ordered.update({m: f for m, f in fields.items() if m != measure})
    return Dataset(ens, ordered, curve, str(curve_file)), ""


class SelectionBody(BaseModel):
    pcpBrushes: Optional[dict[str, tuple[float, float]]] = None
    sfcIntervals: Optional[list[tuple[int, int]]] = None


class AxisOrderBody(BaseModel):
    order: list[str]


def create_app(
    data_dir: str | Path,
    measure: str | None = None,
    curve_file: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    dataset, problem = load_dataset(data_dir, measure, curve_file)
    app = FastAPI(title="sensvol explorer service")
    app.state.dataset = dataset
    app.state.problem = problem
    if dataset is not None:
        active = next(iter(dataset.fields_by_measure))
        app.state.session = SessionState(dataset.fields_by_measure[active].n_params)
        app.state.active_measure = active

    def guard() -> Optional[JSONResponse]:
        if app.state.dataset is None:
            return JSONResponse(
                status_code=409,
                content={
                    "v": SCHEMA_VERSION,
                    "error": f"dataset not preprocessed: {app.state.problem}",
                },
            )
        return None

    def fields_for(measure_name: str | None) -> SensitivityFieldSet:
        ds: Dataset = app.state.dataset
        name = measure_name or app.state.active_measure
        if name not in ds.fields_by_measure:
            raise BadParamIndex(f"measure {name!r} not available")
        return ds.fields_by_measure[name]

    def sample_indices(seed: int | None, count: int | None) -> np.ndarray:
        ses: SessionState = app.state.session
        with ses.lock:
            if seed is not None:
                ses.subsample_seed = seed
            if count is not None:
                ses.subsample_count = count
            seed = ses.subsample_seed
            count = ses.subsample_count
        ds: Dataset = app.state.dataset
        return viewdata.monte_carlo_subsample(
            ds.ensemble.voxel_count, count, seed=seed
        )

    @app.exception_handler(SensVolError)
    async def _domain_error(request: Request, exc: SensVolError):
        status = 400
        if isinstance(exc, BadParamIndex):
            status = 404
        return JSONResponse(
            status_code=status,
            content={"v": SCHEMA_VERSION, "error": f"{type(exc).__name__}: {exc}"},
        )

    @app.get("/api/meta")
    def meta():
        g = guard()
        if g:
            return g
        ds: Dataset = app.state.dataset
        ses: SessionState = app.state.session
        curve_meta = {
            "kind": ds.curve.kind,
            "file": ds.curve_file,
        }
        if ds.curve.meta is not None:
            curve_meta.update(
                alpha=ds.curve.meta.alpha,
                distance=ds.curve.meta.distance,
                refPoint=list(ds.curve.meta.ref_point),
            )
        return {
            "v": SCHEMA_VERSION,
            "name": ds.ensemble.name,
            "dims": list(ds.ensemble.dims.as_tuple()),
            "voxelCount": ds.ensemble.voxel_count,
            "runCount": ds.ensemble.n_runs,
            "parameters": [
                {"name": p.name, "min": p.low, "max": p.high}
                for p in ds.ensemble.pspace.params
            ],
            "aux": sorted(ds.ensemble.aux),
            "measures": sorted(ds.fields_by_measure),
            "activeMeasure": app.state.active_measure,
            "curve": curve_meta,
            "m": ses.m,
            "subsample": {"seed": ses.subsample_seed, "count": ses.subsample_count},
            "axisOrder": ses.axis_order,
        }

    @app.get("/api/pcp")
    def pcp(
        filterPct: float = 0.0,
        seed: int | None = None,
        count: int | None = None,
        measure: str | None = None,
        selection: str | None = None,
    ):
        g = guard()
        if g:
            return g
        ds: Dataset = app.state.dataset
        ses: SessionState = app.state.session
        fs = fields_for(measure)
        idx = sample_indices(seed, count)
        try:
            payload = viewdata.pcp_payload(
                fs,
                aux=ds.ensemble.aux,
                sample_idx=idx,
                filter_pct=filterPct,
                axis_order=ses.axis_order,
            )
        except AllAxesFiltered as e:
            return JSONResponse(
                status_code=400,
                content={"v": SCHEMA_VERSION, "error": str(e)},
            )
        body = {
            "v": SCHEMA_VERSION,
            "measure": fs.measure,
            "axes": [
                {
                    "name": a.name,
                    "mean": a.mean,
                    "sensitiveFraction": a.sensitive_fraction,
                }
                for a in payload.axes
            ],
            "auxAxes": [
                {"name": a.name, "min": a.low, "max": a.high}
                for a in payload.aux_axes
            ],
            "scale": {"min": payload.scale_min, "max": payload.scale_max},
            "polylines": payload.polylines.tolist(),
            "sampleIndices": payload.sample_indices.tolist(),
        }
        if selection is not None:
            sel = ses.selections.get(selection)
            if sel is None:
                return JSONResponse(
                    status_code=404,
                    content={"v": SCHEMA_VERSION, "error": "unknown selection"},
                )
            mask = np.zeros(ds.ensemble.voxel_count, dtype=bool)
            mask[sel.voxel_indices] = True
            body["selectedMask"] = mask[payload.sample_indices].tolist()
            body["selectionId"] = selection
        return body

    @app.get("/api/sensitivity-view")
    def sensitivity_view_endpoint(
        m: int | None = None,
        seed: int | None = None,
        count: int | None = None,
        measure: str | None = None,
    ):
        g = guard()
        if g:
            return g
        ds: Dataset = app.state.dataset
        ses: SessionState = app.state.session
        fs = fields_for(measure)
        with ses.lock:
            if m is not None:
                if not 0 <= m <= fs.n_params:
                    return JSONResponse(
                        status_code=400,
                        content={"v": SCHEMA_VERSION, "error": f"m outside [0, {fs.n_params}]"},
                    )
                ses.m = m
            m = ses.m
        idx = sample_indices(seed, count)
        payload = viewdata.sensitivity_view(
            fs, ds.curve, sample_idx=idx, m=min(m, fs.n_params),
            axis_order=ses.axis_order,
        )
        return {
            "v": SCHEMA_VERSION,
            "measure": fs.measure,
            "bandWidth": payload.band_width,
            "positions": payload.positions.tolist(),
            "curveLength": ds.ensemble.voxel_count,
            "horizon": [
                {
                    "name": h.name,
                    "fullBands": h.full_bands.tolist(),
                    "topFill": h.top_fill.tolist(),
                }
                for h in payload.horizon
            ],
            "lineFields": payload.line_fields,
            "lineValues": payload.line_values.tolist(),
            "drawOrder": payload.draw_order,
            "colorRamp": payload.color_ramp,
        }

    @app.post("/api/selection")
    def post_selection(body: SelectionBody | None = None):
        g = guard()
        if g:
            return g
        ds: Dataset = app.state.dataset
        ses: SessionState = app.state.session
        fs = ds.fields_by_measure[app.state.active_measure]
        body = body or SelectionBody()
        try:
            sel = viewdata.resolve_selection(
                body.pcpBrushes,
                body.sfcIntervals,
                fs,
                ds.curve,
                aux=ds.ensemble.aux,
            )
        except ValueError as e:
            return JSONResponse(
                status_code=400, content={"v": SCHEMA_VERSION, "error": str(e)}
            )
        sid = ses.store_selection(sel)
        return {"v": SCHEMA_VERSION, "id": sid, "voxelCount": sel.size}

    def _get_selection(sid: str) -> viewdata.Selection | None:
        return app.state.session.selections.get(sid)

    @app.get("/api/heatmap")
    def heatmap(
        param: str,
        selection: str,
        fill: int = 0,
        paramBins: int = viewdata.HEATMAP_PARAM_BINS,
        curveBins: int = viewdata.HEATMAP_CURVE_BINS,
    ):
        g = guard()
        if g:
            return g
        ds: Dataset = app.state.dataset
        sel = _get_selection(selection)
        if sel is None:
            return JSONResponse(
                status_code=404,
                content={"v": SCHEMA_VERSION, "error": "unknown selection"},
            )
        names = ds.ensemble.pspace.names
        if param not in names:
            return JSONResponse(
                status_code=404,
                content={"v": SCHEMA_VERSION, "error": f"unknown parameter {param!r}"},
            )
        try:
            grid = viewdata.heatmap_aggregate(
                ds.ensemble,
                ds.curve,
                sel,
                names.index(param),
                bins=(paramBins, curveBins),
            )
        except EmptySelection as e:
            return JSONResponse(
                status_code=400, content={"v": SCHEMA_VERSION, "error": str(e)}
            )
        if fill:
            grid = viewdata.nn_fill(grid)
        values = [
            [None if grid.empty[p, c] else grid.values[p, c]
             for c in range(grid.values.shape[1])]
            for p in range(grid.values.shape[0])
        ]
        return {
            "v": SCHEMA_VERSION,
            "param": grid.param_name,
            "paramRange": [grid.param_low, grid.param_high],
            "bins": [grid.values.shape[0], grid.values.shape[1]],
            "selectionId": selection,
            "selectionSize": grid.selection_size,
            "values": values,
            "colorMap": {"name": "magma", "rgb": _magma_table()},
        }

    @app.get("/api/mesh")
    def mesh(selection: str, request: Request):
        g = guard()
        if g:
            return g
        ds: Dataset = app.state.dataset
        sel = _get_selection(selection)
        if sel is None:
            return JSONResponse(
                status_code=404,
                content={"v": SCHEMA_VERSION, "error": "unknown selection"},
            )
        m = viewdata.selection_mesh(sel, ds.ensemble.dims)
        accept = request.headers.get("accept", "")
        if "application/octet-stream" in accept:
            return Response(
                content=viewdata.mesh_to_binary(m),
                media_type="application/octet-stream",
                headers={"X-Schema-Version": str(SCHEMA_VERSION)},
            )
        return {
            "v": SCHEMA_VERSION,
            "selectionId": selection,
            "triangleCount": m.triangle_count,
            "vertices": m.vertices.ravel().tolist(),
            "triangles": m.triangles.ravel().tolist(),
        }

    @app.post("/api/axis-order")
    def axis_order(body: AxisOrderBody):
        g = guard()
        if g:
            return g
        fs = app.state.dataset.fields_by_measure[app.state.active_measure]
        unknown = [n for n in body.order if n not in fs.param_names]
        if unknown:
            return JSONResponse(
                status_code=400,
                content={
                    "v": SCHEMA_VERSION,
                    "error": f"unknown axes in order: {unknown}",
                },
            )
        ses: SessionState = app.state.session
        with ses.lock:
            ses.axis_order = list(body.order)
        return {"v": SCHEMA_VERSION, "order": ses.axis_order}

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
