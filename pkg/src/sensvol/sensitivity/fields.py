"""Sensitivity field sets: one scalar volume per parameter, plus flags."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..ensemble import GridDims
from ..errors import MalformedManifest, MissingFile, SizeMismatch

META_NAME = "sensitivity.json"

# per-voxel flag bits
FLAG_INERT = np.uint8(1)  # measure could not rate the voxel (constant output etc.)
FLAG_OUT_OF_RANGE = np.uint8(2)  # estimate fell outside the measure's nominal range

MEASURES = ("sobol", "delta", "dgsa")

# width of the first ("non-sensitive") band per measure, also used as the
# sensitive-voxel threshold by the view layer
BAND_WIDTHS = {"sobol": 0.2, "delta": 0.2, "dgsa": 1.0}


@dataclass
class SensitivityFieldSet:
    measure: str
    dims: GridDims
    param_names: list[str]
    fields: np.ndarray  # (n, V) float64, field i = sensitivity to parameter i
    flags: np.ndarray = None  # (V,) uint8 bitfield

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")
        self.fields = np.asarray(self.fields, dtype=np.float64)
        V = self.dims.voxel_count
        if self.fields.shape != (len(self.param_names), V):
            raise ValueError(
                f"fields shape {self.fields.shape} != ({len(self.param_names)}, {V})"
            )
        if self.flags is None:
            self.flags = np.zeros(V, dtype=np.uint8)
        self.flags = np.asarray(self.flags, dtype=np.uint8)
        if self.flags.shape != (V,):
            raise ValueError("flags must hold one byte per voxel")

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @property
    def band_width(self) -> float:
        return BAND_WIDTHS[self.measure]

    def field(self, name: str) -> np.ndarray:
        return self.fields[self.param_names.index(name)]

    def inert_mask(self) -> np.ndarray:
        return (self.flags & FLAG_INERT) != 0

    def out_of_range_mask(self) -> np.ndarray:
        return (self.flags & FLAG_OUT_OF_RANGE) != 0


def _field_filename(param: str) -> str:
    safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in param)
    return f"sens_{safe}.raw"


def write_field_set(fs: SensitivityFieldSet, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, name in enumerate(fs.param_names):
        fs.fields[i].astype("<f4").tofile(out / _field_filename(name))
    fs.flags.tofile(out / "flags.raw")
    meta = {
        "measure": fs.measure,
        "dims": list(fs.dims.as_tuple()),
        "parameters": list(fs.param_names),
        "flags_file": "flags.raw",
    }
    path = out / META_NAME
    path.write_text(json.dumps(meta, indent=2))
    return path


def load_field_set(path: str | Path) -> SensitivityFieldSet:
    path = Path(path)
    if path.is_dir():
        path = path / META_NAME
    if not path.is_file():
        raise MissingFile(str(path))
    try:
        doc = json.loads(path.read_text())
        measure = doc["measure"]
        dims = GridDims(*(int(d) for d in doc["dims"]))
        names = [str(p) for p in doc["parameters"]]
        flags_file = doc["flags_file"]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise MalformedManifest(f"{path}: {e}") from e
    base = path.parent
    V = dims.voxel_count
    fields = np.empty((len(names), V))
    for i, name in enumerate(names):
        fp = base / _field_filename(name)
        if not fp.is_file():
            raise MissingFile(str(fp))
        if fp.stat().st_size != V * 4:
            raise SizeMismatch(str(fp))
        fields[i] = np.fromfile(fp, dtype="<f4")
    ffp = base / flags_file
    if not ffp.is_file():
        raise MissingFile(str(ffp))
    if ffp.stat().st_size != V:
        raise SizeMismatch(str(ffp))
    flags = np.fromfile(ffp, dtype=np.uint8)
    return SensitivityFieldSet(measure, dims, names, fields, flags)
