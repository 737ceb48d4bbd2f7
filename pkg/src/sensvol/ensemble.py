"""Ensemble data model: grids, parameter samples, volumes, file I/O.

Volumes are stored as float32 (the on-disk format) and widened to float64
wherever values enter a computation. Voxel linear index is x-fastest:
``idx = x + nx * (y + ny * z)``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .errors import (
    IndexOutOfBounds,
    InvalidBaseN,
    MalformedManifest,
    MissingFile,
    ParamOutOfRange,
    RangeViolation,
    SizeMismatch,
    WrongParamCount,
)

MANIFEST_NAME = "ensemble.json"


@dataclass(frozen=True)
class GridDims:
    """Voxel counts per axis; nz=1 gives a 2D grid."""

    nx: int
    ny: int
    nz: int = 1

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError(f"grid dims must all be >= 1, got {self}")

    @property
    def voxel_count(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def is_2d(self) -> bool:
        return self.nz == 1

    def linear_index(self, x: int, y: int, z: int = 0) -> int:
        return x + self.nx * (y + self.ny * z)

    def unravel(self, idx):
        """Linear index (scalar or array) -> (x, y, z)."""
        idx = np.asarray(idx)
        x = idx % self.nx
        y = (idx // self.nx) % self.ny
        z = idx // (self.nx * self.ny)
        return x, y, z

    def coord_arrays(self):
        """float64 arrays (V,) with the x, y, z lattice position of every voxel."""
        idx = np.arange(self.voxel_count)
        x, y, z = self.unravel(idx)
        return x.astype(np.float64), y.astype(np.float64), z.astype(np.float64)

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)


@dataclass(frozen=True)
class Parameter:
    name: str
    low: float
    high: float

    def __post_init__(self):
        if not self.high >= self.low:
            raise ValueError(f"parameter {self.name}: high < low")


@dataclass(frozen=True)
class SamplingInfo:
    """How the parameter-space rows were produced."""

    scheme: str  # "saltelli" or "random"
    base_n: int = 0
    seed: int = 0

    @property
    def is_saltelli(self) -> bool:
        return self.scheme == "saltelli"


@dataclass(frozen=True)
class ParameterSpace:
    params: tuple[Parameter, ...]
    samples: np.ndarray  # (R, n) float64
    sampling: SamplingInfo | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "params", tuple(self.params))
        if samples.ndim != 2 or samples.shape[1] != len(self.params):
            raise ValueError("samples must be (R, n) with one column per parameter")
        if samples.shape[0] < 1 or len(self.params) < 1:
            raise ValueError("need at least one run and one parameter")
        for i, p in enumerate(self.params):
            col = samples[:, i]
            if col.min() < p.low or col.max() > p.high:
                raise RangeViolation(
                    f"parameter {p.name}: sample outside [{p.low}, {p.high}]"
                )

    @property
    def n_params(self) -> int:
        return len(self.params)

    @property
    def n_runs(self) -> int:
        return self.samples.shape[0]

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]


@dataclass
class Ensemble:
    dims: GridDims
    pspace: ParameterSpace
    volumes: np.ndarray  # (R, V) float32
    aux: dict[str, np.ndarray] = field(default_factory=dict)
    name: str = "ensemble"

    def __post_init__(self):
        self.volumes = np.asarray(self.volumes, dtype=np.float32)
        V = self.dims.voxel_count
        if self.volumes.shape != (self.pspace.n_runs, V):
            raise ValueError(
                f"volumes shape {self.volumes.shape} does not match "
                f"{self.pspace.n_runs} runs x {V} voxels"
            )
        for aname, arr in self.aux.items():
            arr = np.asarray(arr, dtype=np.float32)
            if arr.shape != (V,):
                raise ValueError(f"aux field {aname} must have {V} values")
            self.aux[aname] = arr

    @property
    def n_runs(self) -> int:
        return self.pspace.n_runs

    @property
    def voxel_count(self) -> int:
        return self.dims.voxel_count

    @property
    def sampling(self) -> SamplingInfo | None:
        return self.pspace.sampling


def voxel_series(ens: Ensemble, linear_index: int) -> np.ndarray:
    """Output value of every run at one voxel, as float64, in run order."""
    if not 0 <= linear_index < ens.voxel_count:
        raise IndexOutOfBounds(
            f"voxel index {linear_index} outside [0, {ens.voxel_count})"
        )
    return ens.volumes[:, linear_index].astype(np.float64)


# ---------------------------------------------------------------------------
# Parameter sampling
# ---------------------------------------------------------------------------

def saltelli_sample(
    params: Sequence[Parameter | tuple],
    base_n: int,
    seed: int = 0,
) -> ParameterSpace:
    """Structured A/B/AB_i sample design for first-order variance attribution.

    Produces ``base_n * (n + 2)`` rows: the A block, the B block, then one
    AB_i block per parameter where AB_i equals A with column i taken from B.
    The base points come from a scrambled Sobol' sequence in 2n dimensions,
    deterministically seeded.
    """
    params = tuple(p if isinstance(p, Parameter) else Parameter(*p) for p in params)
    n = len(params)
    if n < 1:
        raise WrongParamCount("need at least one parameter")
    if base_n < 2:
        raise InvalidBaseN(f"base_n must be >= 2, got {base_n}")

    eng = qmc.Sobol(d=2 * n, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # balance warning for non power-of-two base_n is expected here
        warnings.simplefilter("ignore", UserWarning)
        pts = eng.random(base_n)
    A, B = pts[:, :n], pts[:, n:]
    blocks = [A, B]
    for i in range(n):
        ABi = A.copy()
        ABi[:, i] = B[:, i]
        blocks.append(ABi)
    unit = np.vstack(blocks)

    lows = np.array([p.low for p in params])
    highs = np.array([p.high for p in params])
    samples = lows + unit * (highs - lows)
    return ParameterSpace(
        params, samples, sampling=SamplingInfo("saltelli", base_n=base_n, seed=seed)
    )


def random_sample(
    params: Sequence[Parameter | tuple],
    n_runs: int,
    seed: int = 0,
) -> ParameterSpace:
    """Plain uniform random sample over the parameter box."""
    params = tuple(p if isinstance(p, Parameter) else Parameter(*p) for p in params)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    unit = rng.random((n_runs, len(params)))
    lows = np.array([p.low for p in params])
    highs = np.array([p.high for p in params])
    samples = lows + unit * (highs - lows)
    return ParameterSpace(params, samples, sampling=SamplingInfo("random", seed=seed))


# ---------------------------------------------------------------------------
# Synthetic ensemble
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticConfig:
    dims: GridDims = GridDims(32, 32, 32)
    run_count: int = 4096
    noise_max: float = 0.01  # 0 disables noise
    seed: int = 0

    def __post_init__(self):
        if self.noise_max < 0:
            raise ValueError("noise_max must be >= 0")
        if self.run_count < 1:
            raise ValueError("run_count must be >= 1")


SYNTHETIC_PARAMS = (
    Parameter("P1", 0.0, 1.0),
    Parameter("P2", 0.0, 1.0),
    Parameter("P3", 0.0, 1.0),
)

_KERNEL_SIGMA = 3.0


def _gauss(sq_dist: np.ndarray, sigma: float = _KERNEL_SIGMA) -> np.ndarray:
    return np.exp(-sq_dist / (2.0 * sigma * sigma))


def synthetic_field(dims: GridDims, p1: float, p2: float, p3: float) -> np.ndarray:
    """Noiseless synthetic output for one run, in float64.

    Two peak-one Gaussian kernels scaled by P1 and P1*P2 at fixed centers,
    plus one unscaled kernel whose z-center moves with P2. P3 is unused.
    """
    xs, ys, zs = dims.coord_arrays()
    k1 = _gauss((xs - 7) ** 2 + (ys - 7) ** 2 + (zs - 7) ** 2)
    k2 = _gauss((xs - 10) ** 2 + (ys - 25) ** 2 + (zs - 15) ** 2)
    cz = 5.0 + 20.0 * p2
    k3 = _gauss((xs - 20) ** 2 + (ys - 20) ** 2 + (zs - cz) ** 2)
    return p1 * k1 + (p1 * p2) * k2 + k3


def generate_synthetic(cfg: SyntheticConfig, samples: ParameterSpace) -> Ensemble:
    """Evaluate the synthetic model for every sample row.

    Noise is uniform on [0, noise_max], drawn from one counter-based stream
    per run (keyed by (seed, run)), so generation order does not matter.
    """
    if samples.n_params != 3:
        raise WrongParamCount(
            f"synthetic model takes exactly 3 parameters, got {samples.n_params}"
        )
    for p in samples.params:
        if p.low < 0.0 or p.high > 1.0:
            raise ParamOutOfRange(f"parameter {p.name} range must lie inside [0, 1]")

    dims = cfg.dims
    V = dims.voxel_count
    xs, ys, zs = dims.coord_arrays()
    k1 = _gauss((xs - 7) ** 2 + (ys - 7) ** 2 + (zs - 7) ** 2)
    k2 = _gauss((xs - 10) ** 2 + (ys - 25) ** 2 + (zs - 15) ** 2)
    k3_xy = _gauss((xs - 20) ** 2 + (ys - 20) ** 2)

    R = samples.n_runs
    vols = np.empty((R, V), dtype=np.float32)
    for r in range(R):
        p1, p2 = samples.samples[r, 0], samples.samples[r, 1]
        cz = 5.0 + 20.0 * p2
        g = p1 * k1 + (p1 * p2) * k2 + k3_xy * _gauss((zs - cz) ** 2)
        if cfg.noise_max > 0:
            rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence((cfg.seed, r)))
            )
            g = g + rng.uniform(0.0, cfg.noise_max, V)
        vols[r] = g.astype(np.float32)

    return Ensemble(dims=dims, pspace=samples, volumes=vols, name="synthetic")


# ---------------------------------------------------------------------------
# Manifest I/O
# ---------------------------------------------------------------------------

def write_ensemble(ens: Ensemble, out_dir: str | Path) -> Path:
    """Write manifest plus raw little-endian float32 volume files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    for r in range(ens.n_runs):
        fname = f"run_{r:04d}.raw"
        ens.volumes[r].astype("<f4").tofile(out / fname)
        runs.append({"params": [float(v) for v in ens.pspace.samples[r]], "file": fname})
    aux_entries = []
    for aname, arr in ens.aux.items():
        fname = f"aux_{aname}.raw"
        arr.astype("<f4").tofile(out / fname)
        aux_entries.append({"name": aname, "file": fname})
    manifest = {
        "name": ens.name,
        "dims": list(ens.dims.as_tuple()),
        "dtype": "float32",
        "order": "x-fastest",
        "parameters": [
            {"name": p.name, "min": p.low, "max": p.high} for p in ens.pspace.params
        ],
        "runs": runs,
        "aux": aux_entries,
    }
    if ens.sampling is not None:
        manifest["sampling"] = {
            "scheme": ens.sampling.scheme,
            "base_n": ens.sampling.base_n,
            "seed": ens.sampling.seed,
        }
    path = out / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2))
    return path


def _read_raw(path: Path, count: int) -> np.ndarray:
    if not path.is_file():
        raise MissingFile(str(path))
    size = path.stat().st_size
    if size != count * 4:
        raise SizeMismatch(f"{path}: {size} bytes, expected {count * 4}")
    return np.fromfile(path, dtype="<f4")


def load_ensemble(manifest_path: str | Path) -> Ensemble:
    """Load an ensemble from its manifest, validating sizes and ranges."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / MANIFEST_NAME
    if not manifest_path.is_file():
        raise MissingFile(str(manifest_path))
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as e:
        raise MalformedManifest(f"{manifest_path}: {e}") from e

    try:
        dims_list = doc["dims"]
        dtype = doc["dtype"]
        order = doc["order"]
        param_docs = doc["parameters"]
        run_docs = doc["runs"]
    except (KeyError, TypeError) as e:
        raise MalformedManifest(f"{manifest_path}: missing key {e}") from e
    if dtype != "float32":
        raise MalformedManifest(f"unsupported dtype {dtype!r}")
    if order != "x-fastest":
        raise MalformedManifest(f"unsupported order {order!r}")
    if len(dims_list) != 3 or any(int(d) < 1 for d in dims_list):
        raise MalformedManifest(f"bad dims {dims_list}")
    dims = GridDims(*(int(d) for d in dims_list))
    if not run_docs:
        raise MalformedManifest("manifest lists no runs")

    params = tuple(
        Parameter(str(p["name"]), float(p["min"]), float(p["max"])) for p in param_docs
    )
    n = len(params)
    samples = np.empty((len(run_docs), n))
    base = manifest_path.parent
    V = dims.voxel_count
    vols = np.empty((len(run_docs), V), dtype=np.float32)
    for r, rd in enumerate(run_docs):
        vals = rd.get("params")
        if vals is None or len(vals) != n:
            raise MalformedManifest(f"run {r}: expected {n} parameter values")
        samples[r] = vals
        vols[r] = _read_raw(base / rd["file"], V)

    sampling = None
    if "sampling" in doc:
        sd = doc["sampling"]
        sampling = SamplingInfo(
            scheme=str(sd.get("scheme", "")),
            base_n=int(sd.get("base_n", 0)),
            seed=int(sd.get("seed", 0)),
        )
    pspace = ParameterSpace(params, samples, sampling=sampling)

    aux = {}
    for ad in doc.get("aux", []):
        aux[str(ad["name"])] = _read_raw(base / ad["file"], V)

    return Ensemble(
        dims=dims,
        pspace=pspace,
        volumes=vols,
        aux=aux,
        name=str(doc.get("name", "ensemble")),
    )
