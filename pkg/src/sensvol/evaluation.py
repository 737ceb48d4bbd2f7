"""Quality metrics: autocorrelation-based coherency, convergence, timing."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .ensemble import Ensemble
from .errors import DimsMismatch, GridMismatch, SeriesTooShort
from .sensitivity.fields import SensitivityFieldSet
from .sfc.curve import SfcCurve

DEFAULT_MAX_LAG = 100


def autocorrelation(series: np.ndarray, max_lag: int = DEFAULT_MAX_LAG):
    """ACF over lags 1..max_lag plus its mean as a scalar summary.

    ACF(l) = sum((x_i - mu)(x_{i+l} - mu)) / ((len - l) * var), clamped to
    [-1, 1]; a constant series is defined as perfectly coherent (ACF = 1).
    """
    series = np.asarray(series, dtype=np.float64)
    n = series.size
    if max_lag < 1 or n <= max_lag:
        raise SeriesTooShort(f"need series length > max_lag >= 1, got {n}, {max_lag}")
    mu = series.mean()
    dev = series - mu
    var = np.mean(dev * dev)
    if var == 0.0:
        acf = np.ones(max_lag)
        return acf, 1.0
    acf = np.empty(max_lag)
    for lag in range(1, max_lag + 1):
        acf[lag - 1] = np.dot(dev[:-lag], dev[lag:]) / ((n - lag) * var)
    acf = np.clip(acf, -1.0, 1.0)
    return acf, float(acf.mean())


@dataclass
class CoherencyReport:
    value_coherency: float
    positional_coherency: float
    max_lag: int
    per_field_acf: dict[str, np.ndarray] = field(default_factory=dict)
    per_field_summary: dict[str, float] = field(default_factory=dict)


def value_coherency(
    curve: SfcCurve,
    fields: SensitivityFieldSet,
    max_lag: int = DEFAULT_MAX_LAG,
    keep_acf: bool = False,
) -> CoherencyReport | float:
    """Mean ACF summary of every field linearized along the curve."""
    if curve.dims != fields.dims:
        raise DimsMismatch(
            f"curve grid {curve.dims} does not match fields grid {fields.dims}"
        )
    summaries = {}
    acfs = {}
    for i, name in enumerate(fields.param_names):
        acf, summary = autocorrelation(fields.fields[i][curve.order], max_lag)
        summaries[name] = summary
        if keep_acf:
            acfs[name] = acf
    mean = float(np.mean(list(summaries.values())))
    if keep_acf:
        return CoherencyReport(mean, float("nan"), max_lag, acfs, summaries)
    return mean


def positional_coherency(
    curve: SfcCurve,
    ref_point: Sequence[float] = (0.0, 0.0, 0.0),
    max_lag: int = DEFAULT_MAX_LAG,
) -> float:
    """ACF summary of radial distance to the reference point along the curve."""
    pos = curve.positions()
    t = np.linalg.norm(pos - np.asarray(ref_point, dtype=np.float64), axis=1)
    _acf, summary = autocorrelation(t, max_lag)
    return summary


def coherency_report(
    curve: SfcCurve,
    fields: SensitivityFieldSet,
    ref_point: Sequence[float] = (0.0, 0.0, 0.0),
    max_lag: int = DEFAULT_MAX_LAG,
) -> CoherencyReport:
    rep = value_coherency(curve, fields, max_lag, keep_acf=True)
    rep.positional_coherency = positional_coherency(curve, ref_point, max_lag)
    return rep


@dataclass
class ConvergenceStep:
    run_count: int
    prev_run_count: int
    mean_abs_diff: float
    min_abs_diff: float
    max_abs_diff: float


@dataclass
class ConvergenceReport:
    measure: str
    steps: list[ConvergenceStep]

    @property
    def run_counts(self) -> list[int]:
        return [s.run_count for s in self.steps]


def convergence_study(
    field_sets: Sequence[SensitivityFieldSet],
    run_counts: Sequence[int],
    measure: str | None = None,
) -> ConvergenceReport:
    """Per-voxel absolute change between consecutive field sets.

    Differences pool every parameter's field; each step compares a field set
    against its predecessor in the (increasing run count) sequence.
    """
    if len(field_sets) < 2:
        raise ValueError("need at least two field sets")
    if len(field_sets) != len(run_counts):
        raise ValueError("one run count per field set required")
    measure = measure or field_sets[0].measure
    steps = []
    for prev, cur, r_prev, r_cur in zip(
        field_sets, field_sets[1:], run_counts, run_counts[1:]
    ):
        if prev.dims != cur.dims or prev.param_names != cur.param_names:
            raise GridMismatch("field sets differ in grid or parameters")
        diff = np.abs(cur.fields - prev.fields)
        steps.append(
            ConvergenceStep(
                run_count=int(r_cur),
                prev_run_count=int(r_prev),
                mean_abs_diff=float(diff.mean()),
                min_abs_diff=float(diff.min()),
                max_abs_diff=float(diff.max()),
            )
        )
    return ConvergenceReport(measure=measure, steps=steps)


def convergence_from_ensembles(
    ensembles: Sequence[Ensemble],
    compute: Callable[[Ensemble], SensitivityFieldSet],
    measure: str | None = None,
) -> ConvergenceReport:
    if len(ensembles) < 2:
        raise ValueError("need at least two ensembles")
    dims = ensembles[0].dims
    names = ensembles[0].pspace.names
    for e in ensembles[1:]:
        if e.dims != dims or e.pspace.names != names:
            raise GridMismatch("ensembles differ in grid or parameters")
    field_sets = [compute(e) for e in ensembles]
    return convergence_study(field_sets, [e.n_runs for e in ensembles], measure)


@dataclass
class TimingRow:
    measure: str
    run_count: int
    voxel_count: int
    seconds: float


def timing_harness(
    ensembles: Sequence[Ensemble],
    measures: dict[str, Callable[[Ensemble], SensitivityFieldSet]],
) -> list[TimingRow]:
    """Wall-clock time of each measure on each ensemble (informational)."""
    rows = []
    for name, compute in measures.items():
        for ens in ensembles:
            t0 = time.perf_counter()
            compute(ens)
            rows.append(
                TimingRow(
                    measure=name,
                    run_count=ens.n_runs,
                    voxel_count=ens.voxel_count,
                    seconds=time.perf_counter() - t0,
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------

def write_report(
    path: str | Path,
    coherency: dict[str, CoherencyReport] | None = None,
    convergence: ConvergenceReport | None = None,
    timings: list[TimingRow] | None = None,
) -> Path:
    doc: dict = {"schemaVersion": 1}
    if coherency:
        doc["coherency"] = {
            label: {
                "valueCoherency": rep.value_coherency,
                "positionalCoherency": rep.positional_coherency,
                "maxLag": rep.max_lag,
                "perField": rep.per_field_summary,
            }
            for label, rep in coherency.items()
        }
    if convergence:
        doc["convergence"] = {
            "measure": convergence.measure,
            "steps": [
                {
                    "runCount": s.run_count,
                    "prevRunCount": s.prev_run_count,
                    "meanAbsDiff": s.mean_abs_diff,
                    "minAbsDiff": s.min_abs_diff,
                    "maxAbsDiff": s.max_abs_diff,
                }
                for s in convergence.steps
            ],
        }
    if timings:
        doc["timings"] = [
            {
                "measure": t.measure,
                "runCount": t.run_count,
                "voxelCount": t.voxel_count,
                "seconds": t.seconds,
            }
            for t in timings
        ]
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2))
    return path


def write_coherency_csv(path: str | Path, reports: dict[str, CoherencyReport]) -> Path:
    """One row per (curve label, field, lag)."""
    lines = ["curve,field,lag,acf"]
    for label, rep in reports.items():
        for fname, acf in rep.per_field_acf.items():
            for lag, v in enumerate(acf, start=1):
                lines.append(f"{label},{fname},{lag},{v}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
