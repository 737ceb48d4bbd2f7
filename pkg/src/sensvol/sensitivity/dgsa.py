"""Distance-based generalized sensitivity analysis.

Per voxel: cluster the output values with optimal 1D natural breaks (cluster
count picked by silhouette), drop clusters below a minimum size, compare each
surviving cluster's per-parameter sample CDF against the full-sample CDF, and
normalize those distances by a resampled significance threshold. The reported
value per parameter is the mean normalized distance over surviving clusters;
values above 1 indicate sensitivity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ensemble import Ensemble
from ..errors import DegenerateData, EmptyCluster, InvalidK
from .fields import FLAG_INERT, SensitivityFieldSet
from ._kernels import (
    bootstrap_distances,
    breaks_bounds,
    breaks_tables,
    cdf_distance_ranks,
    dgsa_phase1,
    select_k,
)

_VOXEL_CHUNK = 2048
_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class DgsaConfig:
    k_min: int = 3
    k_max: int = 10
    min_cluster_size: int = 10
    bootstrap_b: int = 1000
    quantile: float = 0.99
    seed: int = 0
    rank_space: bool = False  # compare CDFs of parameter ranks instead of values

    def __post_init__(self):
        if not 2 <= self.k_min <= self.k_max:
            raise ValueError("need 2 <= k_min <= k_max")
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        if not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must be in (0, 1)")


# ---------------------------------------------------------------------------
# Clustering primitives
# ---------------------------------------------------------------------------

def natural_breaks(values: np.ndarray, k: int) -> np.ndarray:
    """Optimal contiguous partition of sorted values into k clusters.

    Minimizes the within-cluster sum of squared deviations exactly; returns
    one label (0..k-1) per value, non-decreasing.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("values must be a non-empty 1D array")
    if np.any(np.diff(values) < 0):
        raise ValueError("values must be sorted ascending")
    distinct = 1 + int(np.count_nonzero(np.diff(values)))
    if not 2 <= k <= distinct:
        raise InvalidK(f"k={k} outside [2, {distinct}] for {distinct} distinct values")
    _cost, split = breaks_tables(values, k)
    bounds = breaks_bounds(split, k, values.size)
    labels = np.empty(values.size, dtype=np.int32)
    for c in range(k):
        labels[bounds[c] : bounds[c + 1]] = c
    return labels


def select_k_silhouette(
    values: np.ndarray, k_min: int = 3, k_max: int = 10
) -> tuple[int, np.ndarray]:
    """Cluster count with the highest mean silhouette; ties take the smaller k.

    k_max is clamped to one below the number of distinct values; if no k in
    range remains the data cannot be clustered and DegenerateData is raised.
    """
    values = np.asarray(values, dtype=np.float64)
    if np.any(np.diff(values) < 0):
        raise ValueError("values must be sorted ascending")
    if not 2 <= k_min <= k_max:
        raise ValueError("need 2 <= k_min <= k_max")
    k, bounds = select_k(values, k_min, k_max)
    if k == 0:
        raise DegenerateData(
            f"need more than {k_min} distinct values to cluster"
        )
    labels = np.empty(values.size, dtype=np.int32)
    for c in range(k):
        labels[bounds[c] : bounds[c + 1]] = c
    return k, labels


# ---------------------------------------------------------------------------
# CDF distance and bootstrap threshold
# ---------------------------------------------------------------------------

def cdf_distance(
    cluster_values: np.ndarray,
    all_values: np.ndarray,
    p_min: float,
    p_max: float,
) -> float:
    """Exact L1 distance between the cluster's and the full sample's step
    CDFs, integrated over [p_min, p_max] by an event sweep."""
    cluster_values = np.asarray(cluster_values, dtype=np.float64)
    all_values = np.asarray(all_values, dtype=np.float64)
    if cluster_values.size == 0:
        raise EmptyCluster("cluster holds no samples")
    xs = np.sort(all_values)
    xs = np.clip(xs, p_min, p_max)
    cs = np.sort(cluster_values)
    R = xs.size
    c_le = np.searchsorted(cs, xs[:-1], side="right")
    F_all = np.arange(1, R) / R
    F_c = c_le / cs.size
    return float(np.sum(np.diff(xs) * np.abs(F_all - F_c)))


def _draw_key(seed: int, cluster_size: int, n_runs: int) -> int:
    # deliberately independent of the parameter's position so that permuting
    # parameter columns permutes results exactly
    key = (seed & _U64) ^ 0x5DEECE66D
    for part in (cluster_size, n_runs):
        key = ((key * 6364136223846793005) + part + 1442695040888963407) & _U64
    return key


def bootstrap_threshold(
    param_values: np.ndarray,
    cluster_size: int,
    n_draws: int = 1000,
    quantile: float = 0.99,
    seed: int = 0,
) -> float:
    """Significance threshold: the given quantile of CDF distances of random
    same-size subsets drawn without replacement from the full sample."""
    param_values = np.asarray(param_values, dtype=np.float64)
    R = param_values.size
    if not 1 <= cluster_size <= R:
        raise ValueError(f"cluster_size {cluster_size} outside [1, {R}]")
    if cluster_size == R:
        return 0.0
    gaps = np.diff(np.sort(param_values)).reshape(1, -1)
    key = np.uint64(_draw_key(seed, cluster_size, R))
    dists = bootstrap_distances(gaps, R, cluster_size, n_draws, key)
    return float(np.quantile(dists[0], quantile))


class BootstrapThresholds:
    """Memoized thresholds, keyed by (param index, cluster size, run count).

    Values depend only on the key and the seed, so the cache is transparent:
    with caching disabled every lookup recomputes the identical number.
    """

    def __init__(self, samples: np.ndarray, cfg: DgsaConfig, enabled: bool = True):
        samples = np.asarray(samples, dtype=np.float64)
        if cfg.rank_space:
            samples = _to_ranks(samples)
        self._gaps = np.stack(
            [np.diff(np.sort(samples[:, i])) for i in range(samples.shape[1])]
        )
        self._n_runs = samples.shape[0]
        self._cfg = cfg
        self._cache: dict[tuple[int, int, int], float] = {}
        self.enabled = enabled
        self.hits = 0
        self.misses = 0

    def threshold(self, param_index: int, cluster_size: int) -> float:
        key = (param_index, cluster_size, self._n_runs)
        if self.enabled and key in self._cache:
            self.hits += 1
            return self._cache[key]
        self.misses += 1
        if cluster_size >= self._n_runs:
            return self._store(key, 0.0)
        cfg = self._cfg
        mix = np.uint64(_draw_key(cfg.seed, cluster_size, self._n_runs))
        # the draws are shared across parameters: one pass fills every
        # parameter's threshold for this cluster size
        dists = bootstrap_distances(
            self._gaps, self._n_runs, cluster_size, cfg.bootstrap_b, mix
        )
        value = 0.0
        for i in range(self._gaps.shape[0]):
            v = float(np.quantile(dists[i], cfg.quantile))
            if i == param_index:
                value = v
            if self.enabled:
                self._cache[(i, cluster_size, self._n_runs)] = v
        return value

    def _store(self, key, value: float) -> float:
        if self.enabled:
            self._cache[key] = value
        return value


# ---------------------------------------------------------------------------
# Voxel and volume operations
# ---------------------------------------------------------------------------

def _to_ranks(P: np.ndarray) -> np.ndarray:
    out = np.empty_like(P)
    R = P.shape[0]
    for i in range(P.shape[1]):
        order = np.argsort(P[:, i], kind="stable")
        ranks = np.empty(R, dtype=np.float64)
        ranks[order] = (np.arange(R) + 0.5) / R
        out[:, i] = ranks
    return out


def _param_tables(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-parameter ranks of each run and gaps between sorted values."""
    R, n = P.shape
    ranks = np.empty((n, R), dtype=np.int64)
    gaps = np.empty((n, R - 1))
    for i in range(n):
        order = np.argsort(P[:, i], kind="stable")
        inv = np.empty(R, dtype=np.int64)
        inv[order] = np.arange(R)
        ranks[i] = inv
        gaps[i] = np.diff(P[order, i])
    return ranks, gaps


def _normalize(sizes, dists, inert, thresholds: BootstrapThresholds,
               min_cluster: int) -> tuple[np.ndarray, np.ndarray]:
    B, kmax, n = dists.shape
    out = np.zeros((B, n))
    inert_out = inert.astype(bool).copy()
    surv = sizes >= min_cluster
    surv[inert_out] = False
    if surv.any():
        uniq = np.unique(sizes[surv])
        T = np.empty((uniq.size, n))
        for ui, size in enumerate(uniq):
            for i in range(n):
                T[ui, i] = thresholds.threshold(i, int(size))
        T = np.where(T > 0.0, T, np.inf)  # zero threshold implies zero distance
        idx = np.clip(np.searchsorted(uniq, sizes), 0, uniq.size - 1)
        ratios = np.where(surv[:, :, None], dists / T[idx], 0.0)
        counts = surv.sum(axis=1)
        has = counts > 0
        out[has] = ratios[has].sum(axis=1) / counts[has, None]
        inert_out |= ~has
    else:
        inert_out[:] = True
    return out, inert_out


def dgsa_voxel(
    Y: np.ndarray,
    P: np.ndarray,
    cfg: DgsaConfig = DgsaConfig(),
    thresholds: BootstrapThresholds | None = None,
) -> tuple[np.ndarray, bool]:
    """Mean normalized cluster distance per parameter for one voxel.

    Returns (values, inert). Degenerate voxels (too few distinct outputs, or
    no cluster of the minimum size) give zeros with inert=True.
    """
    Y = np.asarray(Y, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != Y.shape[0]:
        raise ValueError("P must be (R, n) matching Y")
    if not np.all(np.isfinite(Y)):
        raise ValueError("Y must be finite")
    Pd = _to_ranks(P) if cfg.rank_space else P
    ranks, gaps = _param_tables(Pd)
    sizes, dists, inert = dgsa_phase1(
        Y[None, :], ranks, gaps, cfg.k_min, cfg.k_max, cfg.min_cluster_size
    )
    if thresholds is None:
        thresholds = BootstrapThresholds(P, cfg)
    out, inert_out = _normalize(sizes, dists, inert, thresholds, cfg.min_cluster_size)
    return out[0], bool(inert_out[0])


def dgsa_volume(
    ens: Ensemble,
    cfg: DgsaConfig = DgsaConfig(),
    use_cache: bool = True,
    thresholds: BootstrapThresholds | None = None,
) -> SensitivityFieldSet:
    """Per-voxel map of dgsa_voxel with a volume-wide threshold cache."""
    V = ens.voxel_count
    n = ens.pspace.n_params
    P = ens.pspace.samples
    Pd = _to_ranks(P) if cfg.rank_space else P
    ranks, gaps = _param_tables(Pd)
    if thresholds is None:
        thresholds = BootstrapThresholds(P, cfg, enabled=use_cache)

    fields = np.zeros((n, V))
    flags = np.zeros(V, dtype=np.uint8)
    for lo in range(0, V, _VOXEL_CHUNK):
        hi = min(lo + _VOXEL_CHUNK, V)
        Ys = np.ascontiguousarray(ens.volumes[:, lo:hi].T.astype(np.float64))
        sizes, dists, inert = dgsa_phase1(
            Ys, ranks, gaps, cfg.k_min, cfg.k_max, cfg.min_cluster_size
        )
        out, inert_out = _normalize(
            sizes, dists, inert, thresholds, cfg.min_cluster_size
        )
        fields[:, lo:hi] = out.T
        flags[lo:hi] |= inert_out.astype(np.uint8) * FLAG_INERT

    return SensitivityFieldSet(
        measure="dgsa",
        dims=ens.dims,
        param_names=ens.pspace.names,
        fields=fields,
        flags=flags,
    )
