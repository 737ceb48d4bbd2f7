"""Numba kernels shared by the per-voxel and volume-level measure paths.

Volume operations call these on many-voxel batches; the single-voxel public
operations call the same code on a batch of one, so both paths produce
bit-identical values.
"""

from __future__ import annotations

import os

# prefer OpenMP before numba initializes; the bundled TBB is too old and
# numba warns loudly when it probes it
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

import numpy as np
from numba import njit, prange

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_KDE_CUTOFF = 8.0  # kernel evaluations beyond cutoff*h contribute < 1.3e-14


# ---------------------------------------------------------------------------
# Gaussian KDE on a fixed grid (sorted input, windowed evaluation)
# ---------------------------------------------------------------------------

@njit(cache=True, fastmath=True)
def _std1(vals):
    m = vals.size
    mean = 0.0
    for v in vals:
        mean += v
    mean /= m
    acc = 0.0
    for v in vals:
        d = v - mean
        acc += d * d
    if m < 2:
        return 0.0
    return np.sqrt(acc / (m - 1))


@njit(cache=True, fastmath=True)
def _kde_sorted(vals, h, ymin, dy, out):
    """Density of sorted samples on the regular grid ymin + i*dy."""
    G = out.size
    m = vals.size
    if h <= 0.0:
        # degenerate spread: put each sample's mass on its nearest grid point
        for gi in range(G):
            out[gi] = 0.0
        for j in range(m):
            gi = int(np.rint((vals[j] - ymin) / dy))
            if gi < 0:
                gi = 0
            elif gi > G - 1:
                gi = G - 1
            out[gi] += 1.0 / (m * dy)
        return
    norm = 1.0 / (m * h * _SQRT_2PI)
    w = _KDE_CUTOFF * h
    lo = 0
    hi = 0
    for gi in range(G):
        g = ymin + dy * gi
        gl = g - w
        gh = g + w
        while lo < m and vals[lo] < gl:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < m and vals[hi] <= gh:
            hi += 1
        acc = 0.0
        for j in range(lo, hi):
            u = (g - vals[j]) / h
            acc += np.exp(-0.5 * u * u)
        out[gi] = acc * norm


@njit(cache=True, fastmath=True, parallel=True)
def delta_batch(Ys, orders, bounds, G):
    """Density-shift sensitivity for a batch of voxels.

    Ys: (B, R) outputs. orders: (n, R) run order sorted by each parameter.
    bounds: (M+1,) equal-frequency slice boundaries. Returns ((B, n) values
    clamped to [0, 1], (B,) inert bytes for constant voxels).
    """
    B, R = Ys.shape
    n = orders.shape[0]
    M = bounds.size - 1
    out = np.zeros((B, n))
    inert = np.zeros(B, dtype=np.uint8)
    for b in prange(B):
        Y = Ys[b]
        ymin = Y[0]
        ymax = Y[0]
        for j in range(1, R):
            v = Y[j]
            if v < ymin:
                ymin = v
            elif v > ymax:
                ymax = v
        if ymax == ymin:
            inert[b] = 1
            continue
        dy = (ymax - ymin) / (G - 1)
        ysort = np.sort(Y)
        hy = _std1(ysort) * R ** (-0.2)
        f_all = np.empty(G)
        _kde_sorted(ysort, hy, ymin, dy, f_all)
        f_slice = np.empty(G)
        buf = np.empty(R)
        for i in range(n):
            acc = 0.0
            for s in range(M):
                lo = bounds[s]
                hi = bounds[s + 1]
                m = hi - lo
                for t in range(m):
                    buf[t] = Y[orders[i, lo + t]]
                sl = np.sort(buf[:m])
                h = _std1(sl) * m ** (-0.2)
                _kde_sorted(sl, h, ymin, dy, f_slice)
                shift = 0.0
                for gi in range(G):
                    d = f_all[gi] - f_slice[gi]
                    shift += d if d >= 0.0 else -d
                acc += (m / R) * shift * dy
            v = 0.5 * acc
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            out[b, i] = v
    return out, inert


# ---------------------------------------------------------------------------
# Optimal 1D contiguous clustering (within-cluster sum of squares)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _sse(S, S2, i, j):
    c = j - i
    s = S[j] - S[i]
    v = (S2[j] - S2[i]) - s * s / c
    return v if v > 0.0 else 0.0


@njit(cache=True)
def _dp_layer(S, S2, prev, cur, splits, k, lo, hi, optlo, opthi):
    # divide-and-conquer over the monotone argmin rows of one DP layer
    if lo >= hi:
        return
    mid = (lo + hi) // 2
    j = mid + 1
    best = np.inf
    bestm = optlo
    mmax = min(opthi, j - 1)
    for m in range(max(optlo, k - 1), mmax + 1):
        c = prev[m] + _sse(S, S2, m, j)
        if c < best:
            best = c
            bestm = m
    cur[j] = best
    splits[j] = bestm
    _dp_layer(S, S2, prev, cur, splits, k, lo, mid, optlo, bestm)
    _dp_layer(S, S2, prev, cur, splits, k, mid + 1, hi, bestm, opthi)


@njit(cache=True)
def breaks_tables(ys, kmax):
    """DP cost and split tables for all cluster counts up to kmax.

    ys must be sorted ascending. cost[k, j] is the optimal within-cluster
    sum of squared deviations for the first j values in k clusters.
    """
    n = ys.size
    S = np.empty(n + 1)
    S2 = np.empty(n + 1)
    S[0] = 0.0
    S2[0] = 0.0
    for i in range(n):
        S[i + 1] = S[i] + ys[i]
        S2[i + 1] = S2[i] + ys[i] * ys[i]
    cost = np.full((kmax + 1, n + 1), np.inf)
    split = np.zeros((kmax + 1, n + 1), dtype=np.int32)
    cost[0, 0] = 0.0
    for j in range(1, n + 1):
        cost[1, j] = _sse(S, S2, 0, j)
    for k in range(2, kmax + 1):
        _dp_layer(S, S2, cost[k - 1], cost[k], split[k], k, k - 1, n, k - 1, n - 1)
    return cost, split


@njit(cache=True)
def breaks_bounds(split, k, n):
    """Cluster boundaries [0, b1, ..., n] for k clusters from the split table."""
    bounds = np.empty(k + 1, dtype=np.int64)
    bounds[k] = n
    j = n
    for kk in range(k, 0, -1):
        j = split[kk, j]
        bounds[kk - 1] = j
    return bounds


@njit(cache=True, fastmath=True)
def silhouette_mean(ys, bounds):
    """Mean silhouette for a contiguous clustering of sorted 1D data.

    Uses absolute distance; members of singleton clusters score 0.
    """
    n = ys.size
    k = bounds.size - 1
    S = np.empty(n + 1)
    S[0] = 0.0
    for i in range(n):
        S[i + 1] = S[i] + ys[i]
    means = np.empty(k)
    for c in range(k):
        means[c] = (S[bounds[c + 1]] - S[bounds[c]]) / (bounds[c + 1] - bounds[c])
    total = 0.0
    for c in range(k):
        lo = bounds[c]
        hi = bounds[c + 1]
        m = hi - lo
        if m == 1:
            continue
        for i in range(lo, hi):
            xi = ys[i]
            a = (
                xi * (i - lo)
                - (S[i] - S[lo])
                + (S[hi] - S[i + 1])
                - xi * (hi - 1 - i)
            ) / (m - 1)
            b = np.inf
            if c > 0:
                b = xi - means[c - 1]
            if c < k - 1:
                b2 = means[c + 1] - xi
                if b2 < b:
                    b = b2
            d = a if a > b else b
            if d > 0.0:
                total += (b - a) / d
    return total / n


@njit(cache=True)
def _count_distinct(ys):
    d = 1
    for i in range(1, ys.size):
        if ys[i] != ys[i - 1]:
            d += 1
    return d


@njit(cache=True)
def select_k(ys, kmin, kmax):
    """Best cluster count by mean silhouette; ties pick the smaller k.

    Returns (k, bounds). k = 0 signals degenerate data (fewer than kmin+1
    distinct values).
    """
    distinct = _count_distinct(ys)
    kmax_eff = min(kmax, distinct - 1)
    if kmax_eff < kmin:
        return 0, np.zeros(1, dtype=np.int64)
    cost, split = breaks_tables(ys, kmax_eff)
    best_k = kmin
    best_s = -2.0
    for k in range(kmin, kmax_eff + 1):
        b = breaks_bounds(split, k, ys.size)
        s = silhouette_mean(ys, b)
        if s > best_s:
            best_s = s
            best_k = k
    return best_k, breaks_bounds(split, best_k, ys.size)


# ---------------------------------------------------------------------------
# Empirical CDF distances between a cluster and the full parameter sample
# ---------------------------------------------------------------------------

@njit(cache=True, fastmath=True)
def cdf_distance_ranks(member_ranks, gaps, R):
    """L1 distance of step CDFs, cluster given as sorted ranks into the
    sorted full sample; gaps[j] = sorted_vals[j+1] - sorted_vals[j]."""
    c = member_ranks.size
    ptr = 0
    D = 0.0
    for j in range(R - 1):
        if ptr < c and member_ranks[ptr] == j:
            ptr += 1
        D += gaps[j] * abs((j + 1) / R - ptr / c)
    return D


@njit(cache=True, parallel=True)
def dgsa_phase1(Ys, ranks, gaps, kmin, kmax, min_cluster):
    """Cluster every voxel and compute raw CDF distances per cluster/parameter.

    Ys: (B, R). ranks: (n, R) rank of each run in that parameter's sorted
    order. gaps: (n, R-1) consecutive differences of each sorted parameter.
    Returns (sizes (B, kmax) int64, dists (B, kmax, n), inert (B,) uint8).
    Entries for clusters below min_cluster keep their size but distance 0.
    """
    B, R = Ys.shape
    n = ranks.shape[0]
    sizes = np.zeros((B, kmax), dtype=np.int64)
    dists = np.zeros((B, kmax, n))
    inert = np.zeros(B, dtype=np.uint8)
    for b in prange(B):
        order = np.argsort(Ys[b], kind="mergesort")
        ys = np.empty(R)
        for t in range(R):
            ys[t] = Ys[b, order[t]]
        k, bounds = select_k(ys, kmin, kmax)
        if k == 0:
            inert[b] = 1
            continue
        survivors = 0
        mbuf = np.empty(R, dtype=np.int64)
        for c in range(k):
            lo = bounds[c]
            hi = bounds[c + 1]
            m = hi - lo
            sizes[b, c] = m
            if m < min_cluster:
                continue
            survivors += 1
            for i in range(n):
                for t in range(m):
                    mbuf[t] = ranks[i, order[lo + t]]
                mr = np.sort(mbuf[:m])
                dists[b, c, i] = cdf_distance_ranks(mr, gaps[i], R)
        if survivors == 0:
            inert[b] = 1
    return sizes, dists, inert


# ---------------------------------------------------------------------------
# Bootstrap null distances (counter-based RNG, order-independent)
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _mix64(z):
    z = (z + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, parallel=True)
def bootstrap_distances(gaps, R, cluster_size, n_draws, key):
    """CDF distances of n_draws random subsets of the full sample, for every
    parameter at once.

    gaps is (n_params, R-1): consecutive differences of each parameter's
    sorted values. Each subset of cluster_size ranks is drawn without
    replacement by selection sampling from a per-draw counter-based stream
    derived from key, so the subsets are shared across parameters and the
    result does not depend on thread scheduling. Returns (n_params, n_draws).
    """
    n = gaps.shape[0]
    out = np.empty((n, n_draws))
    for b in prange(n_draws):
        state = _mix64(key + np.uint64(b))
        need = cluster_size
        remaining = R
        taken = 0
        acc = np.zeros(n)
        for j in range(R):
            state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(
                0xFFFFFFFFFFFFFFFF
            )
            u = float(_mix64(state)) * 5.421010862427522e-20  # 2**-64
            if u * remaining < need:
                need -= 1
                taken += 1
            remaining -= 1
            if j < R - 1:
                w = abs((j + 1) / R - taken / cluster_size)
                for i in range(n):
                    acc[i] += gaps[i, j] * w
        for i in range(n):
            out[i, b] = acc[i]
    return out
