"""Merging block cycles along the spanning tree into one Hamiltonian cycle.

Every 2x2(x2) block carries a local Hamiltonian cycle. For each tree edge the
two blocks are joined by removing one cycle edge on each side of the shared
face (a parallel pair) and bridging across the face. Blocks are visited in
depth-first order from cell 0; each block's cycle is picked on first visit so
that it contains the partner edge forced by its parent plus one designated
edge per child face, all distinct. Exhaustive search over the block graph's
Hamiltonian cycles shows such a choice always exists, so construction cannot
fail on even grids.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .curve import SfcConfig, SfcCurve
from .graph import CircuitGraph


def _coords(v: int) -> tuple[int, int, int]:
    return (v & 1, (v >> 1) & 1, (v >> 2) & 1)


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@lru_cache(maxsize=None)
def canonical_cycles(is3d: bool) -> tuple[tuple[int, ...], ...]:
    """All undirected Hamiltonian cycles of the block graph, as vertex
    sequences starting at 0, deterministically ordered."""
    if not is3d:
        return ((0, 1, 3, 2),)
    n = 8
    seen = set()
    out = []
    for perm in itertools.permutations(range(1, n)):
        seq = (0,) + perm
        ok = True
        for i in range(n):
            x = seq[i] ^ seq[(i + 1) % n]
            if x not in (1, 2, 4):
                ok = False
                break
        if not ok:
            continue
        key = frozenset(_norm_edge(seq[i], seq[(i + 1) % n]) for i in range(n))
        if key not in seen:
            seen.add(key)
            out.append(seq)
    out.sort()
    return tuple(out)


def _cycle_edges(seq: tuple[int, ...]) -> list[tuple[int, int]]:
    n = len(seq)
    return sorted(_norm_edge(seq[i], seq[(i + 1) % n]) for i in range(n))


def _edge_on_face(edge: tuple[int, int], face: tuple[int, int]) -> bool:
    axis, side = face
    cu, cv = _coords(edge[0]), _coords(edge[1])
    return cu[axis] == side and cv[axis] == side


def _designate(
    seq: tuple[int, ...],
    faces: list[tuple[int, int]],
    forced: dict[tuple[int, int], tuple[int, int]],
) -> dict[tuple[int, int], tuple[int, int]] | None:
    """Distinct cycle edge per required face (forced assignments fixed)."""
    edges = _cycle_edges(seq)
    for face, e in forced.items():
        if e not in edges or not _edge_on_face(e, face):
            return None
    cand = {}
    for face in faces:
        if face in forced:
            continue
        opts = [e for e in edges if _edge_on_face(e, face) and e not in forced.values()]
        if not opts:
            return None
        cand[face] = opts
    todo = sorted(cand, key=lambda f: (len(cand[f]), f))
    assignment = dict(forced)
    used = set(forced.values())

    def backtrack(i: int) -> bool:
        if i == len(todo):
            return True
        for e in cand[todo[i]]:
            if e not in used:
                assignment[todo[i]] = e
                used.add(e)
                if backtrack(i + 1):
                    return True
                used.discard(e)
                del assignment[todo[i]]
        return False

    return assignment if backtrack(0) else None


def _select_cycle(
    is3d: bool,
    faces: list[tuple[int, int]],
    forced: dict[tuple[int, int], tuple[int, int]],
):
    for seq in canonical_cycles(is3d):
        assignment = _designate(seq, faces, forced)
        if assignment is not None:
            return seq, assignment
    raise AssertionError(
        f"no block cycle satisfies faces={faces} forced={forced}"
    )


def merge_cycles(graph: CircuitGraph, tree: np.ndarray) -> SfcCurve:
    """Join the block cycles along the tree into one Hamiltonian cycle."""
    is3d = graph.block_depth == 2
    n_cells = graph.n_cells
    ncx, ncy, _ = graph.cell_dims

    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(n_cells)]
    for a, b in tree:
        ax_d = _tree_edge_axis(graph, int(a), int(b))
        adj[a].append((int(b), ax_d, 1))  # b lies on a's positive side
        adj[b].append((int(a), ax_d, 0))
    for lst in adj:
        lst.sort()

    cell_vox = [graph.cell_voxels(c) for c in range(n_cells)]
    V = graph.dims.voxel_count
    succ = np.full(V, -1, dtype=np.int64)

    designs: dict[int, dict[tuple[int, int], tuple[int, int]]] = {}

    def install(cell: int, seq: tuple[int, ...]) -> None:
        vox = cell_vox[cell]
        for i in range(len(seq)):
            succ[vox[seq[i]]] = vox[seq[(i + 1) % len(seq)]]

    # DFS preorder: pick each block's cycle, then splice it into its parent
    root = 0
    root_faces = [(axis, side) for (_nb, axis, side) in adj[root]]
    seq, assignment = _select_cycle(is3d, root_faces, {})
    designs[root] = assignment
    install(root, seq)

    stack = [(root, -1)]
    visited = {root}
    while stack:
        cell, _parent = stack.pop()
        for nb, axis, side in reversed(adj[cell]):
            if nb in visited:
                continue
            visited.add(nb)
            bit = 1 << axis
            p_edge = designs[cell][(axis, side)]
            c_edge = _norm_edge(p_edge[0] ^ bit, p_edge[1] ^ bit)
            child_faces = [(ax, sd) for (nb2, ax, sd) in adj[nb] if nb2 not in visited]
            forced_face = (axis, 1 - side)
            seq, assignment = _select_cycle(
                is3d, child_faces + [forced_face], {forced_face: c_edge}
            )
            designs[nb] = assignment
            install(nb, seq)
            _splice(succ, cell_vox, cell, nb, p_edge, c_edge)
            stack.append((nb, cell))

    order = np.empty(V, dtype=np.int64)
    cur = 0
    for t in range(V):
        order[t] = cur
        cur = succ[cur]
    assert cur == 0, "merged successor chain does not close"

    curve = SfcCurve(dims=graph.dims, order=order, kind="datadriven",
                     meta=graph.config)
    curve.validate()
    return curve


def _tree_edge_axis(graph: CircuitGraph, a: int, b: int) -> int:
    axc, ayc, azc = graph.cell_coords(a)
    bxc, byc, bzc = graph.cell_coords(b)
    d = (bxc - axc, byc - ayc, bzc - azc)
    for axis in range(3):
        if abs(d[axis]) == 1 and all(d[o] == 0 for o in range(3) if o != axis):
            return axis
    raise AssertionError(f"tree edge {a}-{b} joins non-adjacent cells")


def _splice(succ, cell_vox, parent, child, p_edge, c_edge) -> None:
    """Remove the designated parallel edges and bridge the two cycles."""
    pv = cell_vox[parent]
    cv = cell_vox[child]
    p1, p2 = pv[p_edge[0]], pv[p_edge[1]]
    c1, c2 = cv[c_edge[0]], cv[c_edge[1]]
    if succ[p1] != p2:
        assert succ[p2] == p1, "designated parent edge missing from cycle"
        p1, p2 = p2, p1
        c1, c2 = c2, c1
    if succ[c2] != c1:
        assert succ[c1] == c2, "designated child edge missing from cycle"
        _reverse_component(succ, c1)
        assert succ[c2] == c1
    succ[p1] = c1
    succ[c2] = p2


def _reverse_component(succ, start) -> None:
    prev = start
    cur = succ[start]
    while cur != start:
        nxt = succ[cur]
        succ[cur] = prev
        prev = cur
        cur = nxt
    succ[start] = prev
