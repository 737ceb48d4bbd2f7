"""Space-filling curves over voxel grids: data-driven, Hilbert, scanline."""

from ..sensitivity.fields import SensitivityFieldSet
from .curve import DISTANCES, KINDS, SfcConfig, SfcCurve, load_curve, write_curve
from .distances import pairwise_distance, vector_distance
from .graph import CircuitGraph, build_circuit_graph, mst
from .hilbert import hilbert_curve
from .merge import canonical_cycles, merge_cycles
from .scanline import scanline_curve


def data_driven_curve(fields: SensitivityFieldSet, cfg: SfcConfig = SfcConfig()) -> SfcCurve:
    """Full pipeline: weighted circuit graph, spanning tree, merged cycle."""
    graph = build_circuit_graph(fields, cfg)
    tree = mst(graph.edges, graph.weights, graph.n_cells)
    return merge_cycles(graph, tree)


__all__ = [
    "DISTANCES",
    "KINDS",
    "CircuitGraph",
    "SfcConfig",
    "SfcCurve",
    "build_circuit_graph",
    "canonical_cycles",
    "data_driven_curve",
    "hilbert_curve",
    "load_curve",
    "merge_cycles",
    "mst",
    "pairwise_distance",
    "scanline_curve",
    "vector_distance",
    "write_curve",
]
