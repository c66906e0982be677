"""Continuous opinions with discrete actions (CODA) on fixed graphs, the continuous-action
baseline (COCA), Martins' odds update, and the structural predictions to test them against."""

from .analysis import (
    ClusterReport,
    EquilibriumSet,
    cluster_report,
    diffusion_layers,
    equilibrium_set,
    find_maximal_robust_clusters,
    flip_threshold,
    is_robust_cluster,
    oscillation_band,
    predict_complete_graph,
    ring_orbit_sigma,
)
from .dynamics import (
    OpinionState,
    SimulationTrace,
    StopCriteria,
    coca_step,
    coda_step,
    martins_step,
    quantize,
    run,
)
from .graph import Graph, build_complete, build_from_edges, build_lattice, build_ring

__all__ = [
    "ClusterReport", "EquilibriumSet", "Graph", "OpinionState", "SimulationTrace", "StopCriteria",
    "build_complete", "build_from_edges", "build_lattice", "build_ring", "cluster_report",
    "coca_step", "coda_step", "diffusion_layers", "equilibrium_set", "find_maximal_robust_clusters",
    "flip_threshold", "is_robust_cluster", "martins_step", "oscillation_band",
    "predict_complete_graph", "quantize", "ring_orbit_sigma", "run",
]
