"""
Discrete and quantum-graph scattering on lattice patches.

Forward maps (D-N/N-D maps of weighted graphs, equilateral metric-graph
reduction, Floquet bands, exterior maps by limiting absorption) and the
matching inverse computations (boundary spectral data, local structure
search, potential fit).
"""

__version__ = "0.1.0"

from .discrete import (  # noqa: E402
    BoundaryMap,
    BoundarySpectralData,
    dirichlet_eigs,
    dn_map,
    nd_map,
    neumann_eigs,
    read_map_csv,
    write_map_csv,
)
from .graph import (  # noqa: E402
    ConditionReport,
    WeightedBoundaryGraph,
    build_graph,
    check_boundary_structure,
    check_two_points_condition,
    graph_distance,
    load_graph,
    save_graph,
)
from .inverse import (  # noqa: E402
    DnOracle,
    extract_spectral_data,
    reconstruct_structure,
    recover_potential,
    synthesize_nd_map,
)
from .lattice import (  # noqa: E402
    HEXAGONAL,
    TRIANGULAR,
    AddEdge,
    RemoveEdge,
    RemoveVertex,
    Square,
    apply_perturbation,
    build_box_patch,
    build_lattice_patch,
    floquet_model,
)

__all__ = [
    "AddEdge", "BoundaryMap", "BoundarySpectralData", "ConditionReport", "DnOracle",
    "HEXAGONAL", "RemoveEdge", "RemoveVertex", "Square", "TRIANGULAR",
    "WeightedBoundaryGraph", "apply_perturbation", "build_box_patch", "build_graph",
    "build_lattice_patch", "check_boundary_structure", "check_two_points_condition",
    "dirichlet_eigs", "dn_map", "extract_spectral_data", "floquet_model", "graph_distance",
    "load_graph", "nd_map", "neumann_eigs", "read_map_csv", "reconstruct_structure",
    "recover_potential", "save_graph", "synthesize_nd_map", "write_map_csv",
]
