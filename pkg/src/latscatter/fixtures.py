"""Small reference graphs used by the tests, the demos and the CLI."""
from __future__ import annotations

import numpy as np

from .graph import WeightedBoundaryGraph, build_graph
from .lattice import (
    HEXAGONAL,
    TRIANGULAR,
    RemoveEdge,
    Square,
    apply_perturbation,
    build_box_patch,
    build_lattice_patch,
)
from .quantum import EdgeModel, MetricGraph


def _spec(interior, boundary, edges, **mu):
    verts = [{"id": v, "role": "interior"} for v in interior]
    verts += [{"id": v, "role": "boundary"} for v in boundary]
    for rec in verts:
        if rec["id"] in mu:
            rec["mu"] = mu[rec["id"]]
    return {"vertices": verts, "edges": [{"a": a, "b": b} for a, b in edges]}


def path_p1() -> WeightedBoundaryGraph:
    """``z1 - x - z2``: one interior vertex between two boundary vertices."""
    return build_graph(_spec(["x"], ["z1", "z2"], [("z1", "x"), ("x", "z2")]))


def square_box() -> WeightedBoundaryGraph:
    """3x3 block of the square lattice with its 12 boundary vertices."""
    return build_box_patch(Square(2), (3, 3))


def star_double() -> WeightedBoundaryGraph:
    """Centre joined to three arms of length one, each ending on the boundary.

    The three-fold symmetry forces a doubly degenerate Neumann eigenvalue.
    """
    arms = ["a", "b", "c"]
    edges = [("o", x) for x in arms] + [(x, "z" + x) for x in arms]
    return build_graph(_spec(["o"] + arms, ["z" + x for x in arms], edges))


# -- reference lattice patches for structure recovery -----------------------

HEX_RADIUS = 1
TRI_RADIUS = 2
HEX_REMOVED = RemoveEdge("A:0_0", "B:0_0")
TRI_REMOVED = RemoveEdge("0_0", "1_0")


def hex_patch() -> WeightedBoundaryGraph:
    """Hexagonal patch: two rings around the base hexagon, boundary pendant."""
    return build_lattice_patch(HEXAGONAL, HEX_RADIUS)


def hex_patch_perturbed() -> WeightedBoundaryGraph:
    return apply_perturbation(hex_patch(), [HEX_REMOVED])


def tri_patch() -> WeightedBoundaryGraph:
    return build_lattice_patch(TRIANGULAR, TRI_RADIUS)


def tri_patch_perturbed() -> WeightedBoundaryGraph:
    return apply_perturbation(tri_patch(), [TRI_REMOVED])


# -- metric graphs ------------------------------------------------------------

def metric_p1(kappa: float = 0.0, model: EdgeModel | None = None) -> MetricGraph:
    return MetricGraph(path_p1(), model or EdgeModel(), kappa)


def metric_cycle4(kappa: float = 0.0) -> MetricGraph:
    g = build_graph(_spec(["c0", "c1", "c2", "c3"], [],
                          [("c0", "c1"), ("c1", "c2"), ("c2", "c3"), ("c3", "c0")]))
    return MetricGraph(g, EdgeModel(), kappa)


def metric_tree6(kappa: float = 0.0, seed: int = 7) -> MetricGraph:
    """Random tree on six vertices (each vertex hangs off an earlier one)."""
    rng = np.random.default_rng(seed)
    edges = [(f"t{int(rng.integers(0, i))}", f"t{i}") for i in range(1, 6)]
    deg = {f"t{i}": 0 for i in range(6)}
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    leaves = [v for v in deg if deg[v] == 1]
    inner = [v for v in deg if deg[v] > 1]
    return MetricGraph(build_graph(_spec(inner, leaves, edges)), EdgeModel(), kappa)


def _hex_cell_graph(drop_edge: bool) -> WeightedBoundaryGraph:
    ring = [f"r{i}" for i in range(6)]
    edges = [(ring[i], ring[(i + 1) % 6]) for i in range(6)]
    if drop_edge:
        edges = edges[1:]
    edges += [(r, "p" + r[1:]) for r in ring]
    return build_graph(_spec(ring, ["p" + r[1:] for r in ring], edges))


def metric_hex_cell(kappa: float = 0.0) -> MetricGraph:
    """Hexagon with a pendant boundary edge at every ring vertex."""
    return MetricGraph(_hex_cell_graph(False), EdgeModel(), kappa)


def metric_hex_cell_perturbed(kappa: float = 0.0) -> MetricGraph:
    """:func:`metric_hex_cell` with one ring edge removed."""
    return MetricGraph(_hex_cell_graph(True), EdgeModel(), kappa)


def krein_fixtures(kappa: float = 0.0) -> dict[str, MetricGraph]:
    return {
        "metric_p1": metric_p1(kappa),
        "cycle4": metric_cycle4(kappa),
        "tree6": metric_tree6(kappa),
        "hex_cell": metric_hex_cell(kappa),
        "hex_cell_perturbed": metric_hex_cell_perturbed(kappa),
    }


# -- transmission check -------------------------------------------------------

# A 3x4 block keeps its Dirichlet spectrum about 0.1 away from lattice
# energy -0.3, with and without the removed edge.
TRANSMISSION_SHAPE = (3, 4)
TRANSMISSION_REMOVED = RemoveEdge("1_1", "1_2")


def transmission_patch() -> WeightedBoundaryGraph:
    return build_box_patch(Square(2), TRANSMISSION_SHAPE)


def transmission_patch_perturbed() -> WeightedBoundaryGraph:
    return apply_perturbation(transmission_patch(), [TRANSMISSION_REMOVED])


# -- recorded reconstruction margins ------------------------------------------

# Runner-up residuals of budget-1 removal searches at the default probes,
# frozen from the first exhaustive run (0.52915 and 0.10689) and rounded down.
HEX_MARGIN = 0.529
TRI_MARGIN = 0.106
