import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latscatter.errors import (
    DuplicateEdge,
    EmptySubset,
    IsolatedBoundaryVertex,
    LoopEdge,
    NonpositiveWeight,
    TooLargeForExhaustive,
    UnknownVertex,
)
from latscatter.fixtures import hex_patch, hex_patch_perturbed, path_p1, tri_patch
from latscatter.graph import (
    boundary_isomorphic,
    boundary_neighborhood,
    build_graph,
    check_boundary_structure,
    check_two_points_condition,
    distance_matrix,
    extreme_points,
    graph_distance,
    load_graph,
    save_graph,
)


def spec(interior, boundary, edges):
    return {"vertices": [{"id": v, "role": "interior"} for v in interior]
            + [{"id": v, "role": "boundary"} for v in boundary],
            "edges": [{"a": a, "b": b} for a, b in edges]}


def floyd(g):
    """Independent all-pairs distances (Floyd-Warshall on the adjacency)."""
    n = len(g)
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0)
    for a, b in g.edges:
        D[g.index[a], g.index[b]] = D[g.index[b], g.index[a]] = 1
    for k in range(n):
        D = np.minimum(D, D[:, [k]] + D[[k], :])
    return D


# -- construction ------------------------------------------------------------

def test_p1_degrees():
    g = path_p1()
    assert g.mu == {"x": 2.0, "z1": 1.0, "z2": 1.0}
    assert g.interior == ("x",) and g.boundary == ("z1", "z2")


@pytest.mark.parametrize("edges, err", [
    ([("x", "x"), ("x", "z")], LoopEdge),
    ([("x", "z"), ("z", "x")], DuplicateEdge),
    ([("x", "y")], UnknownVertex),
])
def test_rejects_bad_edges(edges, err):
    with pytest.raises(err):
        build_graph(spec(["x"], ["z"], edges))


def test_rejects_weights_and_isolated_boundary():
    s = spec(["x"], ["z"], [("x", "z")])
    s["edges"][0]["g"] = 0
    with pytest.raises(NonpositiveWeight):
        build_graph(s)
    with pytest.raises(IsolatedBoundaryVertex):
        build_graph(spec(["x", "y"], ["z"], [("x", "y")]))


def test_json_round_trip(tmp_path):
    g = tri_patch().with_potential(np.linspace(0, 1, tri_patch().n_interior))
    save_graph(g, tmp_path / "g.json")
    h = load_graph(tmp_path / "g.json")
    assert h.to_dict() == g.to_dict()
    assert json.loads((tmp_path / "g.json").read_text())["vertices"]


# -- distances ---------------------------------------------------------------

def test_p1_distances():
    g = path_p1()
    assert graph_distance(g, "z1", "z2") == 2
    assert graph_distance(g, "x", "x") == 0
    with pytest.raises(UnknownVertex):
        graph_distance(g, "x", "nope")


def test_hex_distances_match_floyd():
    g = hex_patch()
    D = floyd(g)
    assert np.array_equal(distance_matrix(g), D)
    z = g.boundary
    # opposite sides: the pair realising the largest boundary-boundary distance
    i, j = max(itertools.combinations(range(len(z)), 2),
               key=lambda p: D[g.index[z[p[0]]], g.index[z[p[1]]]])
    assert graph_distance(g, z[i], z[j]) == D[g.index[z[i]], g.index[z[j]]] == 7


@st.composite
def random_graphs(draw):
    n = draw(st.integers(3, 9))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, unique=True))
    used = sorted({v for e in chosen for v in e})
    ids = [f"v{i}" for i in used]
    return build_graph(spec(ids, [], [(f"v{a}", f"v{b}") for a, b in chosen]))


@given(random_graphs())
def test_distance_is_a_metric(g):
    vs = g.vertices
    d = {(a, b): graph_distance(g, a, b) for a in vs for b in vs}
    for a, b in d:
        assert d[a, b] == d[b, a]
        assert (d[a, b] == 0) == (a == b)
    for a, b, c in itertools.product(vs, repeat=3):
        if None not in (d[a, b], d[b, c], d[a, c]):
            assert d[a, c] <= d[a, b] + d[b, c]


# -- extreme points and (C-2) ------------------------------------------------

def test_extreme_points_small_cases():
    g = path_p1()
    assert extreme_points(g, {"x"}) == {"x"}
    with pytest.raises(EmptySubset):
        extreme_points(g, set())
    assert len(extreme_points(hex_patch(), hex_patch().interior)) >= 2


def test_two_points_on_reference_patches():
    assert check_two_points_condition(hex_patch()).c2 == "verified"
    assert check_two_points_condition(hex_patch_perturbed()).c2 == "verified"


def test_two_points_violation_on_one_sided_path():
    g = build_graph(spec(["a", "b", "c"], ["z"], [("z", "a"), ("a", "b"), ("b", "c")]))
    rep = check_two_points_condition(g, "exhaustive")
    assert rep.c2 == "violated"
    assert len(rep.c2_witness) >= 2
    assert len(extreme_points(g, rep.c2_witness)) <= 1
    assert len(extreme_points(g, {"b", "c"})) == 1


def test_exhaustive_limit():
    from latscatter.lattice import HEXAGONAL, build_lattice_patch

    big = build_lattice_patch(HEXAGONAL, 2)
    with pytest.raises(TooLargeForExhaustive):
        check_two_points_condition(big, "exhaustive")
    assert check_two_points_condition(big, "sampled", n_samples=500).c2 == "sampled"


def test_witness_invariant_vs_brute_force():
    # every subset of a tiny graph: the exhaustive verdict matches brute force
    g = build_graph(spec(["a", "b", "c", "d"], ["z1", "z2"],
                         [("z1", "a"), ("a", "b"), ("b", "c"), ("c", "d"), ("b", "z2")]))
    bad = [S for k in range(2, 5) for S in itertools.combinations(g.interior, k)
           if len(extreme_points(g, S)) < 2]
    rep = check_two_points_condition(g, "exhaustive")
    assert (rep.c2 == "violated") == bool(bad)
    if bad:
        assert len(rep.c2_witness) == min(len(S) for S in bad)


# -- boundary structure ------------------------------------------------------

def test_boundary_conditions():
    assert check_boundary_structure(path_p1()).c1
    assert check_boundary_structure(hex_patch()).c1
    t = check_boundary_structure(tri_patch())
    assert (t.c1, t.c1_prime) == (False, True)


def test_c1_rows_have_one_interior_neighbour():
    g = hex_patch()
    W = g.weight_matrix()
    N = g.n_interior
    assert all(np.count_nonzero(W[N + j, :N]) == 1 for j in range(g.n_boundary))


def test_boundary_neighborhood():
    assert boundary_neighborhood(path_p1()) == {"x", "z1", "z2"}
    g = hex_patch()
    ring = {x for z in g.boundary for x in g.adjacency[z]}
    assert boundary_neighborhood(g) == set(g.boundary) | ring


def test_boundary_isomorphism():
    g = path_p1()
    phi = boundary_isomorphic(g, g)
    assert phi is not None and set(phi) == {"x", "z1", "z2"}
    assert boundary_isomorphic(hex_patch(), hex_patch_perturbed()) is not None
    three = build_graph(spec(["x"], ["z1", "z2", "z3"], [("x", "z1"), ("x", "z2"), ("x", "z3")]))
    assert boundary_isomorphic(g, three) is None
