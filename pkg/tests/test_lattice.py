import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latscatter.errors import Disconnected, EditTouchesBoundaryLayer
from latscatter.fixtures import HEX_REMOVED, TRI_REMOVED, hex_patch, tri_patch
from latscatter.graph import check_boundary_structure, is_connected
from latscatter.lattice import (
    HEXAGONAL,
    TRIANGULAR,
    RemoveEdge,
    RemoveVertex,
    SetPotential,
    Square,
    apply_perturbation,
    build_box_patch,
    build_lattice_patch,
    deep_interior,
    edit_from_dict,
    floquet_model,
    lattice_neighbors,
    parse_kind,
)

KINDS = [Square(1), Square(2), Square(3), HEXAGONAL, TRIANGULAR]


@pytest.mark.parametrize("kind, k, counts", [
    (Square(2), 1, (5, 8)),
    (Square(1), 2, (5, 2)),
    (HEXAGONAL, 1, (12, 12)),
    (HEXAGONAL, 2, (24, 12)),
    (TRIANGULAR, 2, (19, 18)),
])
def test_patch_counts(kind, k, counts):
    g = build_lattice_patch(kind, k)
    assert (g.n_interior, g.n_boundary) == counts


def test_box_counts():
    g = build_box_patch(Square(2), (3, 3))
    assert (g.n_interior, g.n_boundary) == (9, 12)


@pytest.mark.parametrize("kind", KINDS)
def test_patch_invariants(kind):
    g = build_lattice_patch(kind, 2)
    assert not set(g.interior) & set(g.boundary)
    for z in g.boundary:
        assert any(x in g.interior_set for x in g.adjacency[z])
    deep = [v for v in g.interior if all(w in g.interior_set for w in g.adjacency[v])]
    assert all(g.mu[v] == kind.degree for v in deep)
    assert all(g.edges[e] == 1.0 for e in g.edges) and not g.q
    assert is_connected(g)


def test_boundary_conditions_by_kind():
    assert check_boundary_structure(build_lattice_patch(HEXAGONAL, 2)).c1
    rep = check_boundary_structure(build_lattice_patch(TRIANGULAR, 3))
    assert (rep.c1, rep.c1_prime) == (False, True)


def test_neighbours_are_symmetric():
    for kind in KINDS:
        for v in build_lattice_patch(kind, 1).interior:
            from latscatter.lattice import parse_site_id

            site = parse_site_id(kind, v)
            for w in lattice_neighbors(kind, site):
                assert site in lattice_neighbors(kind, w)
            assert len(lattice_neighbors(kind, site)) == kind.degree


def test_parse_kind():
    assert parse_kind("square2") == Square(2)
    assert parse_kind("hex") == HEXAGONAL and parse_kind("tri") == TRIANGULAR
    with pytest.raises(ValueError):
        parse_kind("kagome")


# -- perturbations -----------------------------------------------------------

def test_empty_edit_list_is_identity():
    g = hex_patch()
    assert apply_perturbation(g, []) is g


def test_reference_edge_removal():
    g = hex_patch()
    h = apply_perturbation(g, [HEX_REMOVED])
    assert len(h.edges) == len(g.edges) - 1
    assert h.mu["A:0_0"] == 2 and h.mu["B:0_0"] == 2
    t = apply_perturbation(tri_patch(), [TRI_REMOVED])
    assert len(t.edges) == len(tri_patch().edges) - 1


def test_remove_deep_vertex():
    g = build_lattice_patch(HEXAGONAL, 2)
    v = "A:0_0"
    assert v in deep_interior(g)
    h = apply_perturbation(g, [RemoveVertex(v)])
    assert len(h.edges) == len(g.edges) - 3 and is_connected(h)


def test_boundary_layer_is_protected():
    g = hex_patch()
    z = g.boundary[0]
    x = next(iter(g.adjacency[z]))
    with pytest.raises(EditTouchesBoundaryLayer):
        apply_perturbation(g, [SetPotential(x, 1.0)])


def test_disconnecting_edit():
    # removing the whole deep ring of the 3x3 box centre isolates it
    g = build_box_patch(Square(2), (5, 5))
    c = "2_2"
    edits = [RemoveEdge(c, w) for w in sorted(g.adjacency[c])]
    with pytest.raises(Disconnected):
        apply_perturbation(g, edits)


def test_edit_records_round_trip():
    for e in (HEX_REMOVED, RemoveVertex("A:0_0"), SetPotential("A:0_0", 0.5)):
        assert edit_from_dict(e.to_dict()) == e


def test_reference_edits_keep_e1_quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply_perturbation(hex_patch(), [HEX_REMOVED])
        apply_perturbation(tri_patch(), [TRI_REMOVED])


# -- Floquet symbols ---------------------------------------------------------

def test_symbol_values():
    sq = floquet_model(Square(2))
    assert np.allclose(sq(np.array([0.0, 0.0])), [[-1]])
    assert np.allclose(sq(np.array([np.pi, np.pi])), [[1]])
    hx = floquet_model(HEXAGONAL)
    assert np.allclose(np.linalg.eigvalsh(hx(np.array([0.0, 0.0]))), [-1, 1])
    tri = floquet_model(TRIANGULAR)
    x = np.array([0.3, -1.1])
    assert np.isclose(tri(x)[0, 0], -(np.cos(0.3) + np.cos(-1.1) + np.cos(1.4)) / 3)


@pytest.mark.parametrize("kind", KINDS)
def test_symbol_hermitian_on_grid(kind):
    from latscatter.floquet import torus_grid

    m = floquet_model(kind)
    H = m(torus_grid(m.d, 32 if m.d < 3 else 12))
    assert np.abs(H - np.conj(np.swapaxes(H, -1, -2))).max() < 1e-15


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_symbol_matches_site_sum(x1, x2):
    # Fourier transform of -(1/deg) sum over neighbours, computed from the
    # neighbour list rather than the closed form
    for kind in (Square(2), HEXAGONAL, TRIANGULAR):
        m = floquet_model(kind)
        x = np.array([x1, x2])
        H = np.zeros((kind.sites, kind.sites), dtype=complex)
        for s in range(kind.sites):
            for t, n in lattice_neighbors(kind, (s, (0, 0))):
                H[s, t] -= np.exp(1j * np.dot(x, n)) / kind.degree
        assert np.allclose(H, m(x), atol=1e-14) or np.allclose(H, m(x).conj(), atol=1e-14)
