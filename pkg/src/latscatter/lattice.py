"""
Periodic lattices, finite patches and their local perturbations.

Three lattice kinds ship: the square lattice in dimension 1 to 3, the
hexagonal (graphene) lattice with two sites per cell and the triangular
lattice. A site is a pair ``(s, n)`` of a sublattice index and an integer
cell vector; all coordinates are given in the lattice basis, so they are
rational (the hexagonal B site sits at ``n + (1/3, 1/3)``).

The lattice operator is the normalized adjacency average
``(H u)(v) = -(1/deg) sum_{w ~ v} u(w)``; with ``mu = deg`` and unit edge
weights this is ``-Delta_G - 1`` on the graph, which is the energy shift used
throughout the package.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import Disconnected, EditTouchesBoundaryLayer, GraphValidationError, UnknownVertex
from .graph import (
    WeightedBoundaryGraph,
    boundary_neighborhood,
    check_boundary_structure,
    check_two_points_condition,
    edge_key,
    is_connected,
)

Site = tuple[int, tuple[int, ...]]


@dataclass(frozen=True)
class LatticeKind:
    """One of the shipped periodic lattices.

    Use the constructors :func:`Square`, :data:`HEXAGONAL` and
    :data:`TRIANGULAR` (or :func:`parse_kind`) rather than building it
    directly.
    """

    name: str
    d: int

    @property
    def sites(self) -> int:
        return 2 if self.name == "hex" else 1

    @property
    def degree(self) -> int:
        return {"square": 2 * self.d, "hex": 3, "tri": 6}[self.name]

    @property
    def label(self) -> str:
        return f"square{self.d}" if self.name == "square" else self.name

    def __str__(self) -> str:
        return self.label


def Square(d: int = 2) -> LatticeKind:
    if d not in (1, 2, 3):
        raise ValueError(f"square lattice dimension must be 1, 2 or 3, got {d}")
    return LatticeKind("square", d)


HEXAGONAL = LatticeKind("hex", 2)
TRIANGULAR = LatticeKind("tri", 2)


def parse_kind(text: str) -> LatticeKind:
    """Parse a CLI-style lattice name: ``square1..3``, ``hex`` or ``tri``."""
    t = text.strip().lower()
    if t in ("hex", "hexagonal"):
        return HEXAGONAL
    if t in ("tri", "triangular"):
        return TRIANGULAR
    if t.startswith("square"):
        return Square(int(t[6:] or 2))
    raise ValueError(f"unknown lattice kind {text!r}")


# ---------------------------------------------------------------------------
# infinite-lattice combinatorics
# ---------------------------------------------------------------------------

def _unit(d: int, j: int, sign: int = 1) -> tuple[int, ...]:
    return tuple(sign if i == j else 0 for i in range(d))


def _add(n, m):
    return tuple(a + b for a, b in zip(n, m))


_TRI_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))


def lattice_neighbors(kind: LatticeKind, site: Site) -> list[Site]:
    """Neighbours of a site in the infinite lattice."""
    s, n = site
    if kind.name == "square":
        return [(0, _add(n, _unit(kind.d, j, sg))) for j in range(kind.d) for sg in (1, -1)]
    if kind.name == "tri":
        return [(0, _add(n, step)) for step in _TRI_STEPS]
    # hexagonal: A(n) ~ B(n), B(n - e1), B(n - e2)
    if s == 0:
        return [(1, n), (1, _add(n, (-1, 0))), (1, _add(n, (0, -1)))]
    return [(0, n), (0, _add(n, (1, 0))), (0, _add(n, (0, 1)))]


def site_id(kind: LatticeKind, site: Site) -> str:
    s, n = site
    body = "_".join(str(c) for c in n)
    if kind.name == "hex":
        return ("A:" if s == 0 else "B:") + body
    return body


def parse_site_id(kind: LatticeKind, vid: str) -> Site:
    s = 0
    body = vid
    if kind.name == "hex":
        tag, _, body = vid.partition(":")
        if tag not in ("A", "B"):
            raise UnknownVertex(vid)
        s = 0 if tag == "A" else 1
    try:
        n = tuple(int(c) for c in body.split("_"))
    except ValueError:
        raise UnknownVertex(vid) from None
    if len(n) != kind.d:
        raise UnknownVertex(vid)
    return (s, n)


def site_coord(kind: LatticeKind, site: Site) -> tuple:
    s, n = site
    if kind.name == "hex" and s == 1:
        return tuple(Fraction(c) + Fraction(1, 3) for c in n)
    return tuple(Fraction(c) for c in n)


def origin_cell(kind: LatticeKind) -> list[Site]:
    """Base cell that patch radii are measured from.

    For the hexagonal lattice this is the hexagonal ring around the origin
    (three A and three B sites), which gives patches with six-fold symmetry.
    """
    if kind.name == "hex":
        return [(0, (0, 0)), (1, (0, 0)), (0, (1, 0)), (1, (1, -1)),
                (0, (1, -1)), (1, (0, -1))]
    return [(0, (0,) * kind.d)]


def lattice_ball(kind: LatticeKind, k: int, cell: Iterable[Site] | None = None) -> list[Site]:
    """Sites within graph distance ``k`` of the base cell, in BFS order."""
    start = list(origin_cell(kind) if cell is None else cell)
    dist = {v: 0 for v in start}
    queue = deque(start)
    while queue:
        v = queue.popleft()
        if dist[v] == k:
            continue
        for w in lattice_neighbors(kind, v):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return list(dist)


def _sort_key(site: Site):
    return (site[1], site[0])


def patch_from_sites(kind: LatticeKind, omega: Iterable[Site]) -> WeightedBoundaryGraph:
    """Patch with interior ``omega`` and its lattice boundary.

    The boundary consists of the lattice neighbours of ``omega`` outside it;
    edges are the lattice edges with at least one endpoint in ``omega``.
    ``mu`` is the degree inside the patch, ``g = 1`` and ``q = 0``.
    """
    omega = sorted(set(omega), key=_sort_key)
    inside = set(omega)
    outside: set[Site] = set()
    edges: dict[tuple[str, str], float] = {}
    for v in omega:
        for w in lattice_neighbors(kind, v):
            if w not in inside:
                outside.add(w)
            edges[edge_key(site_id(kind, v), site_id(kind, w))] = 1.0
    boundary = sorted(outside, key=_sort_key)
    interior_ids = tuple(site_id(kind, v) for v in omega)
    boundary_ids = tuple(site_id(kind, v) for v in boundary)
    coords = {site_id(kind, v): site_coord(kind, v) for v in omega + boundary}
    mu = _degrees(interior_ids + boundary_ids, edges)
    return WeightedBoundaryGraph(interior_ids, boundary_ids, edges, mu, {}, coords)


def _degrees(vertices, edges) -> dict[str, float]:
    deg = dict.fromkeys(vertices, 0.0)
    for a, b in edges:
        deg[a] += 1.0
        deg[b] += 1.0
    return deg


def build_lattice_patch(kind: LatticeKind, k: int) -> WeightedBoundaryGraph:
    """Ball of graph radius ``k`` around the base cell, with its boundary.

    Examples
    --------
    >>> g = build_lattice_patch(Square(2), 1)
    >>> g.n_interior, g.n_boundary
    (5, 8)
    """
    if k < 1:
        raise ValueError(f"patch radius must be >= 1, got {k}")
    return patch_from_sites(kind, lattice_ball(kind, k))


def build_box_patch(kind: LatticeKind, shape: Sequence[int]) -> WeightedBoundaryGraph:
    """Rectangular block of cells ``[0, shape_0) x ... `` with its boundary.

    On the square lattice the 3x3 block is the fixture with nine interior
    and twelve boundary vertices used by the spectral and potential tests.
    """
    if len(shape) != kind.d:
        raise ValueError(f"shape must have {kind.d} entries")
    cells = np.ndindex(*shape)
    return patch_from_sites(kind, [(s, tuple(int(c) for c in n))
                                   for n in cells for s in range(kind.sites)])


# ---------------------------------------------------------------------------
# perturbations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RemoveEdge:
    a: str
    b: str

    def refs(self):
        return (self.a, self.b)

    def to_dict(self):
        return {"op": "remove_edge", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class AddEdge:
    a: str
    b: str
    g: float = 1.0

    def refs(self):
        return (self.a, self.b)

    def to_dict(self):
        return {"op": "add_edge", "a": self.a, "b": self.b, "g": self.g}


@dataclass(frozen=True)
class RemoveVertex:
    v: str

    def refs(self):
        return (self.v,)

    def to_dict(self):
        return {"op": "remove_vertex", "v": self.v}


@dataclass(frozen=True)
class AddVertex:
    v: str
    neighbors: tuple[str, ...]

    def refs(self):
        return tuple(self.neighbors)

    def to_dict(self):
        return {"op": "add_vertex", "v": self.v, "neighbors": list(self.neighbors)}


@dataclass(frozen=True)
class SetPotential:
    v: str
    value: float

    def refs(self):
        return (self.v,)

    def to_dict(self):
        return {"op": "set_potential", "v": self.v, "value": self.value}


PerturbationEdit = RemoveEdge | AddEdge | RemoveVertex | AddVertex | SetPotential


def edit_from_dict(rec: dict) -> PerturbationEdit:
    op = rec.get("op")
    if op == "remove_edge":
        return RemoveEdge(str(rec["a"]), str(rec["b"]))
    if op == "add_edge":
        return AddEdge(str(rec["a"]), str(rec["b"]), float(rec.get("g", 1.0)))
    if op == "remove_vertex":
        return RemoveVertex(str(rec["v"]))
    if op == "add_vertex":
        return AddVertex(str(rec["v"]), tuple(str(x) for x in rec["neighbors"]))
    if op == "set_potential":
        return SetPotential(str(rec["v"]), float(rec["value"]))
    raise GraphValidationError(f"unknown edit op {op!r}")


def deep_interior(g: WeightedBoundaryGraph) -> list[str]:
    """Interior vertices that are neither boundary nor adjacent to it."""
    layer = boundary_neighborhood(g)
    return [v for v in g.interior if v not in layer]


def apply_perturbation(patch: WeightedBoundaryGraph, edits: Sequence[PerturbationEdit],
                       check: bool = True) -> WeightedBoundaryGraph:
    """Apply local edits away from the boundary layer.

    ``mu`` is recomputed as the degree after the edits; the result is
    checked for connectedness, (C-1) or (C-1)' and (C-2), and a warning is
    issued when the boundary and two-points conditions fail.

    Raises
    ------
    EditTouchesBoundaryLayer
        if an edit references a boundary vertex or one of its neighbours.
    Disconnected
        if the edited graph is not connected.
    """
    if not edits:
        return patch
    layer = boundary_neighborhood(patch)
    interior = list(patch.interior)
    edges = dict(patch.edges)
    q = dict(patch.q)
    coords = dict(patch.coords)
    present = set(interior)
    for e in edits:
        for v in e.refs():
            if v in layer:
                raise EditTouchesBoundaryLayer(f"{e} references {v}")
            if v not in present:
                raise UnknownVertex(v)
        if isinstance(e, RemoveEdge):
            key = edge_key(e.a, e.b)
            if key not in edges:
                raise GraphValidationError(f"no edge {e.a} -- {e.b} to remove")
            del edges[key]
        elif isinstance(e, AddEdge):
            key = edge_key(e.a, e.b)
            if e.a == e.b or key in edges:
                raise GraphValidationError(f"cannot add edge {e.a} -- {e.b}")
            if not e.g > 0:
                raise GraphValidationError(f"edge weight must be positive, got {e.g}")
            edges[key] = float(e.g)
        elif isinstance(e, RemoveVertex):
            interior.remove(e.v)
            present.discard(e.v)
            q.pop(e.v, None)
            coords.pop(e.v, None)
            edges = {k: w for k, w in edges.items() if e.v not in k}
        elif isinstance(e, AddVertex):
            if e.v in present or e.v in patch.boundary_set:
                raise GraphValidationError(f"vertex {e.v} already exists")
            interior.append(e.v)
            present.add(e.v)
            for w in e.neighbors:
                edges[edge_key(e.v, w)] = 1.0
        else:
            q[e.v] = float(e.value)
    mu = _degrees(interior + list(patch.boundary), edges)
    if any(mu[v] == 0 for v in interior):
        raise Disconnected("an interior vertex became isolated")
    out = WeightedBoundaryGraph(tuple(interior), patch.boundary, edges, mu, q, coords)
    if not is_connected(out):
        raise Disconnected("perturbed graph is not connected")
    if check:
        problems = e1_problems(out)
        if problems:
            warnings.warn("perturbed graph fails " + ", ".join(problems), stacklevel=2)
    return out


def e1_problems(g: WeightedBoundaryGraph, n_samples: int = 2000) -> list[str]:
    """Names of the (E-1) ingredients that fail; empty when all hold."""
    out = []
    if not is_connected(g):
        out.append("connectedness")
    rep = check_boundary_structure(g)
    if not (rep.c1 or rep.c1_prime):
        out.append("C-1/C-1'")
    if not check_two_points_condition(g, n_samples=n_samples).two_points_ok:
        out.append("C-2")
    return out


# ---------------------------------------------------------------------------
# Floquet symbols
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FloquetModel:
    """Floquet symbol ``H0(x)`` of the lattice operator.

    ``symbol`` accepts quasimomenta of shape ``(..., d)`` and returns
    Hermitian matrices of shape ``(..., s, s)``.
    """

    kind: LatticeKind
    d: int
    s: int
    symbol: Callable[[np.ndarray], np.ndarray]
    deg: int

    def __call__(self, x) -> np.ndarray:
        return self.symbol(np.asarray(x, dtype=float))


def _square_symbol(d):
    def H(x):
        return (-np.cos(x).sum(axis=-1) / d)[..., None, None].astype(complex)
    return H


def _hex_symbol(x):
    h = -(1 + np.exp(1j * x[..., 0]) + np.exp(1j * x[..., 1])) / 3
    out = np.zeros(x.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 1] = h
    out[..., 1, 0] = np.conj(h)
    return out


def _tri_symbol(x):
    x1, x2 = x[..., 0], x[..., 1]
    return (-(np.cos(x1) + np.cos(x2) + np.cos(x1 - x2)) / 3)[..., None, None].astype(complex)


def floquet_model(kind: LatticeKind) -> FloquetModel:
    if kind.name == "square":
        sym = _square_symbol(kind.d)
    elif kind.name == "hex":
        sym = _hex_symbol
    else:
        sym = _tri_symbol
    return FloquetModel(kind, kind.d, kind.sites, sym, kind.degree)
