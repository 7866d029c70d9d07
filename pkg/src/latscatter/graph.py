"""
Finite weighted graphs with boundary
====================================

The data model used by every other module: a simple undirected graph whose
vertex set splits into interior vertices ``G`` and boundary vertices ``dG``,
together with vertex weights ``mu``, edge weights ``g`` and a real potential
``q`` on the interior.

The module also hosts the purely combinatorial checks that the uniqueness
results rely on: graph distances, extreme points of interior subsets, the
two-points condition, the boundary-structure conditions and a brute-force
search for boundary isomorphisms.
"""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csgraph
from scipy import sparse

from .errors import (
    DuplicateEdge,
    DuplicateVertex,
    EmptySubset,
    GraphValidationError,
    IsolatedBoundaryVertex,
    LoopEdge,
    NonpositiveWeight,
    SearchBudgetExceeded,
    TooLargeForExhaustive,
    UnknownVertex,
)

INTERIOR = "interior"
BOUNDARY = "boundary"

EXHAUSTIVE_LIMIT = 20
DEFAULT_SAMPLES = 10_000


def edge_key(a: str, b: str) -> tuple[str, str]:
    """Canonical (sorted) key of the undirected edge ``a -- b``."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True, eq=False)
class WeightedBoundaryGraph:
    """Immutable weighted graph with boundary.

    Build instances through :func:`build_graph`, which validates the
    invariants (simple graph, disjoint roles, positive weights, no isolated
    boundary vertex). Vertex order is interior first, then boundary, each in
    the order given at construction; every matrix in the package uses it.
    """

    interior: tuple[str, ...]
    boundary: tuple[str, ...]
    edges: Mapping[tuple[str, str], float]
    mu: Mapping[str, float]
    q: Mapping[str, float]
    coords: Mapping[str, tuple] = field(default_factory=dict)

    @cached_property
    def vertices(self) -> tuple[str, ...]:
        return self.interior + self.boundary

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def boundary_set(self) -> frozenset:
        return frozenset(self.boundary)

    @cached_property
    def interior_set(self) -> frozenset:
        return frozenset(self.interior)

    @cached_property
    def adjacency(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {v: {} for v in self.vertices}
        for (a, b), w in self.edges.items():
            adj[a][b] = w
            adj[b][a] = w
        return adj

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary)

    def __len__(self) -> int:
        return len(self.interior) + len(self.boundary)

    def __contains__(self, v) -> bool:
        return v in self.index

    def neighbors(self, v: str) -> dict[str, float]:
        try:
            return self.adjacency[v]
        except KeyError:
            raise UnknownVertex(v) from None

    def degree(self, v: str) -> int:
        return len(self.neighbors(v))

    def is_boundary(self, v: str) -> bool:
        if v not in self.index:
            raise UnknownVertex(v)
        return v in self.boundary_set

    def weight_matrix(self) -> np.ndarray:
        """Dense symmetric matrix of edge weights in vertex order."""
        n = len(self)
        W = np.zeros((n, n))
        for (a, b), w in self.edges.items():
            i, j = self.index[a], self.index[b]
            W[i, j] = W[j, i] = w
        return W

    def mu_vector(self) -> np.ndarray:
        return np.array([self.mu[v] for v in self.vertices], dtype=float)

    def q_vector(self) -> np.ndarray:
        return np.array([self.q.get(v, 0.0) for v in self.interior], dtype=float)

    def with_potential(self, q: Mapping[str, float] | Sequence[float]) -> "WeightedBoundaryGraph":
        """Copy of the graph with the interior potential replaced."""
        if not isinstance(q, Mapping):
            q = dict(zip(self.interior, (float(x) for x in q)))
        unknown = set(q) - self.interior_set
        if unknown:
            raise UnknownVertex(f"potential on non-interior vertices {sorted(unknown)}")
        return WeightedBoundaryGraph(
            self.interior, self.boundary, self.edges, self.mu, dict(q), self.coords
        )

    def to_dict(self) -> dict:
        vertices = []
        for v in self.vertices:
            rec = {"id": v, "role": BOUNDARY if v in self.boundary_set else INTERIOR,
                   "mu": self.mu[v]}
            if v in self.coords:
                rec["coord"] = [float(c) for c in self.coords[v]]
            vertices.append(rec)
        edges = [{"a": a, "b": b, "g": w} for (a, b), w in self.edges.items()]
        q = {v: x for v, x in self.q.items() if x != 0.0}
        return {"vertices": vertices, "edges": edges, "q": q}

    def __repr__(self) -> str:
        return (f"WeightedBoundaryGraph(interior={self.n_interior}, "
                f"boundary={self.n_boundary}, edges={len(self.edges)})")


def build_graph(spec: Mapping) -> WeightedBoundaryGraph:
    """Validate a JSON-style description and return a graph.

    Parameters
    ----------
    spec : mapping
        ``{"vertices": [{"id", "role", "mu"?, "coord"?}], "edges": [{"a", "b",
        "g"?}], "q": {id: value}?}``. Missing ``mu`` defaults to the vertex
        degree, missing ``g`` to 1.

    Raises
    ------
    DuplicateVertex, DuplicateEdge, LoopEdge, NonpositiveWeight,
    IsolatedBoundaryVertex, UnknownVertex
    """
    interior: list[str] = []
    boundary: list[str] = []
    seen: set[str] = set()
    mu_given: dict[str, float] = {}
    coords: dict[str, tuple] = {}
    for rec in spec["vertices"]:
        vid = str(rec["id"])
        if vid in seen:
            raise DuplicateVertex(vid)
        seen.add(vid)
        role = rec.get("role", INTERIOR)
        if role == INTERIOR:
            interior.append(vid)
        elif role == BOUNDARY:
            boundary.append(vid)
        else:
            raise GraphValidationError(f"vertex {vid}: unknown role {role!r}")
        if rec.get("mu") is not None:
            mu_given[vid] = float(rec["mu"])
        if rec.get("coord") is not None:
            coords[vid] = tuple(rec["coord"])

    edges: dict[tuple[str, str], float] = {}
    for rec in spec.get("edges", ()):
        a, b = str(rec["a"]), str(rec["b"])
        if a == b:
            raise LoopEdge(f"loop at {a}")
        for v in (a, b):
            if v not in seen:
                raise UnknownVertex(v)
        key = edge_key(a, b)
        if key in edges:
            raise DuplicateEdge(f"{a} -- {b}")
        w = float(rec.get("g", 1.0))
        if not w > 0:
            raise NonpositiveWeight(f"edge {a} -- {b} has weight {w}")
        edges[key] = w

    degree = dict.fromkeys(seen, 0)
    for a, b in edges:
        degree[a] += 1
        degree[b] += 1
    for z in boundary:
        if degree[z] == 0:
            raise IsolatedBoundaryVertex(z)

    mu = {}
    for v in interior + boundary:
        m = mu_given.get(v, float(degree[v]))
        if not m > 0:
            raise NonpositiveWeight(f"vertex {v} has weight mu={m}")
        mu[v] = m

    q = {}
    for v, x in (spec.get("q") or {}).items():
        v = str(v)
        if v not in seen:
            raise UnknownVertex(v)
        if v not in interior:
            raise GraphValidationError(f"potential given on boundary vertex {v}")
        q[v] = float(x)

    return WeightedBoundaryGraph(tuple(interior), tuple(boundary), edges, mu, q, coords)


def load_graph(path) -> WeightedBoundaryGraph:
    with open(path) as fh:
        return build_graph(json.load(fh))


def save_graph(g: WeightedBoundaryGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(g.to_dict(), fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# distances and extreme points
# ---------------------------------------------------------------------------

def graph_distance(g: WeightedBoundaryGraph, v: str, w: str) -> int | None:
    """Number of edges on a shortest path from ``v`` to ``w``.

    Returns ``None`` when ``w`` is unreachable from ``v``.
    """
    if v not in g or w not in g:
        raise UnknownVertex(v if v not in g else w)
    if v == w:
        return 0
    dist = {v: 0}
    queue = deque([v])
    while queue:
        x = queue.popleft()
        for y in g.adjacency[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                if y == w:
                    return dist[y]
                queue.append(y)
    return None


def distance_matrix(g: WeightedBoundaryGraph) -> np.ndarray:
    """All-pairs hop distances in vertex order (``inf`` if unreachable)."""
    n = len(g)
    rows, cols = [], []
    for a, b in g.edges:
        rows.append(g.index[a])
        cols.append(g.index[b])
    A = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return csgraph.shortest_path(A, directed=False, unweighted=True)


def _interior_boundary_distances(g: WeightedBoundaryGraph) -> np.ndarray:
    D = distance_matrix(g)
    N = g.n_interior
    return D[:N, N:]


def extreme_points(g: WeightedBoundaryGraph, S: Iterable[str]) -> set[str]:
    """Extreme points of an interior subset with respect to the boundary.

    ``x0`` in ``S`` is extreme if some boundary vertex ``z`` is strictly
    closer to ``x0`` than to every other member of ``S``.
    """
    S = list(dict.fromkeys(S))
    if not S:
        raise EmptySubset("extreme points of an empty set")
    for x in S:
        if x not in g.interior_set:
            if x in g:
                raise GraphValidationError(f"{x} is not an interior vertex")
            raise UnknownVertex(x)
    Dz = _interior_boundary_distances(g)
    rows = [g.index[x] for x in S]
    return {S[i] for i in _extreme_rows(Dz[rows])}


def _extreme_rows(sub: np.ndarray) -> set[int]:
    # sub: |S| x m distances; a row is extreme iff it is the unique finite argmin of some column
    if sub.shape[0] == 1:
        return {0}
    colmin = sub.min(axis=0)
    hits = sub == colmin
    unique = (hits.sum(axis=0) == 1) & np.isfinite(colmin)
    return set(np.argmax(hits[:, unique], axis=0).tolist())


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the structural checks.

    ``c2`` is one of ``"verified"``, ``"violated"`` or ``"sampled"`` (no
    counterexample among ``c2_trials`` random subsets); ``None`` when the
    check was not run. ``c2_witness`` holds a violating subset.
    """

    c1: bool | None = None
    c1_prime: bool | None = None
    c2: str | None = None
    c2_witness: frozenset | None = None
    c2_trials: int | None = None
    notes: str = ""

    @property
    def two_points_ok(self) -> bool:
        return self.c2 in ("verified", "sampled")

    def to_dict(self) -> dict:
        return {
            "c1": self.c1,
            "c1_prime": self.c1_prime,
            "c2": self.c2,
            "c2_witness": sorted(self.c2_witness) if self.c2_witness is not None else None,
            "c2_trials": self.c2_trials,
            "notes": self.notes,
        }


def check_two_points_condition(g: WeightedBoundaryGraph, mode: str = "auto",
                               n_samples: int = DEFAULT_SAMPLES,
                               seed: int = 0) -> ConditionReport:
    """Check that every interior subset of size >= 2 has two extreme points.

    Parameters
    ----------
    mode : {"auto", "exhaustive", "sampled"}
        ``exhaustive`` enumerates all ``2**N`` subsets and is only allowed
        for ``N <= 20`` interior vertices; ``sampled`` draws ``n_samples``
        uniform random subsets and can only falsify. ``auto`` picks
        exhaustive whenever it is allowed.
    """
    N = g.n_interior
    if mode == "auto":
        mode = "exhaustive" if N <= EXHAUSTIVE_LIMIT else "sampled"
    Dz = _interior_boundary_distances(g)
    if mode == "exhaustive":
        if N > EXHAUSTIVE_LIMIT:
            raise TooLargeForExhaustive(f"{N} interior vertices (limit {EXHAUSTIVE_LIMIT})")
        witness = _two_points_exhaustive(Dz)
        if witness is None:
            return ConditionReport(c2="verified", notes=f"all 2^{N} subsets checked")
    elif mode == "sampled":
        witness = _two_points_sampled(Dz, n_samples, np.random.default_rng(seed))
        if witness is None:
            return ConditionReport(c2="sampled", c2_trials=n_samples,
                                   notes=f"{n_samples} random subsets, no counterexample")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    S = frozenset(g.interior[i] for i in witness)
    return ConditionReport(c2="violated", c2_witness=S, c2_trials=None if mode == "exhaustive"
                           else n_samples, notes="subset with fewer than two extreme points")


def _two_points_exhaustive(Dz: np.ndarray) -> tuple[int, ...] | None:
    N, m = Dz.shape
    if N < 2:
        return None
    size = 1 << N
    big = np.iinfo(np.int32).max
    D = np.where(np.isfinite(Dz), Dz, big).astype(np.int32)
    ext = np.zeros(size, dtype=np.int32)
    for col in range(m):
        cmin = np.full(size, big, dtype=np.int32)
        carg = np.zeros(size, dtype=np.int32)
        cuniq = np.zeros(size, dtype=bool)
        for b in range(N):
            lo, hi = 1 << b, 1 << (b + 1)
            prev_min, prev_arg, prev_uniq = cmin[:lo], carg[:lo], cuniq[:lo]
            d = D[b, col]
            better = d < prev_min
            tie = d == prev_min
            cmin[lo:hi] = np.where(better, d, prev_min)
            carg[lo:hi] = np.where(better, b, prev_arg)
            cuniq[lo:hi] = np.where(better, True, np.where(tie, False, prev_uniq))
        good = cuniq & (cmin < big)
        ext |= np.where(good, np.left_shift(1, carg, dtype=np.int32), 0).astype(np.int32)
    subsets = np.arange(size, dtype=np.int64)
    card = np.bitwise_count(subsets)
    n_ext = np.bitwise_count(ext)
    bad = np.flatnonzero((card >= 2) & (n_ext < 2))
    if bad.size == 0:
        return None
    s = int(bad[np.argmin(card[bad])])
    return tuple(i for i in range(N) if s >> i & 1)


def _two_points_sampled(Dz: np.ndarray, n: int, rng: np.random.Generator):
    N = Dz.shape[0]
    if N < 2:
        return None
    for _ in range(n):
        while True:
            mask = rng.random(N) < 0.5
            if mask.sum() >= 2:
                break
        rows = np.flatnonzero(mask)
        if len(_extreme_rows(Dz[rows])) < 2:
            return tuple(rows.tolist())
    return None


def check_boundary_structure(g: WeightedBoundaryGraph) -> ConditionReport:
    """Evaluate the boundary conditions C-1 and C-1'.

    C-1: every boundary vertex has exactly one neighbour, and it is interior
    (so boundary vertices are pairwise non-adjacent). C-1': for every
    boundary vertex, its interior neighbours are pairwise adjacent.
    """
    c1 = True
    c1p = True
    for z in g.boundary:
        nb = g.adjacency[z]
        inner = [x for x in nb if x in g.interior_set]
        if len(nb) != 1 or len(inner) != 1:
            c1 = False
        for x, y in itertools.combinations(inner, 2):
            if y not in g.adjacency[x]:
                c1p = False
                break
    return ConditionReport(c1=c1, c1_prime=c1p)


def boundary_neighborhood(g: WeightedBoundaryGraph) -> set[str]:
    """Boundary vertices together with the interior vertices adjacent to them."""
    out = set(g.boundary)
    for z in g.boundary:
        out.update(x for x in g.adjacency[z] if x in g.interior_set)
    return out


def boundary_isomorphic(g: WeightedBoundaryGraph, h: WeightedBoundaryGraph,
                        budget: int = 1_000_000) -> dict[str, str] | None:
    """Search for a boundary isomorphism between two graphs.

    Returns a bijection ``N(dG) -> N(dH)`` mapping boundary onto boundary and
    preserving adjacency between boundary vertices and vertices of the
    boundary neighbourhood, or ``None`` if none exists. Boundary vertices are
    assigned by backtracking (pruned by their degree into the neighbourhood
    and by pairwise adjacency / shared neighbours); the interior part is then
    forced up to permutations inside classes with equal boundary neighbours.

    Raises
    ------
    SearchBudgetExceeded
        if more than ``budget`` partial assignments are explored.
    """
    NG, NH = boundary_neighborhood(g), boundary_neighborhood(h)
    if g.n_boundary != h.n_boundary or len(NG) != len(NH):
        return None

    def profile(gr):
        # boundary vertex -> (set of N-neighbours that are interior, set of boundary neighbours)
        return {z: (frozenset(x for x in gr.adjacency[z] if x in gr.interior_set),
                    frozenset(x for x in gr.adjacency[z] if x in gr.boundary_set))
                for z in gr.boundary}

    pg, ph = profile(g), profile(h)
    zs = sorted(g.boundary, key=lambda z: (-len(pg[z][0]) - len(pg[z][1]), z))
    cands = {z: [w for w in h.boundary
                 if len(ph[w][0]) == len(pg[z][0]) and len(ph[w][1]) == len(pg[z][1])]
             for z in zs}
    if any(not c for c in cands.values()):
        return None

    explored = 0
    assign: dict[str, str] = {}
    used: set[str] = set()

    def consistent(z, w):
        for z2, w2 in assign.items():
            if (z2 in pg[z][1]) != (w2 in ph[w][1]):
                return False
            if len(pg[z][0] & pg[z2][0]) != len(ph[w][0] & ph[w2][0]):
                return False
        return True

    def finish():
        # interior part of N: y must go to y' whose boundary-neighbour set is the image
        def key(gr, y, phi=None):
            nb = frozenset(z for z in gr.adjacency[y] if z in gr.boundary_set)
            return frozenset(phi[z] for z in nb) if phi else nb

        classes_g: dict[frozenset, list] = {}
        for y in sorted(NG - g.boundary_set):
            classes_g.setdefault(key(g, y, assign), []).append(y)
        classes_h: dict[frozenset, list] = {}
        for y in sorted(NH - h.boundary_set):
            classes_h.setdefault(key(h, y), []).append(y)
        if {k: len(v) for k, v in classes_g.items()} != {k: len(v) for k, v in classes_h.items()}:
            return None
        phi = dict(assign)
        for k, ys in classes_g.items():
            phi.update(zip(ys, classes_h[k]))
        return phi

    def backtrack(i):
        nonlocal explored
        if i == len(zs):
            return finish()
        z = zs[i]
        for w in cands[z]:
            if w in used:
                continue
            explored += 1
            if explored > budget:
                raise SearchBudgetExceeded(f"more than {budget} partial assignments")
            if not consistent(z, w):
                continue
            assign[z] = w
            used.add(w)
            res = backtrack(i + 1)
            if res is not None:
                return res
            del assign[z]
            used.discard(w)
        return None

    return backtrack(0)


def is_connected(g: WeightedBoundaryGraph) -> bool:
    if len(g) == 0:
        return True
    start = g.vertices[0]
    seen = {start}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for y in g.adjacency[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == len(g)
