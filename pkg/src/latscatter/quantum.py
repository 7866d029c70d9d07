"""
Metric (quantum) graphs and their reduction to vertex problems.

Each edge ``e = (a, b)`` (the sorted edge key of the underlying graph) is
the interval ``[0, l_e]`` with ``e(0) = a`` and ``e(l_e) = b``, carrying
``h_e = -d^2/dz^2 + V_e`` with a potential symmetric about the midpoint.
Vertices carry the delta coupling ``sum_e u_e'(v) = C_v u(v)``, where
``u_e'(v)`` is the derivative pointing away from ``v`` into ``e``.

``phi0`` solves ``(h_e - lam) phi = 0`` with ``phi0(0) = 0, phi0'(0) = 1``
and ``phi1(z) = phi0(l - z)``. On an edge with end values ``u(a), u(b)``

    u_e'(a) = (u(b) - u(a) phi0'(l)) / phi0(l),

which turns the coupling condition into the lambda-dependent vertex operator
of :func:`reduced_vertex_operator`.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg as sla
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import spsolve

from .discrete import BoundaryMap
from .errors import (
    ConditionC1Required,
    EdgeDirichletEigenvalue,
    PoleAtEnergy,
    SingularVertexSystem,
    WronskianDrift,
)
from .graph import WeightedBoundaryGraph, build_graph, check_boundary_structure

SERIES_CUTOFF = 1e-4
STEPS_PER_UNIT = 1024
EDGE_POLE_TOL = 1e-12
WRONSKIAN_TOL = 1e-9


# ---------------------------------------------------------------------------
# edge models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeModel:
    """Edge length and potential. ``potential=None`` means ``V = 0``."""

    length: float = 1.0
    potential: Callable[[np.ndarray], np.ndarray] | None = None
    symmetric: bool = True

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"edge length must be positive, got {self.length}")
        if not self.symmetric:
            raise ValueError("only potentials symmetric about the edge midpoint are supported")
        if self.potential is not None:
            z = np.linspace(0, self.length, 17)
            V = np.asarray(self.potential(z), dtype=float)
            if np.abs(V - V[::-1]).max() > 1e-12:
                raise ValueError("edge potential is not symmetric about the midpoint")

    @property
    def is_zero(self) -> bool:
        return self.potential is None

    def V(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return np.zeros_like(z) if self.potential is None else np.asarray(self.potential(z), float)


def tabulated_potential(path) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-linear potential from a ``z,V`` CSV table on a uniform grid."""
    zs, vs = [], []
    with open(path) as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith(("#", "z")):
                continue
            zs.append(float(row[0]))
            vs.append(float(row[1]))
    zs, vs = np.array(zs), np.array(vs)
    if len(zs) < 2 or np.ptp(np.diff(zs)) > 1e-9 * max(1.0, zs[-1]):
        raise ValueError("potential table must be a uniform grid with at least two rows")
    return lambda z: np.interp(z, zs, vs)


@dataclass(frozen=True)
class TransferData:
    phi0_at_l: complex
    dphi0_at_l: complex
    wronskian: complex
    energy: complex


def _taylor_sinc(x2: complex, terms: int = 6) -> complex:
    # sin(s)/s with x2 = s^2
    return sum((-x2) ** n / factorial(2 * n + 1) for n in range(terms))


def _taylor_cos(x2: complex, terms: int = 6) -> complex:
    return sum((-x2) ** n / factorial(2 * n) for n in range(terms))


def _free_phi(lam: complex, z) -> tuple[np.ndarray, np.ndarray]:
    """``phi0(z) = sin(k z)/k`` and its derivative for ``V = 0``."""
    z = np.asarray(z, dtype=float)
    k = np.sqrt(complex(lam))
    small = np.abs(k * z) < SERIES_CUTOFF
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = np.where(small, 0, np.sin(k * z) / (k if k != 0 else 1))
        dphi = np.cos(k * z)
    if np.any(small):
        x2 = lam * z[small] ** 2
        phi = np.array(phi, dtype=complex)
        phi[small] = z[small] * np.vectorize(_taylor_sinc)(x2)
        dphi = np.array(dphi, dtype=complex)
        dphi[small] = np.vectorize(_taylor_cos)(x2)
    return np.asarray(phi, dtype=complex), np.asarray(dphi, dtype=complex)


def _rk4_phi0(model: EdgeModel, lam: complex):
    n = max(8, int(np.ceil(STEPS_PER_UNIT * model.length)))
    h = model.length / n
    z = np.linspace(0, model.length, n + 1)
    Vn = model.V(z)
    Vm = model.V(z[:-1] + h / 2)
    y = np.empty((n + 1, 2), dtype=complex)
    y[0] = (0, 1)

    def rhs(yy, Vz):
        return np.array([yy[1], (Vz - lam) * yy[0]])

    for i in range(n):
        k1 = rhs(y[i], Vn[i])
        k2 = rhs(y[i] + h / 2 * k1, Vm[i])
        k3 = rhs(y[i] + h / 2 * k2, Vm[i])
        k4 = rhs(y[i] + h * k3, Vn[i + 1])
        y[i + 1] = y[i] + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return z, y


@lru_cache(maxsize=4096)
def _transfer_cached(model: EdgeModel, lam: complex) -> TransferData:
    ell = model.length
    if model.is_zero:
        phi, dphi = _free_phi(lam, np.array([ell]))
        return TransferData(complex(phi[0]), complex(dphi[0]), -complex(phi[0]), lam)
    z, y = _rk4_phi0(model, lam)
    n = len(z) - 1
    # phi1(z) = phi0(l - z), phi1'(z) = -phi0'(l - z) on the symmetric grid
    checks = (0, n // 2, n)
    W = [y[i, 0] * (-y[n - i, 1]) - y[i, 1] * y[n - i, 0] for i in checks]
    drift = max(abs(w - W[0]) for w in W)
    if drift > WRONSKIAN_TOL * max(1.0, abs(W[0])):
        raise WronskianDrift(f"Wronskian drift {drift:.2e} at energy {lam}")
    return TransferData(complex(y[n, 0]), complex(y[n, 1]), complex(W[0]), lam)


def edge_transfer(model: EdgeModel, lam: complex) -> TransferData:
    """``phi0(l)``, ``phi0'(l)`` and the Wronskian ``W(phi0, phi1) = -phi0(l)``.

    ``V = 0`` uses the closed form (with a Taylor branch near ``lam l^2 = 0``);
    other potentials use fixed-step RK4 with 1024 steps per unit length and
    check that the Wronskian is constant along the edge.

    Raises
    ------
    WronskianDrift
        if the Wronskian varies by more than ``1e-9`` (relative).
    """
    return _transfer_cached(model, complex(lam))


def edge_solutions(model: EdgeModel, lam: complex, z) -> tuple[np.ndarray, np.ndarray]:
    """``phi0(z)`` and ``phi1(z)`` at arbitrary points of the edge."""
    z = np.asarray(z, dtype=float)
    if model.is_zero:
        return _free_phi(lam, z)[0], _free_phi(lam, model.length - z)[0]
    ell = model.length
    pts = np.unique(np.concatenate([z, ell - z]))
    sol = solve_ivp(lambda t, y: [y[1], (model.V(t) - lam) * y[0]], (0, ell),
                    np.array([0, 1], dtype=complex), method="DOP853", t_eval=pts,
                    rtol=1e-12, atol=1e-14)
    phi = dict(zip(pts, sol.y[0]))
    return (np.array([phi[t] for t in z]), np.array([phi[t] for t in ell - z]))


# ---------------------------------------------------------------------------
# band map
# ---------------------------------------------------------------------------

def E_of_lambda(lam, kappa: float = 0.0):
    """``E(lam) = -cos(sqrt lam) - kappa sin(sqrt lam)/sqrt lam`` (entire in ``lam``)."""
    lam_a = np.asarray(lam, dtype=complex)
    flat = lam_a.ravel()
    phi = np.empty_like(flat)
    dphi = np.empty_like(flat)
    for i, l in enumerate(flat):
        p, dp = _free_phi(l, np.array([1.0]))
        phi[i], dphi[i] = p[0], dp[0]
    out = -dphi - kappa * phi
    return out.reshape(lam_a.shape) if lam_a.ndim else complex(out[0])


def vertex_energy_of_lambda(lam, kappa: float = 0.0):
    """``-sqrt(lam) cot(sqrt lam) - kappa``, i.e. ``E(lam) sqrt(lam)/sin(sqrt lam)``.

    Raises
    ------
    EdgeDirichletEigenvalue
        at ``lam = (pi j)^2``, ``j >= 1``.
    """
    lam_a = np.asarray(lam, dtype=complex)
    flat = lam_a.ravel()
    out = np.empty_like(flat)
    for i, l in enumerate(flat):
        phi, dphi = _free_phi(l, np.array([1.0]))
        if abs(phi[0]) < EDGE_POLE_TOL:
            raise EdgeDirichletEigenvalue(f"sin(sqrt(lam)) = 0 at lam = {l}")
        out[i] = -dphi[0] / phi[0] - kappa
    return out.reshape(lam_a.shape) if lam_a.ndim else complex(out[0])


def unperturbed_spectrum_membership(lam: float, kappa: float = 0.0,
                                    vertex_spectrum: Sequence[tuple[float, float]] = ((-1.0, 1.0),),
                                    tol: float = 1e-12) -> bool:
    """Whether ``lam`` lies in the spectrum of the periodic equilateral graph.

    True iff ``E(lam)`` is in the vertex spectrum or ``lam`` is a Dirichlet
    eigenvalue ``(pi j)^2`` of a single edge.
    """
    lam = float(lam)
    if lam > 0:
        j = round(np.sqrt(lam) / np.pi)
        if j >= 1 and abs(lam - (np.pi * j) ** 2) <= 1e-9 * lam:
            return True
    E = complex(E_of_lambda(lam, kappa)).real
    return any(lo - tol <= E <= hi + tol for lo, hi in vertex_spectrum)


# ---------------------------------------------------------------------------
# metric graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetricGraph:
    """Combinatorial graph plus edge models and delta couplings.

    ``edge_model`` is either one :class:`EdgeModel` shared by all edges
    (equilateral mode) or a mapping from edge keys to models. Couplings are
    ``C_v = kappa * d_v`` unless ``coupling`` gives them explicitly.
    """

    graph: WeightedBoundaryGraph
    edge_model: EdgeModel | Mapping[tuple[str, str], EdgeModel] = field(default_factory=EdgeModel)
    kappa: float = 0.0
    coupling: Mapping[str, float] | None = None

    @property
    def equilateral(self) -> bool:
        return isinstance(self.edge_model, EdgeModel)

    def model(self, edge: tuple[str, str]) -> EdgeModel:
        return self.edge_model if self.equilateral else self.edge_model[edge]

    def C(self, v: str) -> float:
        if self.coupling is not None and v in self.coupling:
            return float(self.coupling[v])
        return self.kappa * self.graph.degree(v)


def load_metric_graph(path) -> MetricGraph:
    """Graph JSON with a ``"metric": {"length", "potential", "kappa"}`` block."""
    with open(path) as fh:
        data = json.load(fh)
    meta = data.get("metric", {})
    pot = meta.get("potential", "zero")
    V = None if pot in (None, "zero") else tabulated_potential(pot)
    model = EdgeModel(float(meta.get("length", 1.0)), V)
    return MetricGraph(build_graph(data), model, float(meta.get("kappa", 0.0)))


def _edge_factors(mg: MetricGraph, lam: complex):
    out = {}
    for e in mg.graph.edges:
        t = edge_transfer(mg.model(e), lam)
        if abs(t.phi0_at_l) < EDGE_POLE_TOL:
            raise EdgeDirichletEigenvalue(f"phi0(l) = 0 on edge {e} at energy {lam}")
        out[e] = t
    return out


def reduced_vertex_operator(mg: MetricGraph, lam: complex) -> np.ndarray:
    """Matrix of the vertex operator ``-Delta_{V,lam} + Q_{V,lam}`` on all vertices.

    Row ``v`` reads ``-(1/d_v) sum_e u(w)/phi0(l_e) + [(1/d_v) sum_e
    phi0'(l_e)/phi0(l_e) + C_v/d_v] u(v)``. In equilateral mode with ``V = 0``
    and ``l = 1`` it equals ``(sqrt lam / sin sqrt lam)(-Delta_V - E(lam))``
    with ``-Delta_V`` the normalized adjacency average.
    """
    g = mg.graph
    n = len(g)
    M = np.zeros((n, n), dtype=complex)
    for (a, b), t in _edge_factors(mg, complex(lam)).items():
        i, j = g.index[a], g.index[b]
        M[i, j] -= 1 / t.phi0_at_l
        M[j, i] -= 1 / t.phi0_at_l
        M[i, i] += t.dphi0_at_l / t.phi0_at_l
        M[j, j] += t.dphi0_at_l / t.phi0_at_l
    d = np.array([g.degree(v) for v in g.vertices], dtype=float)
    M[np.diag_indices(n)] += np.array([mg.C(v) for v in g.vertices])
    return M / d[:, None]


def _boundary_edges(mg: MetricGraph):
    g = mg.graph
    if not check_boundary_structure(g).c1:
        raise ConditionC1Required("metric D-N maps need one boundary edge per boundary vertex")
    return [(z, next(iter(g.adjacency[z]))) for z in g.boundary]


def _vertex_solution(mg: MetricGraph, lam: complex) -> np.ndarray:
    """All vertex values (rows) for boundary data ``e_j`` (columns)."""
    g = mg.graph
    N = g.n_interior
    M = reduced_vertex_operator(mg, lam)
    A = M[:N, :N]
    s = sla.svdvals(A) if N else np.array([1.0])
    if s[-1] <= 1e-10 * max(s[0], np.linalg.norm(M, 2)):
        raise PoleAtEnergy(lam, f"vertex problem singular at energy {lam}")
    UI = sla.solve(A, -M[:N, N:]) if N else np.zeros((0, g.n_boundary))
    return np.vstack([UI, np.eye(g.n_boundary)])


def translation_coefficients(mg: MetricGraph, lam: complex) -> tuple[np.ndarray, np.ndarray]:
    """Per boundary vertex: ``1/phi0(l_e)`` and ``phi0'(l_e)/phi0(l_e)`` on its edge."""
    inv, ratio = [], []
    for z, x in _boundary_edges(mg):
        t = edge_transfer(mg.model((z, x) if z <= x else (x, z)), complex(lam))
        if abs(t.phi0_at_l) < EDGE_POLE_TOL:
            raise EdgeDirichletEigenvalue(f"phi0(l) = 0 on the edge at {z}")
        inv.append(1 / t.phi0_at_l)
        ratio.append(t.dphi0_at_l / t.phi0_at_l)
    return np.array(inv), np.array(ratio)


def vertex_dn_map(mg: MetricGraph, lam: complex) -> BoundaryMap:
    """Vertex D-N map ``f -> u(w)/phi0(l_e)`` with ``w`` the neighbour of ``z``."""
    lam = complex(lam)
    g = mg.graph
    U = _vertex_solution(mg, lam)
    inv, _ = translation_coefficients(mg, lam)
    rows = [g.index[x] for _, x in _boundary_edges(mg)]
    return BoundaryMap("DN", lam, inv[:, None] * U[rows], g.boundary, "vertex")


def metric_dn_map(mg: MetricGraph, lam: complex) -> BoundaryMap:
    """Edge D-N map: boundary data ``f`` to ``u_e'(z)`` on each boundary edge."""
    lam = complex(lam)
    V = vertex_dn_map(mg, lam)
    _, ratio = translation_coefficients(mg, lam)
    return BoundaryMap("DN", lam, V.matrix - np.diag(ratio), mg.graph.boundary, "edge")


def translate_dn(bm: BoundaryMap, direction: str, mg: MetricGraph) -> BoundaryMap:
    """Convert between the edge and vertex D-N maps at ``bm.energy``.

    ``direction`` is ``"edge-to-vertex"`` or ``"vertex-to-edge"``; only the
    edges next to the boundary enter.
    """
    _, ratio = translation_coefficients(mg, bm.energy)
    if direction == "edge-to-vertex":
        M, tag = bm.matrix + np.diag(ratio), "vertex"
    elif direction == "vertex-to-edge":
        M, tag = bm.matrix - np.diag(ratio), "edge"
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return BoundaryMap(bm.kind, bm.energy, M, bm.boundary_order, tag)


def shooting_dn_map(mg: MetricGraph, lam: complex) -> BoundaryMap:
    """Edge D-N map by direct shooting, independent of the vertex reduction.

    Each edge solution is ``a_e y1 + b_e y2`` with fundamental solutions from
    an adaptive high-order integrator; continuity, Dirichlet data and the
    delta couplings give a square linear system for all ``(a_e, b_e)``.
    """
    lam = complex(lam)
    g = mg.graph
    _boundary_edges(mg)
    edges = list(g.edges)
    eidx = {e: k for k, e in enumerate(edges)}
    ends = {}
    for e in edges:
        model = mg.model(e)
        y1 = solve_ivp(lambda t, y: [y[1], (model.V(t) - lam) * y[0]], (0, model.length),
                       np.array([1, 0], dtype=complex), method="DOP853", rtol=1e-13, atol=1e-15)
        y2 = solve_ivp(lambda t, y: [y[1], (model.V(t) - lam) * y[0]], (0, model.length),
                       np.array([0, 1], dtype=complex), method="DOP853", rtol=1e-13, atol=1e-15)
        ends[e] = (y1.y[:, -1], y2.y[:, -1])

    def value_row(e, at_start):
        row = np.zeros(2 * len(edges), dtype=complex)
        k = eidx[e]
        if at_start:
            row[2 * k] = 1
        else:
            row[2 * k], row[2 * k + 1] = ends[e][0][0], ends[e][1][0]
        return row

    def out_derivative_row(e, at_start):
        row = np.zeros(2 * len(edges), dtype=complex)
        k = eidx[e]
        if at_start:
            row[2 * k + 1] = 1
        else:
            row[2 * k], row[2 * k + 1] = -ends[e][0][1], -ends[e][1][1]
        return row

    rows, rhs_rows = [], []
    bpos = {z: j for j, z in enumerate(g.boundary)}
    for v in g.vertices:
        inc = [(e, e[0] == v) for e in edges if v in e]
        if v in bpos:
            for e, s in inc:
                rows.append(value_row(e, s))
                rhs_rows.append(bpos[v])
            continue
        for e, s in inc[1:]:
            rows.append(value_row(e, s) - value_row(*inc[0]))
            rhs_rows.append(None)
        rows.append(sum(out_derivative_row(e, s) for e, s in inc) - mg.C(v) * value_row(*inc[0]))
        rhs_rows.append(None)
    A = np.array(rows)
    B = np.zeros((len(rows), g.n_boundary), dtype=complex)
    for r, j in enumerate(rhs_rows):
        if j is not None:
            B[r, j] = 1
    coef = sla.solve(A, B)
    M = np.array([out_derivative_row(*[(e, e[0] == z) for e in edges if z in e][0]) @ coef
                  for z in g.boundary])
    return BoundaryMap("DN", lam, M, g.boundary, "shooting")


# ---------------------------------------------------------------------------
# Krein resolvent identity
# ---------------------------------------------------------------------------

def _poly(coeffs, z):
    return np.polynomial.polynomial.polyval(z, np.asarray(coeffs, dtype=complex)) if len(coeffs) \
        else np.zeros_like(z, dtype=complex)


def _fd_resolvent(mg: MetricGraph, lam: complex, f: Mapping, n: int):
    """Second-order finite differences for ``(H - lam) u = f`` on the whole graph.

    Returns the vertex values and, per edge, the nodal values (including the
    end points) on a uniform grid of ``n`` intervals.
    """
    g = mg.graph
    nv = len(g)
    edges = list(g.edges)
    offset = {}
    total = nv
    for e in edges:
        offset[e] = total
        total += n - 1
    rows, cols, vals = [], [], []
    rhs = np.zeros(total, dtype=complex)

    def node(e, i):
        if i == 0:
            return g.index[e[0]]
        if i == n:
            return g.index[e[1]]
        return offset[e] + i - 1

    for v in g.vertices:
        rows.append(g.index[v]); cols.append(g.index[v]); vals.append(-mg.C(v))
    for e in edges:
        model = mg.model(e)
        ell = model.length
        h = ell / n
        z = np.linspace(0, ell, n + 1)
        Vz = model.V(z)
        fz = _poly(f.get(e, ()), z)
        for i in range(1, n):
            r = node(e, i)
            rows += [r, r, r]
            cols += [node(e, i - 1), r, node(e, i + 1)]
            vals += [-1 / h**2, 2 / h**2 + Vz[i] - lam, -1 / h**2]
            rhs[r] = fz[i]
        # outgoing derivative at each end, second order: (u1 - u0)/h - h/2 u''(end)
        for end, nb in ((0, 1), (n, n - 1)):
            r = node(e, end)
            rows += [r, r]
            cols += [node(e, nb), r]
            vals += [1 / h, -1 / h - h / 2 * (Vz[end] - lam)]
            rhs[r] -= h / 2 * fz[end]
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(total, total), dtype=complex)
    u = spsolve(A.tocsc(), rhs)
    return {e: np.array([u[node(e, i)] for i in range(n + 1)]) for e in edges}


def krein_right_side(mg: MetricGraph, lam: complex, f: Mapping, n: int = STEPS_PER_UNIT,
                     quad: int = 8) -> dict:
    """Nodal values of ``P (-Delta_{V,lam} + Q_{V,lam})^{-1} T f + r(lam) f``.

    ``T f(v) = (1/d_v) sum_e int psi_{e,v} f`` with ``psi_{e,v}`` the edge
    solution equal to 1 at ``v`` and 0 at the other end; ``P`` interpolates
    vertex values with the same ``psi`` (the adjoint of ``T`` at ``conj(lam)``
    in the degree-weighted vertex product); ``r(lam)`` is the Dirichlet edge
    resolvent. Integrals use Gauss-Legendre on each of the ``n`` cells.
    """
    g = mg.graph
    lam = complex(lam)
    M = reduced_vertex_operator(mg, lam)
    s = sla.svdvals(M)
    if s[-1] <= 1e-12 * s[0]:
        raise SingularVertexSystem(f"vertex operator singular at energy {lam}")
    xg, wg = np.polynomial.legendre.leggauss(quad)
    Tf = np.zeros(len(g), dtype=complex)
    pieces = {}
    for e in g.edges:
        model = mg.model(e)
        ell = model.length
        z = np.linspace(0, ell, n + 1)
        h = ell / n
        zq = (z[:-1, None] + h / 2 * (xg[None, :] + 1)).ravel()
        wq = np.tile(wg * h / 2, n)
        fq = _poly(f.get(e, ()), zq)
        p0q, p1q = edge_solutions(model, lam, zq)
        p0z, p1z = edge_solutions(model, lam, z)
        L = edge_transfer(model, lam).phi0_at_l
        # cumulative integrals of phi0 f and phi1 f from 0 to each node
        c0 = np.concatenate([[0], np.cumsum((p0q * fq * wq).reshape(n, quad).sum(axis=1))])
        c1 = np.concatenate([[0], np.cumsum((p1q * fq * wq).reshape(n, quad).sum(axis=1))])
        w = (p1z * c0 + p0z * (c1[-1] - c1)) / L
        # int psi_{e,a} f = int phi1 f / L, int psi_{e,b} f = int phi0 f / L
        Tf[g.index[e[0]]] += c1[-1] / L
        Tf[g.index[e[1]]] += c0[-1] / L
        pieces[e] = (p0z / L, p1z / L, w)
    d = np.array([g.degree(v) for v in g.vertices], dtype=float)
    U = sla.solve(M, Tf / d)
    return {e: U[g.index[e[0]]] * psi_a + U[g.index[e[1]]] * psi_b + w
            for e, (psi_b, psi_a, w) in pieces.items()}


def krein_resolvent_check(mg: MetricGraph, lam: complex, f: Mapping, n: int = STEPS_PER_UNIT,
                          richardson: bool = True) -> float:
    """Relative L2 discrepancy between the two sides of the Krein formula.

    The left side solves ``(H - lam) u = f`` by finite differences on ``n``
    cells per edge (and ``2n`` for a Richardson step when ``richardson``);
    all vertices of the graph carry the delta coupling. ``f`` maps edge keys
    to polynomial coefficients (lowest degree first) in the edge coordinate.

    Raises
    ------
    SingularVertexSystem
        if the reduced vertex operator is not invertible at ``lam``.
    """
    lam = complex(lam)
    if lam.imag == 0:
        raise ValueError("the resolvent check needs a non-real energy")
    f = {k: v for k, v in f.items() if np.any(np.asarray(v) != 0)}
    if not f:
        return 0.0
    rhs = krein_right_side(mg, lam, f, n)
    lhs = _fd_resolvent(mg, lam, f, n)
    if richardson:
        fine = _fd_resolvent(mg, lam, f, 2 * n)
        lhs = {e: (4 * fine[e][::2] - lhs[e]) / 3 for e in lhs}
    num = den = 0.0
    for e in rhs:
        h = mg.model(e).length / n
        wts = np.full(n + 1, h)
        wts[[0, -1]] = h / 2
        num += float(np.sum(wts * np.abs(lhs[e] - rhs[e]) ** 2))
        den += float(np.sum(wts * np.abs(rhs[e]) ** 2))
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))
