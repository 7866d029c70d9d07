"""
Discrete Schrödinger operators on graphs with boundary.

The operator is ``-Delta_G + q`` with

    (Delta_G u)(x) = 1/mu_x * sum_{y ~ x} g_xy (u(y) - u(x)),

acting on interior vertices, and the outward normal derivative at a
boundary vertex ``z`` is ``1/mu_z * sum_{x ~ z} g_xz (u(x) - u(z))``.
Energies are complex throughout. Matrices are dense: the package targets
graphs of at most a few thousand vertices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy import sparse

from .errors import ConditionC1Required, MapParseError, PoleAtEnergy, UnknownVertex
from .graph import WeightedBoundaryGraph, check_boundary_structure

POLE_RTOL = 1e-10
# eigenvalues closer than this (relative to the spectral scale) form one cluster
CLUSTER_RTOL = 1e-8

DIRICHLET = "dirichlet"
FULL = "full"


@dataclass(frozen=True, eq=False)
class BoundaryMap:
    """A D-N or N-D map at one energy, as an ``m x m`` complex matrix."""

    kind: str
    energy: complex
    matrix: np.ndarray
    boundary_order: tuple[str, ...]
    provenance: str = ""

    def __post_init__(self):
        if self.kind not in ("DN", "ND"):
            raise ValueError(f"kind must be 'DN' or 'ND', got {self.kind!r}")
        m = len(self.boundary_order)
        if self.matrix.shape != (m, m):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {m} boundary ids")

    def __matmul__(self, other):
        return self.matrix @ (other.matrix if isinstance(other, BoundaryMap) else other)


@dataclass(frozen=True, eq=False)
class BoundarySpectralData:
    """Neumann eigenvalues with their boundary residue matrices.

    ``residues[k]`` is ``Q_k = sum_l phi_l(z1) phi_l(z2)`` over an orthonormal
    eigenbasis of the ``k``-th eigenspace; ``multiplicities[k]`` is its
    dimension. ``traces[k]``, when present, is an ``m x #L_k`` factor with
    ``Q_k = B B^T``; it is only defined up to an orthogonal matrix.
    """

    eigenvalues: np.ndarray
    multiplicities: tuple[int, ...]
    residues: tuple[np.ndarray, ...]
    boundary_order: tuple[str, ...]
    traces: tuple[np.ndarray, ...] | None = field(default=None)

    @property
    def total(self) -> int:
        return int(sum(self.multiplicities))

    def __len__(self) -> int:
        return len(self.eigenvalues)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _interior_blocks(g: WeightedBoundaryGraph):
    """Symmetric stiffness ``L`` (all vertices) and the weight vector."""
    W = g.weight_matrix()
    L = np.diag(W.sum(axis=1)) - W
    return L, g.mu_vector()


def assemble_operator(g: WeightedBoundaryGraph, lam: complex = 0.0,
                      domain: str = DIRICHLET) -> sparse.csr_matrix:
    """Matrix of ``-Delta_G + q - lam`` on interior rows.

    Parameters
    ----------
    domain : {"dirichlet", "full"}
        ``dirichlet`` returns the ``N x N`` block acting on interior unknowns
        (boundary values belong on the right-hand side); ``full`` returns the
        ``N x (N + m)`` matrix acting on all vertices in graph order.
    """
    N = g.n_interior
    L, mu = _interior_blocks(g)
    A = L[:N] / mu[:N, None]
    A = A.astype(complex)
    A[np.arange(N), np.arange(N)] += g.q_vector() - lam
    if domain == DIRICHLET:
        A = A[:, :N]
    elif domain != FULL:
        raise ValueError(f"unknown domain {domain!r}")
    return sparse.csr_matrix(A)


def _guarded_solve(A: np.ndarray, B: np.ndarray, lam: complex, scale: float = 0.0) -> np.ndarray:
    # ``scale`` is the size of the operator the block came from, so that a
    # tiny block (P1 has a 1x1 one) is not judged against itself alone
    s = sla.svdvals(A)
    ref = max(s[0], scale) if s.size else 0.0
    if s.size and s[-1] <= POLE_RTOL * ref:
        raise PoleAtEnergy(lam, f"system singular at energy {lam} "
                                f"(sigma_min/scale = {s[-1] / ref if ref else 0.0:.2e})")
    return sla.solve(A, B)


def dirichlet_eigs(g: WeightedBoundaryGraph) -> np.ndarray:
    """Sorted eigenvalues of the interior Dirichlet operator."""
    N = g.n_interior
    L, mu = _interior_blocks(g)
    K = L[:N, :N] + np.diag(mu[:N] * g.q_vector())
    return sla.eigh(K, np.diag(mu[:N]), eigvals_only=True)


def _cluster(values: np.ndarray, scale: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups and abs(v - values[groups[-1][-1]]) <= CLUSTER_RTOL * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _boundary_anchor(g: WeightedBoundaryGraph) -> list[int]:
    """Index of the unique interior neighbour of each boundary vertex."""
    if not check_boundary_structure(g).c1:
        raise ConditionC1Required("Neumann elimination needs every boundary vertex "
                                  "to have exactly one, interior, neighbour")
    return [g.index[next(iter(g.adjacency[z]))] for z in g.boundary]


def neumann_eigs(g: WeightedBoundaryGraph) -> BoundarySpectralData:
    """Neumann eigenvalues and boundary residues of ``-Delta_G + q``.

    Under (C-1), ``d_nu phi = 0`` forces ``phi(z) = phi(x)`` for the unique
    neighbour ``x`` of ``z``, so the boundary edges drop out and the problem
    is the weighted Laplacian of the interior subgraph, normalized by
    ``sum_{x in G} mu_x phi(x)^2 = 1``.
    """
    anchor = _boundary_anchor(g)
    N = g.n_interior
    W = g.weight_matrix()[:N, :N]
    mu = g.mu_vector()[:N]
    K = np.diag(W.sum(axis=1)) - W + np.diag(mu * g.q_vector())
    vals, vecs = sla.eigh(K, np.diag(mu))
    traces = vecs[anchor]
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    eig, mult, res, tr = [], [], [], []
    for grp in _cluster(vals, scale):
        B = traces[:, grp]
        eig.append(float(vals[grp].mean()))
        mult.append(len(grp))
        res.append(B @ B.T)
        tr.append(B)
    return BoundarySpectralData(np.array(eig), tuple(mult), tuple(res), g.boundary, tuple(tr))


def solve_dirichlet_bvp(g: WeightedBoundaryGraph, lam: complex, f: Sequence[complex]) -> np.ndarray:
    """Solution on all vertices of ``(-Delta_G + q - lam) u = 0``, ``u = f`` on the boundary.

    Raises
    ------
    PoleAtEnergy
        when ``lam`` is (numerically) a Dirichlet eigenvalue.
    """
    f = np.asarray(f, dtype=complex)
    if f.shape != (g.n_boundary,):
        raise ValueError(f"expected {g.n_boundary} boundary values, got shape {f.shape}")
    U = _dirichlet_extension(g, lam)
    return U @ f


def _dirichlet_extension(g: WeightedBoundaryGraph, lam: complex) -> np.ndarray:
    # (N + m) x m matrix sending boundary data to the full solution
    N = g.n_interior
    A = assemble_operator(g, lam, FULL).toarray()
    if not N:
        return np.eye(g.n_boundary, dtype=complex)
    UI = _guarded_solve(A[:, :N], -A[:, N:], lam, np.linalg.norm(A, 2))
    return np.vstack([UI, np.eye(g.n_boundary)])


def _normal_derivative_rows(g: WeightedBoundaryGraph) -> np.ndarray:
    """``m x (N + m)`` matrix of the normal derivative at each boundary vertex."""
    N = g.n_interior
    L, mu = _interior_blocks(g)
    return -L[N:] / mu[N:, None]


def neumann_derivative(g: WeightedBoundaryGraph, u: Sequence[complex], z: str) -> complex:
    if z not in g.boundary_set:
        raise UnknownVertex(f"{z} is not a boundary vertex")
    u = np.asarray(u)
    iz = g.index[z]
    return sum(w * (u[g.index[x]] - u[iz]) for x, w in g.adjacency[z].items()) / g.mu[z]


def dn_map(g: WeightedBoundaryGraph, lam: complex) -> BoundaryMap:
    """Dirichlet-to-Neumann map: column ``j`` is the normal derivative of the
    solution with boundary data ``e_j``."""
    lam = complex(lam)
    M = _normal_derivative_rows(g) @ _dirichlet_extension(g, lam)
    return BoundaryMap("DN", lam, M, g.boundary, "discrete")


def _neumann_system(g: WeightedBoundaryGraph, lam: complex) -> np.ndarray:
    return np.vstack([assemble_operator(g, lam, FULL).toarray(),
                      _normal_derivative_rows(g).astype(complex)])


def nd_map(g: WeightedBoundaryGraph, lam: complex) -> BoundaryMap:
    """Neumann-to-Dirichlet map: boundary trace of the solution with
    ``d_nu u = f``.

    Raises
    ------
    PoleAtEnergy
        when ``lam`` is (numerically) a Neumann eigenvalue.
    """
    lam = complex(lam)
    N, m = g.n_interior, g.n_boundary
    rhs = np.vstack([np.zeros((N, m)), np.eye(m)])
    U = _guarded_solve(_neumann_system(g, lam), rhs, lam)
    return BoundaryMap("ND", lam, U[N:], g.boundary, "discrete")


def neumann_sigma_min(g: WeightedBoundaryGraph, lam: complex) -> float:
    """Relative smallest singular value of the Neumann system at ``lam``."""
    s = sla.svdvals(_neumann_system(g, lam))
    return float(s[-1] / s[0])


def weighted_transpose(M: np.ndarray, mu_b: np.ndarray) -> np.ndarray:
    """Adjoint of ``M`` for the real bilinear form ``<f, h> = sum mu_z f h``."""
    return (M.T * mu_b[None, :]) / mu_b[:, None]


# ---------------------------------------------------------------------------
# CSV dump
# ---------------------------------------------------------------------------

def format_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}i"


def parse_complex(text: str) -> complex:
    return complex(text.strip().replace("i", "j"))


def map_to_csv(bm: BoundaryMap) -> str:
    for z in bm.boundary_order:
        if "," in z or any(c.isspace() for c in z):
            raise ValueError(f"boundary id {z!r} cannot be written to the CSV header")
    lines = [f"# kind={bm.kind} energy={format_complex(bm.energy)} "
             f"order={','.join(bm.boundary_order)}"]
    for row in bm.matrix:
        cells = []
        for x in row:
            cells += [f"{x.real:.17g}", f"{x.imag:.17g}"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def map_from_csv(text: str) -> BoundaryMap:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise MapParseError("missing '# kind=... energy=... order=...' header")
    try:
        fields = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        kind, energy, order = fields["kind"], parse_complex(fields["energy"]), fields["order"]
    except KeyError as exc:
        raise MapParseError(f"header lacks {exc.args[0]!r}") from None
    except ValueError as exc:
        raise MapParseError(f"bad header: {exc}") from None
    ids = tuple(order.split(",")) if order else ()
    m = len(ids)
    rows = []
    for n, ln in enumerate(lines[1:], start=2):
        try:
            vals = [float(c) for c in ln.split(",")]
        except ValueError:
            raise MapParseError(f"line {n}: non-numeric entry") from None
        if len(vals) != 2 * m:
            raise MapParseError(f"line {n}: expected {2 * m} columns, got {len(vals)}")
        rows.append(np.array(vals[0::2]) + 1j * np.array(vals[1::2]))
    if len(rows) != m:
        raise MapParseError(f"expected {m} rows, got {len(rows)}")
    try:
        return BoundaryMap(kind, energy, np.array(rows, dtype=complex).reshape(m, m), ids, "csv")
    except ValueError as exc:
        raise MapParseError(str(exc)) from None


def write_map_csv(bm: BoundaryMap, path) -> None:
    with open(path, "w") as fh:
        fh.write(map_to_csv(bm))


def read_map_csv(path) -> BoundaryMap:
    with open(path) as fh:
        return map_from_csv(fh.read())
