"""
Floquet bands, assumption checks and truncated scattering computations.

Lattice energies here refer to the lattice operator
``(H u)(v) = -(1/deg v) sum_{w ~ v} u(w)`` (plus a potential). On a patch
with ``mu = deg`` and unit weights this is the graph operator
``-Delta_G - 1``, so the interior maps of :mod:`latscatter.discrete` are
evaluated at graph energy ``lam + 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy import optimize, sparse
from scipy.sparse.linalg import splu

from . import discrete
from .discrete import BoundaryMap
from .errors import InteriorEigenvalue, NotConverged, PoleAtEnergy, ThresholdEnergy
from .graph import WeightedBoundaryGraph
from .lattice import (
    FloquetModel,
    LatticeKind,
    floquet_model,
    lattice_ball,
    lattice_neighbors,
    parse_site_id,
)

FLAG_TOL = 1e-6
GRAD_STEP = 1e-5
NEWTON_ITERS = 60


@dataclass(frozen=True)
class BandSample:
    x: np.ndarray
    eigenvalues: np.ndarray
    projections: np.ndarray  # (s, s, s): projections[j] onto band j


def band_eigs(model: FloquetModel, x) -> BandSample:
    """Sorted band energies and spectral projections of ``H0(x)``."""
    x = np.asarray(x, dtype=float)
    w, U = np.linalg.eigh(model(x))
    P = np.einsum("ij,kj->jik", U, U.conj())
    return BandSample(x, w, P)


def torus_grid(d: int, n: int) -> np.ndarray:
    """``n**d`` points ``2 pi k / n`` of the torus, shape ``(n**d, d)``."""
    axes = np.meshgrid(*([2 * np.pi * np.arange(n) / n] * d), indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=-1)


def band_grid(model: FloquetModel, n: int) -> tuple[np.ndarray, np.ndarray]:
    x = torus_grid(model.d, n)
    return x, np.linalg.eigvalsh(model(x))


def _merge(intervals, tol=1e-9):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1] + tol:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def spectrum_interval(model: FloquetModel, grid_n: int = 256) -> list[tuple[float, float]]:
    """Union of the band ranges: grid extrema refined by local optimisation."""
    if grid_n < 32:
        raise ValueError("grid_n must be at least 32")
    x, w = band_grid(model, grid_n)
    out = []
    for j in range(model.s):

        def band(y, sign):
            return sign * np.linalg.eigvalsh(model(y))[j]

        lo_hi = []
        for sign in (1, -1):
            x0 = x[np.argmin(sign * w[:, j])]
            res = optimize.minimize(band, x0, args=(sign,), method="Nelder-Mead",
                                    options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
            lo_hi.append(sign * min(res.fun, (sign * w[:, j]).min()))
        out.append((float(lo_hi[0]), float(lo_hi[1])))
    return _merge(out)


# ---------------------------------------------------------------------------
# assumption checks
# ---------------------------------------------------------------------------

def _p(model: FloquetModel, x: np.ndarray, lam: float) -> np.ndarray:
    H = model(x) - lam * np.eye(model.s)
    return np.linalg.det(H).real


def _grad_p(model: FloquetModel, x: np.ndarray, lam: float, h: float = GRAD_STEP) -> np.ndarray:
    g = np.empty(x.shape)
    for j in range(model.d):
        e = np.zeros(model.d)
        e[j] = h
        g[..., j] = (_p(model, x + e, lam) - _p(model, x - e, lam)) / (2 * h)
    return g


@dataclass
class AssumptionReport:
    """Level-set diagnostics per probe energy.

    ``d2_min_gap`` and ``d3_min_grad`` are minima over all probes; the
    per-probe values and the points attaining them are in ``per_probe``.
    """

    d2_min_gap: float
    d3_min_grad: float
    threshold_candidates: list[float]
    grid: int
    per_probe: dict[float, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "d2_min_gap": self.d2_min_gap,
            "d3_min_grad": self.d3_min_grad,
            "threshold_candidates": self.threshold_candidates,
            "grid": self.grid,
            "per_probe": {repr(k): v for k, v in self.per_probe.items()},
        }


def _level_set(model: FloquetModel, lam: float, x: np.ndarray, h: float) -> np.ndarray:
    """Grid points near ``p = 0``, Newton-projected onto the level set."""
    p = _p(model, x, lam)
    g = _grad_p(model, x, lam)
    slope = np.linalg.norm(g, axis=-1).max()
    pts = x[np.abs(p) <= max(slope, 1e-12) * h]
    for _ in range(NEWTON_ITERS):
        p = _p(model, pts, lam)
        g = _grad_p(model, pts, lam)
        n2 = (g * g).sum(axis=-1)
        move = np.where(n2 > 1e-300, p / np.where(n2 > 1e-300, n2, 1), 0.0)
        # keep each step within one grid cell so points stay near where they started
        step = move[:, None] * g
        size = np.linalg.norm(step, axis=-1)
        step *= np.minimum(1, h / np.maximum(size, 1e-300))[:, None]
        pts = pts - step
    ok = np.abs(_p(model, pts, lam)) < 1e-8
    return pts[ok]


def check_assumptions(model: FloquetModel, probes: Sequence[float], grid_n: int = 256,
                      tol: float = FLAG_TOL) -> AssumptionReport:
    """Sample the Fermi surfaces ``{det(H0(x) - lam) = 0}`` and flag thresholds.

    A probe is a threshold candidate when the smallest ``|grad_x p|`` or the
    smallest distance between distinct bands on its level set is below
    ``tol``.
    """
    x = torus_grid(model.d, grid_n)
    h = 2 * np.pi / grid_n
    flagged, per = [], {}
    min_gap = min_grad = np.inf
    for lam in probes:
        lam = float(lam)
        pts = _level_set(model, lam, x, h)
        if len(pts) == 0:
            per[lam] = {"points": 0, "min_grad": None, "min_gap": None}
            continue
        grads = np.linalg.norm(_grad_p(model, pts, lam), axis=-1)
        if model.s > 1:
            w = np.linalg.eigvalsh(model(pts))
            gaps = np.diff(w, axis=-1).min(axis=-1)
        else:
            gaps = np.full(len(pts), np.inf)
        ig, jg = int(np.argmin(grads)), int(np.argmin(gaps))
        per[lam] = {"points": int(len(pts)),
                    "min_grad": float(grads[ig]), "argmin_grad": pts[ig].tolist(),
                    "min_gap": float(gaps[jg]), "argmin_gap": pts[jg].tolist()}
        min_grad = min(min_grad, float(grads[ig]))
        min_gap = min(min_gap, float(gaps[jg]))
        if grads[ig] < tol or gaps[jg] < tol:
            flagged.append(lam)
    return AssumptionReport(min_gap, min_grad, flagged, grid_n, per)


# ---------------------------------------------------------------------------
# truncated lattice problems (square lattice, d = 2)
# ---------------------------------------------------------------------------

class _Box:
    """Square-lattice box ``[-R, R]^2`` with zero values beyond it."""

    def __init__(self, R: int):
        self.R = R
        self.n = 2 * R + 1

    def idx(self, i, j):
        return (np.asarray(i) + self.R) * self.n + (np.asarray(j) + self.R)

    def contains(self, i, j):
        return abs(i) <= self.R and abs(j) <= self.R

    def adjacency(self) -> sparse.csr_matrix:
        n = self.n
        path = sparse.diags([np.ones(n - 1), np.ones(n - 1)], [-1, 1])
        eye = sparse.identity(n)
        return (sparse.kron(path, eye) + sparse.kron(eye, path)).tocsr()


def _require_square2(kind: LatticeKind):
    if kind.name != "square" or kind.d != 2:
        raise NotImplementedError("the exterior machinery ships for the square lattice in 2d")


def _sites(kind, ids):
    return [parse_site_id(kind, v)[1] for v in ids]


def _exterior_solve(kind: LatticeKind, patch: WeightedBoundaryGraph, lam: complex, R: int):
    _require_square2(kind)
    box = _Box(R)
    inner = _sites(kind, patch.interior)
    sigma = _sites(kind, patch.boundary)
    for i, j in inner + sigma:
        if not box.contains(i, j):
            raise ValueError(f"box radius {R} does not contain the patch")
    A = box.adjacency()
    size = box.n ** 2
    taken = np.zeros(size, dtype=bool)
    taken[[box.idx(i, j) for i, j in inner + sigma]] = True
    free = np.flatnonzero(~taken)
    sig_idx = np.array([box.idx(i, j) for i, j in sigma])
    deg = kind.degree
    M = (-A[free][:, free] / deg - lam * sparse.identity(len(free))).astype(complex).tocsc()
    B = (A[free][:, sig_idx] / deg).toarray()
    U = splu(M).solve(B.astype(complex))
    full = np.zeros((size, len(sigma)), dtype=complex)
    full[free] = U
    # (Lambda_ext f)(z) = (1/deg_ext z) sum over exterior non-boundary neighbours
    free_mask = ~taken
    rows = []
    for z in sig_idx:
        nb = A[z].indices
        nb = nb[free_mask[nb]]
        rows.append(full[nb].sum(axis=0) / len(nb))
    return np.array(rows)


def default_eps_schedule():
    """Absorption ladder for the exterior map (descending)."""
    return (0.1, 0.05, 0.025)


def transmission_eps_schedule():
    """Absorption ladder for :func:`verify_transmission_consistency`."""
    return (0.1, 0.05, 0.025, 0.0125)


def box_radius(eps: float) -> int:
    return int(np.ceil(4 / eps))


@dataclass
class ExteriorResult:
    map: BoundaryMap
    residual: float
    samples: dict[float, np.ndarray]


def _threshold_guard(kind: LatticeKind, lam: float):
    rep = check_assumptions(floquet_model(kind), [lam], grid_n=128)
    if rep.threshold_candidates:
        raise ThresholdEnergy(f"energy {lam} is a threshold candidate")


def exterior_dn_limiting_absorption(patch: WeightedBoundaryGraph, lam: float,
                                    kind: LatticeKind | None = None,
                                    eps_schedule: Sequence[float] | None = None,
                                    R_of_eps=box_radius, tol: float = 1e-2) -> ExteriorResult:
    """Exterior D-N map of the square lattice outside ``patch`` at ``lam + i0``.

    For each ``eps`` the exterior Dirichlet problem for ``H - lam - i eps``
    is solved inside a zero wall at radius ``R(eps)``; the map
    ``f -> (1/deg_ext z) sum_{x exterior} u(x)`` is extrapolated linearly to
    ``eps = 0`` from the two smallest ``eps``, and the two largest give a
    second extrapolation whose distance is the reported relative residual.
    Outside the spectrum ``[-1, 1]`` a single direct solve at ``eps = 0`` is
    used.

    Raises
    ------
    ThresholdEnergy
        at a threshold candidate of the band structure.
    NotConverged
        if the extrapolation residual exceeds ``tol``.
    """
    from .lattice import Square

    kind = kind or Square(2)
    _require_square2(kind)
    lam = float(lam)
    order = patch.boundary
    if not -1 <= lam <= 1:
        R = R_of_eps(min(eps_schedule or default_eps_schedule()))
        M = _exterior_solve(kind, patch, lam, R)
        return ExteriorResult(BoundaryMap("DN", lam, M, order, "exterior eps=0"), 0.0, {0.0: M})
    _threshold_guard(kind, lam)
    eps = sorted(eps_schedule or default_eps_schedule(), reverse=True)
    if len(eps) < 3:
        raise ValueError("need at least three eps values")
    samples = {e: _exterior_solve(kind, patch, lam + 1j * e, R_of_eps(e)) for e in eps}
    best = _linear_extrapolate(eps[-2], samples[eps[-2]], eps[-1], samples[eps[-1]])
    check = _linear_extrapolate(eps[-3], samples[eps[-3]], eps[-2], samples[eps[-2]])
    residual = float(np.linalg.norm(best - check) / np.linalg.norm(best))
    if residual > tol:
        raise NotConverged(residual)
    return ExteriorResult(BoundaryMap("DN", lam, best, order, "exterior limiting absorption"),
                          residual, samples)


def _linear_extrapolate(e1, y1, e2, y2):
    return (e1 * y2 - e2 * y1) / (e1 - e2)


def _poly_extrapolate(eps: Sequence[float], values: Sequence[np.ndarray]) -> np.ndarray:
    """Value at ``eps = 0`` of the interpolating polynomial through all samples."""
    out = 0
    for i, (ei, yi) in enumerate(zip(eps, values)):
        w = np.prod([ej / (ej - ei) for j, ej in enumerate(eps) if j != i])
        out = out + w * yi
    return out


def exterior_passivity(patch: WeightedBoundaryGraph, lam: float, eps: float, R: int | None = None,
                       rng: np.random.Generator | None = None, trials: int = 8) -> np.ndarray:
    """``Im <Lambda_ext f, f>`` (weighted by the exterior degree) for random ``f``."""
    from .lattice import Square

    kind = Square(2)
    M = _exterior_solve(kind, patch, lam + 1j * eps, R or box_radius(eps))
    rng = rng or np.random.default_rng(0)
    w = _exterior_degrees(kind, patch)
    out = []
    for _ in range(trials):
        f = rng.normal(size=len(w)) + 1j * rng.normal(size=len(w))
        out.append(float(np.imag(np.vdot(f, w * (M @ f)))))
    return np.array(out)


def _exterior_degrees(kind: LatticeKind, patch: WeightedBoundaryGraph) -> np.ndarray:
    taken = set(_sites(kind, patch.interior)) | set(_sites(kind, patch.boundary))
    out = []
    for n in _sites(kind, patch.boundary):
        out.append(sum(1 for s, m in lattice_neighbors(kind, (0, n)) if m not in taken))
    return np.array(out, dtype=float)


# ---------------------------------------------------------------------------
# transmission consistency
# ---------------------------------------------------------------------------

@dataclass
class TransmissionResult:
    defect: float
    defects: dict[float, float]
    eps: tuple[float, ...]
    interior_map: BoundaryMap


def _patch_adjacency(kind: LatticeKind, patch: WeightedBoundaryGraph, box: "_Box"):
    """Lattice box adjacency with the patch's edge set substituted in."""
    A = box.adjacency().tolil()
    inner = set(_sites(kind, patch.interior))
    # drop every lattice edge with an endpoint in the patch interior ...
    for (i, j) in inner:
        a = int(box.idx(i, j))
        for s, (k, l) in lattice_neighbors(kind, (0, (i, j))):
            if box.contains(k, l):
                b = int(box.idx(k, l))
                A[a, b] = 0
                A[b, a] = 0
    # ... and put back the patch's own edges
    for (u, v), w in patch.edges.items():
        (i, j), (k, l) = parse_site_id(kind, u)[1], parse_site_id(kind, v)[1]
        a, b = int(box.idx(i, j)), int(box.idx(k, l))
        A[a, b] = w
        A[b, a] = w
    A = A.tocsr()
    A.eliminate_zeros()
    return A


def transmission_fields(patch: WeightedBoundaryGraph, lam: complex, R: int,
                        source: tuple[int, int], amplitude: float = 1.0):
    """Boundary trace and interior normal derivative of the full solution.

    Solves ``(H_patch - lam) u = amplitude * delta_source`` in the box
    ``[-R, R]^2`` with zero values beyond it, where ``H_patch`` is the
    lattice operator with the patch (edges, potential, ``mu``) inserted.
    """
    from .lattice import Square

    kind = Square(2)
    box = _Box(R)
    A = _patch_adjacency(kind, patch, box)
    size = box.n ** 2
    deg = np.full(size, float(kind.degree))
    q = np.zeros(size)
    for v in patch.interior:
        i, j = parse_site_id(kind, v)[1]
        deg[box.idx(i, j)] = patch.mu[v]
        q[box.idx(i, j)] = patch.q.get(v, 0.0)
    M = (-sparse.diags(1 / deg) @ A + sparse.diags(q - lam)).tocsc()
    rhs = np.zeros(size, dtype=complex)
    rhs[box.idx(*source)] = amplitude
    u = splu(M).solve(rhs) if amplitude else np.zeros(size, dtype=complex)
    idx = {v: int(box.idx(*parse_site_id(kind, v)[1])) for v in patch.vertices}
    full = np.array([u[idx[v]] for v in patch.vertices])
    trace = full[patch.n_interior:]
    dnu = np.array([discrete.neumann_derivative(patch, full, z) for z in patch.boundary])
    return trace, dnu


def verify_transmission_consistency(patch: WeightedBoundaryGraph, lam: float,
                                    source: tuple[int, int] = (12, 5),
                                    eps_schedule: Sequence[float] | None = None,
                                    R_of_eps=box_radius, amplitude: float = 1.0
                                    ) -> TransmissionResult:
    """Check the interior D-N relation on a far-field scattering solution.

    For each ``eps`` the whole truncated lattice (with the patch inserted)
    is solved at ``lam + i eps`` with a point source at ``source``. The
    defect vector ``d_nu u - Lambda_int(lam) u`` on the patch boundary,
    relative to ``|d_nu u|``, is extrapolated to ``eps = 0`` with the
    polynomial through all samples. ``Lambda_int`` is
    :func:`latscatter.discrete.dn_map` at graph energy ``lam + 1``.

    The defect at fixed ``eps`` is ``(Lambda_int(lam + i eps) -
    Lambda_int(lam)) u`` and so scales like ``eps`` over the distance from
    ``lam`` to the Dirichlet spectrum of the patch; the extrapolation
    removes the leading orders. Patches whose Dirichlet spectrum comes
    close to ``lam`` need a finer ladder.

    Raises
    ------
    ThresholdEnergy
        at a threshold candidate of the band structure.
    InteriorEigenvalue
        if ``lam`` is a Dirichlet eigenvalue of the patch.
    """
    from .lattice import Square

    lam = float(lam)
    _threshold_guard(Square(2), lam)
    try:
        L = discrete.dn_map(patch, lam + 1)
    except PoleAtEnergy:
        raise InteriorEigenvalue(f"{lam} is a Dirichlet eigenvalue of the patch") from None
    eps = tuple(sorted(eps_schedule or transmission_eps_schedule(), reverse=True))
    if amplitude == 0:
        return TransmissionResult(0.0, {e: 0.0 for e in eps}, eps, L)
    if len(eps) < 2:
        raise ValueError("need at least two eps values")
    defects = {}
    vec = []
    for e in eps:
        trace, dnu = transmission_fields(patch, lam + 1j * e, R_of_eps(e), source, amplitude)
        vec.append((dnu - L.matrix @ trace) / np.linalg.norm(dnu))
        defects[e] = float(np.linalg.norm(vec[-1]))
    d = _poly_extrapolate(eps, vec)
    return TransmissionResult(float(np.linalg.norm(d)), defects, eps, L)


# ---------------------------------------------------------------------------
# unique continuation
# ---------------------------------------------------------------------------

def finite_kernel_check(model: FloquetModel, lam: float, R: int = 8, tol: float = 1e-10) -> bool:
    """No nonzero solution of ``(H - lam) u = 0`` supported within radius ``R - 2``.

    Rows are all vertices within graph distance ``R`` of the base cell,
    columns the vertices within ``R - 2``; returns whether the smallest
    singular value exceeds ``tol`` (relative).
    """
    kind = model.kind
    rows = lattice_ball(kind, R)
    cols = lattice_ball(kind, max(R - 2, 0))
    ri = {v: k for k, v in enumerate(rows)}
    M = np.zeros((len(rows), len(cols)))
    for c, v in enumerate(cols):
        M[ri[v], c] -= lam
        for w in lattice_neighbors(kind, v):
            M[ri[w], c] -= 1.0 / kind.degree
    s = sla.svdvals(M)
    return bool(s[-1] > tol * max(1.0, s[0]))
