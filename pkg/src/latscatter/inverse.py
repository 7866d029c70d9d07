"""
Inverse problems: boundary spectral data, structure search, potential fit.

Everything here sees a graph only through a :class:`DnOracle`, a black box
returning boundary maps at requested energies, plus the boundary-layer
weights (``mu`` on the boundary and the edge weights into it), which the
uniqueness theory treats as known.
"""
from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import lapack

from . import discrete
from .discrete import BoundaryMap, BoundarySpectralData
from .errors import (
    BoundaryMismatch,
    BudgetTooLarge,
    Disconnected,
    GraphValidationError,
    NoConvergence,
    NoMatch,
    PoleAtEnergy,
    PoleTooClose,
    RankAmbiguous,
    StructureMismatch,
)
from .graph import WeightedBoundaryGraph, check_boundary_structure, check_two_points_condition
from .lattice import AddEdge, RemoveEdge, RemoveVertex, apply_perturbation, deep_interior

PROBE_IMAG = 0.37
PROBE_BAND = (-0.5, 2.5)
N_PROBES = 12
MATCH_THRESHOLD = 1e-8
RICHARDSON_STEPS = (1e-3, 5e-4, 2.5e-4)


def default_probes(band: tuple[float, float] = PROBE_BAND, n: int = N_PROBES) -> np.ndarray:
    """``n`` energies ``mu_j + 0.37i`` with ``mu_j`` equispaced in ``band``."""
    return np.linspace(band[0], band[1], n) + 1j * PROBE_IMAG


@dataclass(frozen=True)
class BoundaryLayer:
    """Known weights next to the boundary: ``mu_z`` and ``sum_x g_xz``."""

    mu: np.ndarray
    g_sum: np.ndarray

    @classmethod
    def of(cls, g: WeightedBoundaryGraph) -> "BoundaryLayer":
        return cls(np.array([g.mu[z] for z in g.boundary]),
                   np.array([sum(g.adjacency[z].values()) for z in g.boundary]))


@dataclass(frozen=True, eq=False)
class DnOracle:
    """Black-box boundary map ``energy -> BoundaryMap`` of a fixed kind."""

    fn: Callable[[complex], BoundaryMap]
    kind: str
    boundary_order: tuple[str, ...]
    layer: BoundaryLayer | None = None

    def __call__(self, lam: complex) -> BoundaryMap:
        bm = self.fn(complex(lam))
        if bm.kind != self.kind or tuple(bm.boundary_order) != self.boundary_order:
            raise BoundaryMismatch(f"oracle returned {bm.kind} map over {bm.boundary_order}")
        return bm

    @classmethod
    def from_graph(cls, g: WeightedBoundaryGraph, kind: str = "DN") -> "DnOracle":
        fn = {"DN": discrete.dn_map, "ND": discrete.nd_map}[kind]
        return cls(lambda lam: fn(g, lam), kind, tuple(g.boundary), BoundaryLayer.of(g))

    @classmethod
    def from_maps(cls, maps: Sequence[BoundaryMap], layer: BoundaryLayer | None = None) -> "DnOracle":
        """Oracle backed by a finite table of maps (e.g. read from CSV files)."""
        if not maps:
            raise ValueError("no maps given")
        table = {complex(bm.energy): bm for bm in maps}
        kinds = {bm.kind for bm in maps}
        orders = {tuple(bm.boundary_order) for bm in maps}
        if len(kinds) != 1 or len(orders) != 1:
            raise BoundaryMismatch("maps disagree in kind or boundary order")

        def fn(lam):
            try:
                return table[lam]
            except KeyError:
                raise KeyError(f"no tabulated map at energy {lam}") from None

        oracle = cls(fn, kinds.pop(), orders.pop(), layer)
        object.__setattr__(oracle, "energies", tuple(table))
        return oracle


# ---------------------------------------------------------------------------
# N-D map <-> boundary spectral data
# ---------------------------------------------------------------------------

def synthesize_nd_map(data: BoundarySpectralData, layer: BoundaryLayer, lam: complex) -> BoundaryMap:
    """N-D map rebuilt from Neumann spectral data and boundary-layer weights.

    ``Lambda = -diag(mu_z / sum_x g_xz) + sum_k Q_k D_mu / (lam - lam_k)``.
    The constant term is the boundary trace of the correction that vanishes
    on the interior; the residue sign follows from Green's formula and is
    checked against direct solves.
    """
    lam = complex(lam)
    scale = max(1.0, float(np.abs(data.eigenvalues).max(initial=0.0)))
    gaps = np.abs(lam - data.eigenvalues)
    if gaps.size and gaps.min() < 1e-12 * scale:
        raise PoleAtEnergy(lam, f"energy {lam} is a Neumann eigenvalue")
    M = -np.diag(layer.mu / layer.g_sum).astype(complex)
    for lk, Q in zip(data.eigenvalues, data.residues):
        M += (Q * layer.mu[None, :]) / (lam - lk)
    return BoundaryMap("ND", lam, M, data.boundary_order, "synthesized")


def _norm_or_inf(oracle: DnOracle, lam: float) -> float:
    try:
        return float(np.linalg.norm(oracle(lam).matrix))
    except PoleAtEnergy:
        return np.inf


def _golden_peak(oracle: DnOracle, a: float, b: float, tol: float) -> float:
    """Maximize ``||Lambda||`` on ``[a, b]`` by golden-section on ``1/||Lambda||``."""
    invphi = (np.sqrt(5) - 1) / 2

    def f(x):
        return 1.0 / _norm_or_inf(oracle, x)

    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _residue(oracle: DnOracle, lam: float, steps: Sequence[float] = RICHARDSON_STEPS) -> np.ndarray:
    """``lim (l - lam) Lambda(l)`` by symmetric differences and Richardson in ``h^2``."""
    est = []
    for h in steps:
        plus = oracle(lam + h).matrix
        minus = oracle(lam - h).matrix
        est.append(0.5 * h * (plus - minus))
    # Neville table in h^2
    hs = np.asarray(steps) ** 2
    T = [np.asarray(e) for e in est]
    for level in range(1, len(T)):
        T = [(hs[i] * T[i + 1] - hs[i + level] * T[i]) / (hs[i] - hs[i + level])
             for i in range(len(T) - 1)]
    return T[0]


def _pivoted_factor(Q: np.ndarray, rank: int) -> np.ndarray:
    c, piv, r, info = lapack.dpstrf(Q, lower=1, tol=-1.0)
    L = np.tril(c)[:, :rank]
    B = np.zeros_like(L)
    B[piv - 1] = L
    return B


def extract_spectral_data(oracle: DnOracle, interval: tuple[float, float], step: float = 1e-3,
                          tol: float = 1e-11, rank_rtol: float = 1e-6) -> BoundarySpectralData:
    """Recover Neumann eigenvalues and residues from N-D map evaluations.

    Parameters
    ----------
    oracle : DnOracle
        N-D oracle carrying the boundary-layer weights.
    interval : (float, float)
        Real energy window containing every Neumann eigenvalue, for example
        from :func:`neumann_bound`.
    step : float
        Grid spacing of the initial scan of ``||Lambda||``.
    tol : float
        Width of the final golden-section bracket around each pole.

    Raises
    ------
    PoleTooClose
        if two refined poles lie within ``10 * max(tol, 1e-8)``.
    RankAmbiguous
        if a residue eigenvalue falls within a decade of the rank threshold.
    """
    if oracle.kind != "ND":
        raise ValueError("spectral data extraction needs an N-D oracle")
    if oracle.layer is None:
        raise ValueError("oracle does not carry boundary-layer weights")
    lo, hi = interval
    grid = np.arange(lo, hi + step / 2, step)
    norms = np.array([_norm_or_inf(oracle, x) for x in grid])
    peaks = [i for i in range(1, len(grid) - 1)
             if norms[i] >= norms[i - 1] and norms[i] > norms[i + 1]]
    mu = oracle.layer.mu
    eig, mult, res, tr = [], [], [], []
    for i in peaks:
        lam = _golden_peak(oracle, grid[i - 1], grid[i + 1], tol)
        R = _residue(oracle, lam)
        Q = (R / mu[None, :]).real
        Q = 0.5 * (Q + Q.T)
        w = np.linalg.eigvalsh(Q)
        top = np.abs(w).max()
        if top < 1e-9 * max(1.0, norms[np.isfinite(norms)].max(initial=1.0) * step):
            continue  # a bump of the norm, not a pole
        rel = np.abs(w) / top
        if np.any((rel > 0.1 * rank_rtol) & (rel < 10 * rank_rtol)):
            raise RankAmbiguous(f"residue at {lam:.12g} has singular values {w}")
        r = int((rel >= rank_rtol).sum())
        eig.append(lam)
        mult.append(r)
        res.append(Q)
        tr.append(_pivoted_factor(Q, r))
    eig_arr = np.array(eig)
    if eig_arr.size > 1 and np.diff(eig_arr).min() < 10 * max(tol, 1e-8):
        raise PoleTooClose(f"poles at {eig_arr} are closer than the refinement tolerance")
    return BoundarySpectralData(eig_arr, tuple(mult), tuple(res), oracle.boundary_order, tuple(tr))


def neumann_bound(g: WeightedBoundaryGraph, pad: float = 0.05) -> tuple[float, float]:
    """Gershgorin-type window containing the Neumann spectrum."""
    N = g.n_interior
    q = g.q_vector()
    W = g.weight_matrix()[:N, :N]
    mu = g.mu_vector()[:N]
    radius = 2 * W.sum(axis=1) / mu
    return float((q - 0).min() - pad), float((q + radius).max() + pad)


# ---------------------------------------------------------------------------
# comparison of oracles
# ---------------------------------------------------------------------------

def dn_distance(a: DnOracle, b: DnOracle, probes: Sequence[complex] | None = None) -> float:
    """Largest Frobenius distance between two oracles over the probe energies."""
    if a.boundary_order != b.boundary_order or a.kind != b.kind:
        raise BoundaryMismatch(f"{a.kind} over {len(a.boundary_order)} vs "
                               f"{b.kind} over {len(b.boundary_order)} boundary vertices")
    if probes is None:
        probes = default_probes()
    return max(float(np.linalg.norm(a(p).matrix - b(p).matrix)) for p in probes)


# ---------------------------------------------------------------------------
# structure reconstruction
# ---------------------------------------------------------------------------

def _edit_key(edits) -> tuple:
    return tuple((type(e).__name__,) + tuple(e.refs()) for e in edits)


@dataclass
class ReconstructionResult:
    """Candidates sorted by residual; ``matches[i] = (edit tuple, residual)``."""

    matches: list[tuple[tuple, float]]
    probe_energies: list[complex]
    budget: int
    threshold: float = MATCH_THRESHOLD
    skipped: int = 0

    @property
    def hits(self) -> list[tuple[tuple, float]]:
        return [m for m in self.matches if m[1] < self.threshold]

    @property
    def unique(self) -> bool:
        return len(self.hits) == 1

    @property
    def best(self) -> tuple:
        return self.matches[0][0]

    @property
    def runner_up(self) -> float:
        """Residual of the second-best candidate (``inf`` if there is none)."""
        return self.matches[1][1] if len(self.matches) > 1 else np.inf

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "threshold": self.threshold,
            "unique": self.unique,
            "skipped_candidates": self.skipped,
            "probe_energies": [{"re": p.real, "im": p.imag} for p in self.probe_energies],
            "matches": [{"edits": [e.to_dict() for e in edits], "residual": r}
                        for edits, r in self.matches],
        }


def edit_universe(base: WeightedBoundaryGraph, universe: str = "remove-edge") -> list:
    """Single edits allowed away from the boundary layer."""
    deep = deep_interior(base)
    deep_set = set(deep)
    edits: list = [RemoveEdge(a, b) for (a, b) in sorted(base.edges)
                   if a in deep_set and b in deep_set]
    if universe == "full":
        for a, b in itertools.combinations(deep, 2):
            key = (a, b) if a <= b else (b, a)
            if key not in base.edges:
                edits.append(AddEdge(*key))
        edits += [RemoveVertex(v) for v in deep]
    elif universe != "remove-edge":
        raise ValueError(f"unknown edit universe {universe!r}")
    return edits


def _admissible(g: WeightedBoundaryGraph, need_c1: bool, samples: int) -> bool:
    rep = check_boundary_structure(g)
    if not (rep.c1 if need_c1 else rep.c1_prime):
        return False
    return check_two_points_condition(g, n_samples=samples).two_points_ok


def _thread_count(threads: int | None) -> int:
    cap = os.environ.get("LATSCATTER_THREADS")
    n = threads if threads is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def reconstruct_structure(base: WeightedBoundaryGraph, target: DnOracle, budget: int = 1,
                          universe: str = "remove-edge", probes: Sequence[complex] | None = None,
                          threshold: float = MATCH_THRESHOLD, threads: int | None = None,
                          two_points_samples: int = 2000) -> ReconstructionResult:
    """Exhaustive search for the local perturbation behind a D-N oracle.

    Every edit list of length ``<= budget`` drawn from :func:`edit_universe`
    whose result is connected and satisfies the base patch's boundary
    condition ((C-1) if the base has it, otherwise (C-1)') and (C-2) is
    compared with ``target`` by :func:`dn_distance`.

    Raises
    ------
    BudgetTooLarge
        for ``budget > 2`` or more than 60 interior vertices.
    NoMatch
        if no candidate comes within ``threshold``; the full result is
        attached as ``exc.result``.
    """
    if budget > 2 or budget < 0:
        raise BudgetTooLarge(f"budget {budget} (exhaustive search supports 0..2)")
    if base.n_interior > 60:
        raise BudgetTooLarge(f"{base.n_interior} interior vertices (limit 60)")
    if target.boundary_order != tuple(base.boundary):
        raise BoundaryMismatch("target boundary order differs from the base patch")
    probes = list(default_probes() if probes is None else probes)
    need_c1 = bool(check_boundary_structure(base).c1)
    singles = edit_universe(base, universe)
    candidates = [()]
    for k in range(1, budget + 1):
        candidates += list(itertools.combinations(singles, k))
    candidates.sort(key=_edit_key)

    def evaluate(edits):
        try:
            g = apply_perturbation(base, edits, check=False)
        except (Disconnected, GraphValidationError, KeyError):
            return None
        if edits and not _admissible(g, need_c1, two_points_samples):
            return None
        return dn_distance(DnOracle.from_graph(g, "DN"), target, probes)

    n = _thread_count(threads)
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            residuals = list(pool.map(evaluate, candidates))
    else:
        residuals = [evaluate(c) for c in candidates]
    matches = [(c, r) for c, r in zip(candidates, residuals) if r is not None]
    matches.sort(key=lambda m: m[1])  # stable: ties keep lexicographic order
    result = ReconstructionResult(matches, probes, budget, threshold,
                                  skipped=len(candidates) - len(matches))
    if not result.hits:
        exc = NoMatch(f"no candidate within {threshold:g} (best {matches[0][1]:.3e})"
                      if matches else "no admissible candidate")
        exc.result = result
        raise exc
    return result


# ---------------------------------------------------------------------------
# potential recovery
# ---------------------------------------------------------------------------

@dataclass
class PotentialFit:
    q: np.ndarray
    residual: float
    iterations: int
    history: list[float] = field(default_factory=list)


def recover_potential(g: WeightedBoundaryGraph, target: DnOracle, q0: Sequence[float] | None = None,
                      probes: Sequence[complex] | None = None, tol: float = 1e-10,
                      max_iter: int = 50, plateau: float = 1e-4) -> PotentialFit:
    """Fit the interior potential to a D-N oracle by Levenberg-Marquardt.

    The residual stacks real and imaginary parts of ``Lambda_q(p) - target(p)``
    over the probe energies. The Jacobian is a forward difference with step
    ``1e-6 (1 + |q_i|)``; the damping grows tenfold on a rejected step and
    shrinks tenfold on an accepted one. ``history`` holds the residual norm
    after each accepted step.

    Raises
    ------
    StructureMismatch
        when the residual stalls above ``plateau`` (the structure does not fit).
    NoConvergence
        when ``max_iter`` steps end with a residual above ``tol``.
    """
    probes = list(default_probes() if probes is None else probes)
    targets = [target(p).matrix for p in probes]
    N = g.n_interior
    q = np.zeros(N) if q0 is None else np.asarray(q0, dtype=float).copy()

    def resid(qv):
        gq = g.with_potential(qv)
        parts = [discrete.dn_map(gq, p).matrix - t for p, t in zip(probes, targets)]
        r = np.concatenate([m.ravel() for m in parts])
        return np.concatenate([r.real, r.imag])

    r = resid(q)
    cost = float(np.linalg.norm(r))
    history = [cost]
    damping = 1e-3
    it = 0
    while cost > tol and it < max_iter:
        it += 1
        J = np.empty((r.size, N))
        for i in range(N):
            h = 1e-6 * (1 + abs(q[i]))
            qh = q.copy()
            qh[i] += h
            J[:, i] = (resid(qh) - r) / h
        JtJ = J.T @ J
        grad = J.T @ r
        accepted = False
        while not accepted and damping < 1e12:
            A = JtJ + damping * np.diag(np.diag(JtJ) + 1e-12)
            step = np.linalg.solve(A, -grad)
            r_new = resid(q + step)
            c_new = float(np.linalg.norm(r_new))
            if c_new < cost:
                q, r, cost = q + step, r_new, c_new
                damping = max(damping / 10, 1e-12)
                accepted = True
                history.append(cost)
            else:
                damping *= 10
        if not accepted:
            break
    if cost <= tol:
        return PotentialFit(q, cost, it, history)
    if cost > plateau:
        raise StructureMismatch(cost, f"residual stalled at {cost:.3e}; structure does not fit")
    raise NoConvergence(cost, f"residual {cost:.3e} after {it} iterations")
