"""Acceptance criteria, one test each, at their stated tolerances and budgets."""
import time

import numpy as np
import pytest

from latscatter import discrete, fixtures
from latscatter.floquet import (
    check_assumptions,
    exterior_dn_limiting_absorption,
    finite_kernel_check,
    spectrum_interval,
    verify_transmission_consistency,
)
from latscatter.graph import check_two_points_condition
from latscatter.inverse import (
    BoundaryLayer,
    DnOracle,
    extract_spectral_data,
    neumann_bound,
    reconstruct_structure,
    recover_potential,
    synthesize_nd_map,
)
from latscatter.lattice import HEXAGONAL, TRIANGULAR, Square, build_lattice_patch, floquet_model
from latscatter.quantum import (
    E_of_lambda,
    krein_resolvent_check,
    metric_dn_map,
    shooting_dn_map,
    translate_dn,
    unperturbed_spectrum_membership,
    vertex_energy_of_lambda,
)

PROBES6 = [2 + 0.5j, -3 + 1j, 0.7 + 0.2j, 5.5 - 0.3j, 12 + 2j, 30 + 0.1j]


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


@pytest.mark.criterion(1)
def test_krein_identity(detail):
    worst = 0.0
    with Clock() as c:
        for kappa in (0.0, 1.0):
            for mg in fixtures.krein_fixtures(kappa).values():
                f = {e: [1.0, -0.5, 0.25] for e in mg.graph.edges}
                for lam in (2 + 0.5j, -3 + 1j):
                    worst = max(worst, krein_resolvent_check(mg, lam, f))
    detail.append(f"max residual {worst:.2e}, {c.elapsed:.1f} s")
    assert worst <= 1e-6
    assert c.elapsed < 10


@pytest.mark.criterion(2)
def test_edge_vertex_equivalence(detail):
    rt = cross = 0.0
    with Clock() as c:
        for mg in (fixtures.metric_p1(), fixtures.metric_hex_cell()):
            for lam in PROBES6:
                E = metric_dn_map(mg, lam)
                V = translate_dn(E, "edge-to-vertex", mg)
                back = translate_dn(V, "vertex-to-edge", mg)
                rt = max(rt, np.abs(back.matrix - E.matrix).max())
                cross = max(cross, np.abs(shooting_dn_map(mg, lam).matrix - E.matrix).max())
    detail.append(f"round trip {rt:.1e}, cross path {cross:.1e}, {c.elapsed:.1f} s")
    assert rt <= 1e-10 and cross <= 1e-9
    assert c.elapsed < 5


@pytest.mark.criterion(3)
def test_spectral_data_equivalence(detail):
    off_pole = [2.0, -0.7, 0.3 + 0.2j, 1.23 - 0.5j, 5.0, -3 + 1j]
    ev_err = q_err = syn_err = 0.0
    with Clock() as c:
        for make in (fixtures.path_p1, fixtures.square_box, fixtures.star_double):
            g = make()
            ref = discrete.neumann_eigs(g)
            got = extract_spectral_data(DnOracle.from_graph(g, "ND"), neumann_bound(g))
            assert got.multiplicities == ref.multiplicities
            ev_err = max(ev_err, np.abs(got.eigenvalues - ref.eigenvalues).max())
            q_err = max(q_err, max(np.abs(a - b).max() for a, b in zip(got.residues, ref.residues)))
            if make is fixtures.star_double:
                k = got.multiplicities.index(2)
                assert np.linalg.matrix_rank(got.residues[k], tol=1e-6) == 2
            layer = BoundaryLayer.of(g)
            for lam in off_pole:
                syn = synthesize_nd_map(got, layer, lam).matrix
                syn_err = max(syn_err, np.abs(syn - discrete.nd_map(g, lam).matrix).max())
    detail.append(f"eigenvalues {ev_err:.1e}, residues {q_err:.1e}, "
                  f"round trip {syn_err:.1e}, {c.elapsed:.1f} s")
    assert ev_err <= 1e-6 and q_err <= 1e-6 and syn_err <= 1e-8
    assert c.elapsed < 30


@pytest.mark.criterion(4)
def test_structure_reconstruction(detail):
    cases = (
        ("hex", fixtures.hex_patch(), fixtures.hex_patch_perturbed(),
         fixtures.HEX_REMOVED, fixtures.HEX_MARGIN),
        ("tri", fixtures.tri_patch(), fixtures.tri_patch_perturbed(),
         fixtures.TRI_REMOVED, fixtures.TRI_MARGIN),
    )
    with Clock() as c:
        for name, base, target, removed, margin in cases:
            res = reconstruct_structure(base, DnOracle.from_graph(target), 1)
            detail.append(f"{name} runner-up {res.runner_up:.4f} (m* {margin})")
            assert res.unique
            assert res.best == (removed,)
            assert res.matches[0][1] < 1e-8
            assert res.runner_up > margin
    detail.append(f"{c.elapsed:.1f} s")
    assert c.elapsed < 120


@pytest.mark.criterion(5)
def test_potential_recovery(detail):
    g = fixtures.square_box()
    q = np.random.default_rng(42).uniform(-1, 1, g.n_interior)
    with Clock() as c:
        fit = recover_potential(g, DnOracle.from_graph(g.with_potential(q)))
    err = np.abs(fit.q - q).max()
    detail.append(f"max error {err:.1e} after {fit.iterations} iterations, {c.elapsed:.1f} s")
    assert err <= 1e-6 and fit.iterations <= 50
    assert c.elapsed < 30


@pytest.mark.criterion(6)
def test_equilateral_band_map(detail):
    rng = np.random.default_rng(6)
    lam = rng.uniform(-20, 60, 100) + 1j * rng.uniform(-5, 5, 100)
    with Clock() as c:
        worst = 0.0
        for kappa in (0.0, 0.7):
            s = np.sqrt(lam)
            E = -np.cos(s) - kappa * np.sin(s) / s
            V = -s * np.cos(s) / np.sin(s) - kappa
            worst = max(worst,
                        np.abs(E_of_lambda(lam, kappa) - E).max() / np.abs(E).max(),
                        np.abs(vertex_energy_of_lambda(lam, kappa) - V).max() / np.abs(V).max())
        grid = np.linspace(0, 50, 2001)
        for kind in (Square(2), HEXAGONAL):
            bands = spectrum_interval(floquet_model(kind))
            assert all(unperturbed_spectrum_membership(x, 0.0, bands) for x in grid)
    detail.append(f"closed-form gap {worst:.1e}, membership on 2001 points, {c.elapsed:.1f} s")
    assert worst <= 1e-12
    assert c.elapsed < 5


@pytest.mark.criterion(7)
def test_floquet_assumptions(detail):
    probes = np.linspace(-1, 1, 21)
    with Clock() as c:
        sq = check_assumptions(floquet_model(Square(2)), probes, grid_n=256, tol=1e-6)
        hx = check_assumptions(floquet_model(HEXAGONAL), [0.0], grid_n=256, tol=1e-6)
        c2 = {}
        for name, g in (("hex", fixtures.hex_patch()), ("hex-perturbed", fixtures.hex_patch_perturbed()),
                        ("tri", fixtures.tri_patch()), ("tri-perturbed", fixtures.tri_patch_perturbed()),
                        ("hex k=2", build_lattice_patch(HEXAGONAL, 2)),
                        ("tri k=3", build_lattice_patch(TRIANGULAR, 3))):
            mode = "exhaustive" if g.n_interior <= 20 else "sampled"
            c2[name] = check_two_points_condition(g, mode, n_samples=10_000).two_points_ok
    flagged = sorted(round(x, 12) for x in sq.threshold_candidates)
    detail.append(f"square flags {flagged}, hex flags {hx.threshold_candidates}, "
                  f"C-2 {sum(c2.values())}/{len(c2)}, {c.elapsed:.1f} s")
    assert flagged == [-1.0, 0.0, 1.0]
    assert hx.threshold_candidates == [0.0]
    assert all(c2.values()), c2
    assert c.elapsed < 60


@pytest.mark.criterion(8)
def test_unique_continuation_shadow(detail):
    lams = np.random.default_rng(8).uniform(-1, 1, 20)
    with Clock() as c:
        ok = {k.name: all(finite_kernel_check(floquet_model(k), x, R=8) for x in lams)
              for k in (Square(2), HEXAGONAL)}
    detail.append(f"{ok}, {c.elapsed:.1f} s")
    assert all(ok.values())
    assert c.elapsed < 60


@pytest.mark.slow
@pytest.mark.criterion(9)
def test_transmission_consistency(detail):
    with Clock() as c:
        a = verify_transmission_consistency(fixtures.transmission_patch(), -0.3)
        b = verify_transmission_consistency(fixtures.transmission_patch_perturbed(), -0.3)
        sep = (np.linalg.norm(a.interior_map.matrix - b.interior_map.matrix)
               / np.linalg.norm(a.interior_map.matrix))
        ext = exterior_dn_limiting_absorption(build_lattice_patch(Square(2), 2), -0.3)
    detail.append(f"defects {a.defect:.1e} / {b.defect:.1e}, separation {sep:.3f}, "
                  f"exterior residual {ext.residual:.1e}, {c.elapsed:.0f} s")
    assert a.defect < 1e-3 and b.defect < 1e-3
    assert sep > 10 * max(a.defect, b.defect)
    assert ext.residual < 1e-2
    assert c.elapsed < 600
