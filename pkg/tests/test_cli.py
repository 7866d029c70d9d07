import csv
import json

import numpy as np
import pytest

from latscatter import discrete, fixtures, inverse
from latscatter.cli import EXIT_AMBIGUOUS, EXIT_INVALID, EXIT_NO_MATCH, EXIT_OK, EXIT_USAGE, main
from latscatter.graph import load_graph, save_graph


def _manifest(d):
    return json.loads((d / "manifest.json").read_text())


def _energies(path, values):
    path.write_text(json.dumps([{"re": z.real, "im": z.imag} for z in map(complex, values)]))
    return str(path)


def _maps(tmp_path, graph, energies, name="maps"):
    gpath = tmp_path / f"{name}.json"
    save_graph(graph, gpath)
    out = tmp_path / name
    assert main(["dnmap", "--graph", str(gpath), "--energies",
                 _energies(tmp_path / f"{name}_e.json", energies), "--out", str(out)]) == EXIT_OK
    return out


def test_usage(capsys):
    assert main([]) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_lattice_counts(tmp_path):
    out = tmp_path / "hex3.json"
    assert main(["lattice", "--kind", "hex", "--radius", "3", "--out", str(out)]) == EXIT_OK
    g = load_graph(out)
    m = _manifest(tmp_path)
    assert (m["interior"], m["boundary"]) == (g.n_interior, g.n_boundary)
    assert m["command"] == "lattice" and m["outputs"] == ["hex3.json"]


def test_lattice_edit_and_boundary_layer(tmp_path, capsys):
    ok = tmp_path / "ok.json"
    ok.write_text(json.dumps([{"op": "remove_edge", "a": "A:0_0", "b": "B:0_0"}]))
    out = tmp_path / "g.json"
    assert main(["lattice", "--kind", "hex", "--edits", str(ok), "--out", str(out)]) == EXIT_OK
    assert len(load_graph(out).edges) == len(fixtures.hex_patch_perturbed().edges)
    bad = tmp_path / "bad.json"
    b = fixtures.hex_patch().boundary[0]
    nb = next(iter(fixtures.hex_patch().neighbors(b)))
    bad.write_text(json.dumps([{"op": "remove_edge", "a": b, "b": nb}]))
    assert main(["lattice", "--kind", "hex", "--edits", str(bad), "--out", str(out)]) == EXIT_INVALID
    assert "EditTouchesBoundaryLayer" in capsys.readouterr().err


def test_dnmap_nd_row_and_skips(tmp_path):
    d = _maps(tmp_path, fixtures.path_p1(), [2.0], "nd")  # dn at 2 is regular
    gpath = tmp_path / "nd.json"
    out = tmp_path / "ndmaps"
    assert main(["dnmap", "--graph", str(gpath), "--kind", "nd", "--energies",
                 _energies(tmp_path / "e.json", [2.0]), "--out", str(out)]) == EXIT_OK
    bm = discrete.read_map_csv(out / "map_000.csv")
    assert bm.kind == "ND" and np.allclose(bm.matrix[0], [-0.75, 0.25])
    assert (d / "map_000.csv").exists()
    # lam = 1 is a Dirichlet eigenvalue of P1, so the D-N map has a pole there
    pole = tmp_path / "pole"
    assert main(["dnmap", "--graph", str(gpath), "--energies",
                 _energies(tmp_path / "p.json", [1.0, 0.5]), "--out", str(pole)]) == EXIT_OK
    m = _manifest(pole)
    assert [s["index"] for s in m["skipped"]] == [0]
    assert m["outputs"] == ["map_001.csv"]
    empty = tmp_path / "empty"
    assert main(["dnmap", "--graph", str(gpath), "--energies",
                 _energies(tmp_path / "n.json", []), "--out", str(empty)]) == EXIT_OK
    assert sorted(p.name for p in empty.iterdir()) == ["manifest.json"]


@pytest.fixture(scope="module")
def hex_setup(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("hex")
    energies = [0.37, 1.13, 1.71, 2.29]
    target = _maps(tmp, fixtures.hex_patch_perturbed(), energies, "target")
    base_maps = _maps(tmp, fixtures.hex_patch(), energies, "base")
    base = tmp / "base.json"
    return tmp, base, target, base_maps


def test_reconstruct(hex_setup):
    tmp, base, target, base_maps = hex_setup
    out = tmp / "rec" / "r.json"
    out.parent.mkdir()
    assert main(["reconstruct", "--base", str(base), "--target", str(target),
                 "--out", str(out)]) == EXIT_OK
    res = json.loads(out.read_text())
    assert res["unique"]
    assert res["matches"][0]["edits"] == [{"op": "remove_edge", "a": "A:0_0", "b": "B:0_0"}]
    out2 = tmp / "rec" / "r0.json"
    assert main(["reconstruct", "--base", str(base), "--target", str(base_maps),
                 "--out", str(out2)]) == EXIT_OK
    assert json.loads(out2.read_text())["matches"][0]["edits"] == []


def test_reconstruct_no_match(hex_setup, capsys):
    tmp, base, target, _ = hex_setup
    out = tmp / "nomatch.json"
    code = main(["reconstruct", "--base", str(base), "--target", str(target),
                 "--budget", "0", "--out", str(out)])
    assert code == EXIT_NO_MATCH and out.exists()
    assert "NoMatch" in capsys.readouterr().err


def test_reconstruct_ambiguous_threshold(hex_setup):
    tmp, base, target, _ = hex_setup
    out = tmp / "amb.json"
    code = main(["reconstruct", "--base", str(base), "--target", str(target),
                 "--threshold", "1000", "--out", str(out)])
    assert code == EXIT_AMBIGUOUS


def test_corrupted_map(hex_setup, tmp_path, capsys):
    _, base, target, _ = hex_setup
    bad = tmp_path / "bad"
    bad.mkdir()
    text = (target / "map_000.csv").read_text().splitlines()
    text[3] = text[3].replace(",", ";", 1)
    (bad / "map_000.csv").write_text("\n".join(text) + "\n")
    code = main(["reconstruct", "--base", str(base), "--target", str(bad),
                 "--out", str(tmp_path / "x.json")])
    assert code == EXIT_INVALID
    assert "MapParseError" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["dnmap", "--graph", str(tmp_path / "nope.json"), "--energies",
                 str(tmp_path / "e.json"), "--out", str(tmp_path)]) == EXIT_INVALID


def test_deterministic(tmp_path):
    a = _maps(tmp_path, fixtures.tri_patch(), [0.5, 1.5], "a")
    b = _maps(tmp_path, fixtures.tri_patch(), [0.5, 1.5], "b")
    for f in ("map_000.csv", "map_001.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    ma, mb = _manifest(a), _manifest(b)
    assert ma["inputs"] != {} and ma["seed"] == mb["seed"] == 0


def test_spectral_extract(tmp_path):
    g = tmp_path / "p1.json"
    save_graph(fixtures.path_p1(), g)
    out = tmp_path / "s.json"
    assert main(["spectral-extract", "--graph", str(g), "--interval", "-0.5", "2.5",
                 "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert np.allclose(data["eigenvalues"], discrete.neumann_eigs(fixtures.path_p1()).eigenvalues,
                       atol=1e-8)


def test_recover_q(tmp_path):
    box = fixtures.square_box()
    q = np.linspace(-0.4, 0.4, box.n_interior)
    target = _maps(tmp_path, box.with_potential(dict(zip(box.interior, q))),
                   inverse.default_probes(), "t")
    g = tmp_path / "box.json"
    save_graph(box, g)
    out = tmp_path / "q.json"
    assert main(["--seed", "42", "recover-q", "--graph", str(g), "--target", str(target),
                 "--random-start", "--out", str(out)]) == EXIT_OK
    fit = json.loads(out.read_text())
    assert np.allclose([fit["q"][v] for v in box.interior], q, atol=1e-6)


def test_bands(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bands", "--lattice", "hex", "--grid", "8", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x1", "x2", "lambda1", "lambda2"] and len(rows) == 65
    spec = _manifest(tmp_path)["spectrum"]
    assert np.allclose(spec, [[-1, 1]], atol=0.05)


def test_exterior_dn(tmp_path):
    out = tmp_path / "ext.csv"
    assert main(["exterior-dn", "--energy", "-0.3", "--out", str(out)]) == EXIT_OK
    assert _manifest(tmp_path)["residual"] < 1e-2
    assert discrete.read_map_csv(out).matrix.shape == (12, 12)


def test_check_conditions(tmp_path):
    g = tmp_path / "g.json"
    save_graph(fixtures.hex_patch(), g)
    out = tmp_path / "c.json"
    assert main(["check-conditions", "--graph", str(g), "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())
    out2 = tmp_path / "a.json"
    assert main(["check-conditions", "--lattice", "square2", "--energies", "-0.3", "0",
                 "--grid", "128", "--out", str(out2)]) == EXIT_OK
    assert json.loads(out2.read_text())["threshold_candidates"] == [0.0]
    assert main(["check-conditions", "--out", str(out2)]) == EXIT_INVALID
