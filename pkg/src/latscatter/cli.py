"""
Command-line front end.

Every subcommand writes its payload plus a ``manifest.json`` recording the
command, SHA-256 hashes of the inputs, the seed, the package version, the
wall-clock time and the list of outputs. Exit codes: 0 success, 2 invalid
input (the error class name is printed on stderr), 3 no structure match,
4 ambiguous structure match, 64 usage.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, discrete, floquet, inverse
from .errors import LatscatterError, NoMatch, NotConverged, PoleAtEnergy
from .graph import check_boundary_structure, check_two_points_condition, load_graph, save_graph
from .lattice import (
    apply_perturbation,
    build_box_patch,
    build_lattice_patch,
    edit_from_dict,
    floquet_model,
    parse_kind,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NO_MATCH = 3
EXIT_AMBIGUOUS = 4
EXIT_USAGE = 64


class _Run:
    """Collects manifest fields while a subcommand runs."""

    def __init__(self, command: str, seed: int):
        self.command = command
        self.seed = seed
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.extra: dict = {}
        self.t0 = time.perf_counter()

    def add_input(self, path) -> Path:
        path = Path(path)
        if path.is_dir():
            for f in sorted(path.glob("*.csv")):
                self.inputs[str(f)] = _sha256(f)
        else:
            self.inputs[str(path)] = _sha256(path)
        return path

    def write_manifest(self, outdir: Path) -> None:
        outdir.mkdir(parents=True, exist_ok=True)
        manifest = {
            "command": self.command,
            "inputs": self.inputs,
            "seed": self.seed,
            "version": __version__,
            "wall_clock_s": round(time.perf_counter() - self.t0, 6),
            "outputs": sorted(self.outputs),
        }
        manifest.update(self.extra)
        with open(outdir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=1)
            fh.write("\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _cplx(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _read_energies(path) -> list[complex]:
    with open(path) as fh:
        recs = json.load(fh)
    if not isinstance(recs, list):
        raise ValueError("energies file must hold a JSON list")
    out = []
    for r in recs:
        if isinstance(r, dict):
            out.append(complex(float(r["re"]), float(r.get("im", 0.0))))
        else:
            out.append(complex(float(r)))
    return out


def _read_maps(directory: Path, kind: str = "DN") -> list[discrete.BoundaryMap]:
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise FileNotFoundError(f"no CSV maps in {directory}")
    maps = [discrete.read_map_csv(f) for f in files]
    wrong = [f.name for f, m in zip(files, maps) if m.kind != kind]
    if wrong:
        raise ValueError(f"expected {kind} maps, got other kinds in {wrong}")
    return maps


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_lattice(args, run: _Run) -> int:
    kind = parse_kind(args.kind)
    if args.box:
        g = build_box_patch(kind, [int(n) for n in args.box.split("x")])
    else:
        g = build_lattice_patch(kind, args.radius)
    if args.edits:
        with open(run.add_input(args.edits)) as fh:
            recs = json.load(fh)
        g = apply_perturbation(g, [edit_from_dict(r) for r in recs])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_graph(g, out)
    run.outputs.append(out.name)
    run.extra.update(kind=kind.label, interior=g.n_interior, boundary=g.n_boundary)
    run.write_manifest(out.parent)
    return EXIT_OK


def cmd_dnmap(args, run: _Run) -> int:
    g = load_graph(run.add_input(args.graph))
    energies = _read_energies(run.add_input(args.energies))
    fn = {"dn": discrete.dn_map, "nd": discrete.nd_map}[args.kind]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    skipped = []
    for k, lam in enumerate(energies):
        try:
            bm = fn(g, lam)
        except PoleAtEnergy as exc:
            skipped.append({"index": k, "energy": _cplx(lam), "error": type(exc).__name__})
            continue
        name = f"map_{k:03d}.csv"
        discrete.write_map_csv(bm, out / name)
        run.outputs.append(name)
    run.extra.update(kind=args.kind.upper(), skipped=skipped)
    run.write_manifest(out)
    return EXIT_OK


def cmd_spectral_extract(args, run: _Run) -> int:
    g = load_graph(run.add_input(args.graph))
    oracle = inverse.DnOracle.from_graph(g, "ND")
    interval = tuple(args.interval) if args.interval else inverse.neumann_bound(g)
    data = inverse.extract_spectral_data(oracle, interval, step=args.step)
    payload = {
        "boundary_order": list(data.boundary_order),
        "interval": list(interval),
        "eigenvalues": data.eigenvalues.tolist(),
        "multiplicities": list(data.multiplicities),
        "residues": [Q.tolist() for Q in data.residues],
    }
    out = Path(args.out)
    _dump_json(payload, out)
    run.outputs.append(out.name)
    run.write_manifest(out.parent)
    return EXIT_OK


def cmd_reconstruct(args, run: _Run) -> int:
    base = load_graph(run.add_input(args.base))
    maps = _read_maps(run.add_input(args.target))
    oracle = inverse.DnOracle.from_maps(maps)
    out = Path(args.out)
    try:
        res = inverse.reconstruct_structure(base, oracle, args.budget, args.universe,
                                            probes=oracle.energies, threshold=args.threshold,
                                            threads=args.threads)
        code = EXIT_OK if res.unique else EXIT_AMBIGUOUS
    except NoMatch as exc:
        res, code = exc.result, EXIT_NO_MATCH
    _dump_json(res.to_dict(), out)
    run.outputs.append(out.name)
    run.extra.update(unique=res.unique, hits=len(res.hits))
    run.write_manifest(out.parent)
    if code == EXIT_NO_MATCH:
        print("NoMatch: no candidate reproduces the target maps", file=sys.stderr)
    elif code == EXIT_AMBIGUOUS:
        print(f"ambiguous: {len(res.hits)} candidates match", file=sys.stderr)
    return code


def cmd_recover_q(args, run: _Run) -> int:
    g = load_graph(run.add_input(args.graph))
    maps = _read_maps(run.add_input(args.target))
    oracle = inverse.DnOracle.from_maps(maps)
    q0 = None
    if args.random_start:
        q0 = np.random.default_rng(run.seed).uniform(-1, 1, g.n_interior)
    fit = inverse.recover_potential(g, oracle, q0=q0, probes=oracle.energies,
                                    tol=args.tol, max_iter=args.max_iter)
    payload = {
        "q": dict(zip(g.interior, fit.q.tolist())),
        "residual": fit.residual,
        "iterations": fit.iterations,
        "history": fit.history,
    }
    out = Path(args.out)
    _dump_json(payload, out)
    run.outputs.append(out.name)
    run.write_manifest(out.parent)
    return EXIT_OK


def cmd_bands(args, run: _Run) -> int:
    model = floquet_model(parse_kind(args.lattice))
    x, w = floquet.band_grid(model, args.grid)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    head = [f"x{j + 1}" for j in range(model.d)] + [f"lambda{j + 1}" for j in range(model.s)]
    with open(out, "w") as fh:
        fh.write(",".join(head) + "\n")
        for xi, wi in zip(x, w):
            fh.write(",".join(f"{v:.17g}" for v in (*xi, *wi)) + "\n")
    run.outputs.append(out.name)
    run.extra.update(spectrum=floquet.spectrum_interval(model))
    run.write_manifest(out.parent)
    return EXIT_OK


def cmd_exterior_dn(args, run: _Run) -> int:
    kind = parse_kind(args.lattice)
    patch = build_lattice_patch(kind, args.radius)
    res = floquet.exterior_dn_limiting_absorption(patch, args.energy, kind,
                                                  eps_schedule=args.eps or None)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    discrete.write_map_csv(res.map, out)
    run.outputs.append(out.name)
    run.extra.update(residual=res.residual, eps=sorted(res.samples, reverse=True))
    run.write_manifest(out.parent)
    return EXIT_OK


def cmd_check_conditions(args, run: _Run) -> int:
    if (args.graph is None) == (args.lattice is None):
        raise ValueError("give exactly one of --graph or --lattice")
    if args.graph:
        g = load_graph(run.add_input(args.graph))
        base = check_boundary_structure(g)
        c2 = check_two_points_condition(g, args.mode, n_samples=args.samples, seed=run.seed)
        payload = {**base.to_dict(), **{k: v for k, v in c2.to_dict().items() if k.startswith("c2")}}
    else:
        model = floquet_model(parse_kind(args.lattice))
        probes = args.energies if args.energies else np.linspace(-1, 1, 21).tolist()
        payload = floquet.check_assumptions(model, probes, grid_n=args.grid).to_dict()
    out = Path(args.out)
    _dump_json(payload, out)
    run.outputs.append(out.name)
    run.write_manifest(out.parent)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latscatter", description=__doc__.strip().splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--seed", type=int, default=0, help="seed for sampled checks and random starts")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    s = sub.add_parser("lattice", help="build (and perturb) a lattice patch")
    s.add_argument("--kind", "--lattice", dest="kind", required=True, help="square2, hex or tri")
    s.add_argument("--radius", type=int, default=1)
    s.add_argument("--box", help="rectangular block instead of a ball, e.g. 3x4")
    s.add_argument("--edits", help="JSON list of edit records")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_lattice)

    s = sub.add_parser("dnmap", help="D-N or N-D maps over an energy list")
    s.add_argument("--graph", required=True)
    s.add_argument("--kind", choices=("dn", "nd"), default="dn")
    s.add_argument("--energies", required=True, help='JSON list of {"re": .., "im": ..}')
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_dnmap)

    s = sub.add_parser("spectral-extract", help="boundary spectral data from the N-D map")
    s.add_argument("--graph", required=True)
    s.add_argument("--interval", type=float, nargs=2, metavar=("LO", "HI"))
    s.add_argument("--step", type=float, default=1e-3)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_spectral_extract)

    s = sub.add_parser("reconstruct", help="find the local edit behind tabulated D-N maps")
    s.add_argument("--base", required=True)
    s.add_argument("--target", required=True, help="directory of D-N map CSVs")
    s.add_argument("--budget", type=int, default=1)
    s.add_argument("--universe", choices=("remove-edge", "full"), default="remove-edge")
    s.add_argument("--threshold", type=float, default=inverse.MATCH_THRESHOLD)
    s.add_argument("--threads", type=int)
    s.add_argument("--out", default="reconstruction.json")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("recover-q", help="fit the interior potential to tabulated D-N maps")
    s.add_argument("--graph", required=True)
    s.add_argument("--target", required=True, help="directory of D-N map CSVs")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=50)
    s.add_argument("--random-start", action="store_true", help="start from a seeded random q")
    s.add_argument("--out", default="potential.json")
    s.set_defaults(func=cmd_recover_q)

    s = sub.add_parser("bands", help="Floquet bands on a torus grid")
    s.add_argument("--lattice", required=True)
    s.add_argument("--grid", type=int, default=128)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bands)

    s = sub.add_parser("exterior-dn", help="exterior D-N map by limiting absorption")
    s.add_argument("--lattice", default="square2")
    s.add_argument("--radius", type=int, default=2)
    s.add_argument("--energy", type=float, required=True)
    s.add_argument("--eps", type=float, nargs="+", help="absorption ladder (descending)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_exterior_dn)

    s = sub.add_parser("check-conditions", help="boundary conditions of a graph or lattice assumptions")
    s.add_argument("--graph")
    s.add_argument("--mode", choices=("auto", "exhaustive", "sampled"), default="auto")
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--lattice")
    s.add_argument("--energies", type=float, nargs="+")
    s.add_argument("--grid", type=int, default=256)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_check_conditions)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    run = _Run(args.command, args.seed)
    try:
        return args.func(args, run)
    except (LatscatterError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        name = type(exc).__name__
        if isinstance(exc, NotConverged):
            name = "NotConverged"
        print(f"{name}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
