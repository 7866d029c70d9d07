"""Periodic lattices: bands, thresholds, exterior maps and transmission.

Run time is about half a minute, dominated by the limiting-absorption
solves in the last section.
"""
import numpy as np

from latscatter import fixtures
from latscatter.floquet import (
    check_assumptions,
    exterior_dn_limiting_absorption,
    finite_kernel_check,
    spectrum_interval,
    verify_transmission_consistency,
)
from latscatter.lattice import HEXAGONAL, TRIANGULAR, Square, build_lattice_patch, floquet_model

for kind in (Square(2), HEXAGONAL, TRIANGULAR):
    print(f"{kind.name:8s} spectrum {np.round(spectrum_interval(floquet_model(kind)), 4).tolist()}")

# thresholds: saddle points and band edges of the square lattice, the Dirac cone of hex
rep = check_assumptions(floquet_model(Square(2)), np.linspace(-1, 1, 21))
print("square threshold candidates:", rep.threshold_candidates)
print("hex threshold candidates:", check_assumptions(floquet_model(HEXAGONAL), [0.0, 0.5]).threshold_candidates)

print("no compactly supported solutions:",
      all(finite_kernel_check(floquet_model(HEXAGONAL), x) for x in (-0.8, -0.1, 0.6)))

ext = exterior_dn_limiting_absorption(build_lattice_patch(Square(2), 2), -0.3)
print(f"exterior map at -0.3: eps ladder {sorted(ext.samples, reverse=True)}, residual {ext.residual:.1e}")

a = verify_transmission_consistency(fixtures.transmission_patch(), -0.3)
b = verify_transmission_consistency(fixtures.transmission_patch_perturbed(), -0.3)
sep = np.linalg.norm(a.interior_map.matrix - b.interior_map.matrix) / np.linalg.norm(a.interior_map.matrix)
print(f"transmission defects {a.defect:.1e} and {b.defect:.1e}; interior maps differ by {sep:.2f}")
