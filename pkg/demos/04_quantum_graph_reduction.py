"""From a quantum graph to a discrete problem on its vertices.

On an equilateral graph with delta couplings, an eigenfunction is fixed
by its vertex values, and the edge equation becomes an energy-dependent
vertex operator.  We compare its D-N map with direct ODE shooting, pass
between edge and vertex normalisations, and test the resolvent formula.
"""
import numpy as np

from latscatter import fixtures
from latscatter.quantum import (
    E_of_lambda,
    krein_resolvent_check,
    metric_dn_map,
    shooting_dn_map,
    translate_dn,
    unperturbed_spectrum_membership,
)

mg = fixtures.metric_hex_cell(kappa=0.5)
for lam in (2 + 0.5j, 12 + 2j):
    a, b = metric_dn_map(mg, lam).matrix, shooting_dn_map(mg, lam).matrix
    print(f"lam={lam}: reduction vs shooting {np.abs(a - b).max():.1e}")

E = metric_dn_map(mg, 3 + 1j)
V = translate_dn(E, "edge-to-vertex", mg)
print("translation round trip:",
      f"{np.abs(translate_dn(V, 'vertex-to-edge', mg).matrix - E.matrix).max():.1e}")

# the band map sends graph energies to energies of the discrete Laplacian
lam = np.linspace(0, 40, 9)
print("E(lam) on a coarse grid:", np.round(E_of_lambda(lam).real, 3))
print("all of [0, 40] in the spectrum (kappa = 0):",
      all(unperturbed_spectrum_membership(x) for x in np.linspace(0, 40, 400)))
print("with kappa = 5 gaps open:",
      sum(not unperturbed_spectrum_membership(x, 5.0) for x in np.linspace(0.01, 40, 400)),
      "of 400 samples outside")

for name, m in fixtures.krein_fixtures(1.0).items():
    f = {e: [1.0, -0.5] for e in m.graph.edges}
    print(f"resolvent identity on {name:20s} {krein_resolvent_check(m, -3 + 1j, f):.1e}")
