"""N_E for a whole model end: modes grouped into bands by breakpoints.

The sphere S^1 has eigenvalues k^2 with multiplicity 2 (1 for k = 0).  The
count is assembled from the zeta values where Z drops, then compared with
the slow mode-by-mode sum and the whole-manifold matrix oracle.
"""

from hypcount import BoundarySpectrum, PotentialSpec, assemble_count, enumerate_count, full_oracle_count
from hypcount.discrete_oracle import oracle_grid
from hypcount.radial_oscillation import truncation_interval

sp = PotentialSpec.power_law(1.0, 1.0)
S1 = BoundarySpectrum.sphere(1)

for E in (0.2, 0.1, 0.05, 0.02):
    r = assemble_count(sp, S1, E)
    print(f"E = {E:<5} N_E = {r.N_E:>8}  Z(0) = {r.Z0:>3}  breakpoints = {len(r.breakpoints):>3}  probes = {r.probes}")

E = 0.05
r = assemble_count(sp, S1, E)
print("\nbands (Z level, modes):", r.bands[:5], "...")
print("enumeration:", enumerate_count(sp, S1, E))
_, stop, _ = truncation_interval(sp, 0.0, E)
L, h = oracle_grid(stop, sp.rho0, E, points_per_unit=100)
print("matrix oracle:", full_oracle_count(sp, S1, E, L, h))

print("\nsmaller E leaves exact integers behind:")
r = assemble_count(sp, S1, 1e-3)
print(f"E = 1e-3: log10 N_E = {r.log10_NE:.4f} (+- {r.log10_err:.1e}), precision = {r.precision}")
