"""The 1/4 threshold, seen far below the energies a float grid usually reaches.

Below 1/4 a single mode stops oscillating, so N_E saturates; above it every
decade of E adds zeros.  On E = 1e-2 .. 1e-6 the two cases still look alike,
and the contrast only opens up further down.  Counts past 10^15 are reported
as log10 N_E.
"""

from hypcount import BoundarySpectrum, PotentialSpec, assemble_count

S1 = BoundarySpectrum.sphere(1)
Es = [10.0 ** -k for k in (2, 6, 20, 40, 300)]


def show(label, sp):
    row = []
    for E in Es:
        r = assemble_count(sp, S1, E, "neumann")
        row.append(str(r.N_E) if r.N_E is not None else f"10^{r.log10_NE:.4g}")
    print(f"{label:<22}", "  ".join(f"{v:>13}" for v in row))


print(f"{'E':<22}", "  ".join(f"{E:>13.0e}" for E in Es))
show("critical c = 0.15", PotentialSpec.critical(0.15))
show("critical c = 0.35", PotentialSpec.critical(0.35))
show("iterated-log c1 = 0.1", PotentialSpec.iterated_log(1, 0.1))
show("iterated-log c1 = 1.0", PotentialSpec.iterated_log(1, 1.0))
