"""Dirichlet-Neumann bracketing on a discretised half line.

Cutting one bond of the three-point operator and adding (Dirichlet) or
removing (Neumann) its coupling on both ends is a rank-one change, so the
two split operators sandwich the eigenvalue count of the original.
"""

from hypcount import PotentialSpec, bracketing_demo, fd_tridiagonal

sp = PotentialSpec.power_law(2.0, 1.0)
T = fd_tridiagonal(sp, 0.5, sp.rho0 + 60.0, 0.05)
for cut in (50, 200, 600, 1000):
    nd, n, nn, holds = bracketing_demo(T, cut, -0.01)
    print(f"cut at node {cut:4d}:  N(T_D) = {nd:3d} <= N(T) = {n:3d} <= N(T_N) = {nn:3d}  {'ok' if holds else 'VIOLATED'}")
