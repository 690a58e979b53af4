"""Zeros of one radial mode, and why the count stops where it does.

For V = -c / rho^2 with c > 1/4 the E = 0 solution is the Euler function
rho^{1/2} sin(mu log rho), mu = sqrt(c - 1/4).  Below we check the exact
window count, then switch on E > 0 and watch the certified stop move out
like sqrt(c / E).
"""

import math

from hypcount import Certified, FixedWindow, PotentialSpec, RadialProblem, prufer_count

c = 2.5
mu = math.sqrt(c - 0.25)
sp = PotentialSpec.critical(c, rho0=1.0)
r = prufer_count(RadialProblem(sp, 0.0, 0.0), FixedWindow(log_rho_max=2 * math.pi), record_zeros=True)
print(f"E = 0 on (1, e^2pi]: Z = {r.Z}, zeros at log rho =",
      [round(math.log(z), 6) for z in r.zeros], "expected", [round(k * math.pi / mu, 6) for k in (1, 2, 3)])

print("\ncertified counts with auto rho0:")
sp = PotentialSpec.critical(c)
for k in range(2, 9):
    E = 10.0 ** -k
    r = prufer_count(RadialProblem(sp, 0.0, E), Certified())
    print(f"  E = 1e-{k}:  Z = {r.Z:2d}  stop at rho = {r.rho_stop:10.4g}  Z / log(1/E) = {r.Z / math.log(1 / E):.3f}")
print(f"limit mu / (2 pi) = {mu / (2 * math.pi):.3f}")
