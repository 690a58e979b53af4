import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypcount.potential_model import CustomPotential, PotentialSpec, RadialProblem, eval_Q
from hypcount.radial_oscillation import (
    Certified,
    FixedWindow,
    prufer_count,
    solve_cauchy,
    transform_for,
    truncation_interval,
)

# zero count of the square well (depth 4 on [0, 5], E = 1e-4, Dirichlet) fixed
# beforehand by finite-difference inertia with grid step 1e-3 on [0, 1805]
SQUARE_WELL_Z = 3


def test_transform_examples():
    assert transform_for(PotentialSpec.power_law(1.0, 1.0)).forward(4.0) == pytest.approx(4.0, rel=1e-15)
    cr = transform_for(PotentialSpec.critical(1.0))
    for rho in (3.0, 50.0, 1e6):
        assert cr.forward(rho) == pytest.approx(math.sqrt(0.75) * math.log(rho), rel=1e-14)
    il = transform_for(PotentialSpec.iterated_log(1, 1.0))
    assert il.forward(math.exp(math.e)) == pytest.approx(math.sqrt(0.75), rel=1e-14)


@pytest.mark.parametrize("spec", [
    PotentialSpec.power_law(1.3, 0.7),
    PotentialSpec.critical(2.0),
    PotentialSpec.iterated_log(1, 1.0),
    PotentialSpec.iterated_log(2, 3.0),
])
def test_transform_roundtrip_and_derivative(spec):
    tr = transform_for(spec)
    for k in (1.1, 3.0, 40.0):
        rho = spec.rho0 * k
        assert tr.inverse(tr.forward(rho)) == pytest.approx(rho, rel=1e-10)
        h = 1e-5 * rho
        fd = (tr.forward(rho + h) - tr.forward(rho - h)) / (2 * h)
        assert tr.dt_drho(rho) == pytest.approx(fd, rel=1e-6)


def test_truncation_power_law_turning_point():
    sp = PotentialSpec.power_law(1.0, 1.0)
    rho0, rho_stop, _ = truncation_interval(sp, 0.0, 0.1)
    assert rho0 == sp.rho0
    assert rho_stop >= 10.0 * (1 - 1e-12)
    assert rho_stop < 10.5
    for r in np.geomspace(rho_stop, 1e6, 2000):
        assert eval_Q(sp, 0.0, r) + 0.1 > 0


def test_negative_delta_has_no_zeros():
    sp = PotentialSpec.power_law(1.0, -1.0)
    # E - rho^{-3} > 0 on the whole half line once E > rho0^{-3}
    _, rho_stop, _ = truncation_interval(sp, 0.0, 1.0)
    assert rho_stop == sp.rho0
    for E in (1e-6, 1e-3, 0.01, 1.0):
        _, rho_stop, _ = truncation_interval(sp, 0.0, E)
        assert rho_stop >= min(E ** (-1 / 3), 1e300) * (1 - 1e-9) or rho_stop == sp.rho0
        # Dirichlet: the phase int |V|^{1/2} = 2 e^{-1/2} stays below pi
        assert prufer_count(RadialProblem(sp, 0.0, E, "dirichlet")).Z == 0
    # Neumann binds one state whose energy lies between -1e-3 and -1e-2
    # (matrix inertia on the same instances gives 1, 1, 0, 0)
    got = [prufer_count(RadialProblem(sp, 0.0, E, "neumann")).Z for E in (1e-6, 1e-3, 0.01, 1.0)]
    assert got == [1, 1, 0, 0]


def test_truncation_critical_large_zeta_dense_scan():
    sp = PotentialSpec.critical(1.0)
    E, zeta = 0.01, 50.0
    _, rho_stop, _ = truncation_interval(sp, zeta, E)
    rho = np.geomspace(sp.rho0, 1e5, 200000)
    vals = np.array([eval_Q(sp, zeta, r) + E for r in rho])
    neg = rho[vals < 0]
    assert neg.size and neg.max() <= rho_stop
    assert np.all(vals[rho > rho_stop] > 0)
    # single sign pattern: + then - then +
    changes = np.count_nonzero(np.diff(np.sign(vals)))
    assert changes == 2


def test_constant_positive_has_no_zero():
    p = CustomPotential.constant(1.0, 0.0)
    assert prufer_count(RadialProblem(p), FixedWindow(rho_max=25.0)).Z == 0


def test_constant_negative_counts_sine_zeros():
    p = CustomPotential.constant(-1.0, 0.0)
    r = prufer_count(RadialProblem(p), FixedWindow(rho_max=10.0), record_zeros=True)
    assert r.Z == 3
    assert r.zeros == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi], abs=1e-6)


def test_euler_solution_window():
    sp = PotentialSpec.critical(2.5, rho0=1.0)
    r = prufer_count(RadialProblem(sp, 0.0, 0.0), FixedWindow(log_rho_max=2 * math.pi))
    assert r.Z == 3


def test_square_well_matches_matrix_count():
    well = CustomPotential(lambda r: -4.0 if r < 5 else 0.0, 0.0, positive_beyond=5.0, kinks=(5.0,))
    assert prufer_count(RadialProblem(well, E=1e-4), Certified()).Z == SQUARE_WELL_Z


def test_solve_cauchy_hyperbolic_functions():
    p = CustomPotential.constant(1.0, 0.0)
    (r, u, du), = solve_cauchy(RadialProblem(p), (0.0, 1.0), [1.0])
    assert u == pytest.approx(math.sinh(1.0), rel=1e-8)
    (r, u, du), = solve_cauchy(RadialProblem(p, bc="neumann"), (0.0, 1.0), [1.0])
    assert u == pytest.approx(math.cosh(1.0), rel=1e-8)
    assert u == pytest.approx(1.54308, abs=1e-5)


def test_solve_cauchy_self_convergence():
    sp = PotentialSpec.critical(1.0)
    prob = RadialProblem(sp, 4.0, 0.05)
    a = solve_cauchy(prob, (sp.rho0, 30.0), 30, rtol=1e-9, atol=1e-12)
    b = solve_cauchy(prob, (sp.rho0, 30.0), 30, rtol=1e-12, atol=1e-15)
    for (_, u1, d1), (_, u2, d2) in zip(a[1:], b[1:]):
        scale = max(abs(u2), abs(d2))
        assert abs(u1 - u2) <= 1e-7 * scale
        assert abs(d1 - d2) <= 1e-7 * scale


def test_zero_locations_increase_and_match_raw_solution():
    sp = PotentialSpec.critical(10.0)
    prob = RadialProblem(sp, 0.0, 0.001)
    r = prufer_count(prob, Certified(), record_zeros=True)
    assert r.Z == len(r.zeros) >= 2
    assert all(b > a for a, b in zip(r.zeros, r.zeros[1:]))
    # u changes sign across every recorded zero
    for z in r.zeros:
        (_, ua, _), (_, ub, _) = solve_cauchy(prob, (sp.rho0, z * 1.01), [z * 0.99, z * 1.01], rtol=1e-11)
        assert ua * ub < 0


def test_dual_route_raw_and_transformed_agree():
    rng = random.Random(3)
    done = 0
    while done < 25:
        fam = rng.choice(["pl", "cr", "il"])
        if fam == "pl":
            sp = PotentialSpec.power_law(rng.uniform(0.5, 2.0), rng.uniform(0.3, 1.5))
        elif fam == "cr":
            sp = PotentialSpec.critical(rng.uniform(0.5, 4.0))
        else:
            sp = PotentialSpec.iterated_log(1, rng.uniform(0.5, 4.0))
        prob = RadialProblem(sp, rng.choice([0.0, rng.uniform(0.5, 50.0)]), rng.uniform(0.01, 0.2),
                             rng.choice(["dirichlet", "neumann"]))
        a = prufer_count(prob, Certified(), coordinate="transformed", rtol=1e-10)
        b = prufer_count(prob, Certified(), coordinate="raw", rtol=1e-10)
        if a.ambiguous or b.ambiguous:
            continue
        assert a.Z == b.Z, prob
        done += 1


def test_certified_count_stable_under_window_extension():
    sp = PotentialSpec.power_law(1.0, 1.0)
    prob = RadialProblem(sp, 0.0, 0.01)
    r = prufer_count(prob, Certified())
    far = prufer_count(prob, FixedWindow(rho_max=10 * r.rho_stop))
    assert far.Z == r.Z


def test_huge_zeta_skips_to_zero():
    sp = PotentialSpec.iterated_log(1, 1.0)
    r = prufer_count(RadialProblem(sp, E=0.01, bc="neumann", log_zeta=64.0), Certified())
    assert r.Z == 0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.005, 0.2), st.floats(0.005, 0.2),
       st.sampled_from(["dirichlet", "neumann"]))
def test_monotone_in_E(c, E1, E2, bc):
    sp = PotentialSpec.critical(c)
    lo, hi = sorted((E1, E2))
    z_lo = prufer_count(RadialProblem(sp, 0.0, lo, bc)).Z
    z_hi = prufer_count(RadialProblem(sp, 0.0, hi, bc)).Z
    assert z_lo >= z_hi


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 1.5), st.floats(0, 200.0), st.floats(0, 200.0),
       st.sampled_from(["dirichlet", "neumann"]))
def test_monotone_in_zeta(delta, z1, z2, bc):
    sp = PotentialSpec.power_law(1.0, delta)
    lo, hi = sorted((z1, z2))
    a = prufer_count(RadialProblem(sp, lo, 0.02, bc)).Z
    b = prufer_count(RadialProblem(sp, hi, 0.02, bc)).Z
    assert a >= b


def test_unresolved_centrifugal_wall_is_crossed():
    # at rho ~ 1e19 one ulp of 2 rho is ~ 1e4, so W jumps between doubles
    sp = PotentialSpec.critical(0.35)
    r = prufer_count(RadialProblem(sp, E=1e-40, log_zeta=1e18), Certified())
    assert r.Z == 0 and "unresolved wall" in r.notes[0]
    lo = prufer_count(RadialProblem(sp, E=1e-40, log_zeta=1e3), Certified())
    assert lo.Z == prufer_count(RadialProblem(sp, E=1e-40), Certified()).Z == 4


def test_tail_extension_far_out():
    r = prufer_count(RadialProblem(PotentialSpec.critical(0.35), E=1e-80, bc="neumann"), Certified())
    assert r.Z > 0 and not r.ambiguous
