import math
import random

import mpmath
import pytest

from hypcount.potential_model import CustomPotential, PotentialSpec, RadialProblem
from hypcount.radial_oscillation import Certified, FixedWindow, prufer_count
from hypcount.tail_certificates import (
    Certificate,
    DivergentIntegralError,
    certify_tail_positive,
    olver_envelopes,
    total_variation_F,
)

# total variation of F for f = 0.1 + rho^{-2}, g = 0 on [10, oo), from a
# 30-digit mpmath quadrature with symbolic-precision differentiation
TV_CRITICAL_TAIL = 0.0138383610842157


def test_constant_f_has_zero_variation():
    assert total_variation_F(lambda r: 0.3, lambda r: 0.0, (1.0, 50.0)) == pytest.approx(0.0, abs=1e-10)
    assert total_variation_F(lambda r: 0.3, lambda r: 0.0, (1.0, 50.0), df=lambda r: 0.0, d2f=lambda r: 0.0) == 0.0


@pytest.mark.parametrize("E,rho1", [(0.1, 2.0), (1.0, 5.0), (4.0, 0.0)])
def test_exponential_g_variation(E, rho1):
    V = total_variation_F(lambda r: E, lambda r: math.exp(-r), (rho1, math.inf),
                          df=lambda r: 0.0, d2f=lambda r: 0.0)
    assert V == pytest.approx(E ** -0.5 * math.exp(-rho1), rel=1e-9)


def test_inverse_square_f_variation_against_quadrature():
    V = total_variation_F(lambda r: 0.1 + r**-2, lambda r: 0.0, (10.0, math.inf))
    assert V == pytest.approx(TV_CRITICAL_TAIL, rel=1e-7)
    V2 = total_variation_F(lambda r: 0.1 + r**-2, lambda r: 0.0, (10.0, math.inf),
                           df=lambda r: -2 * r**-3, d2f=lambda r: 6 * r**-4)
    assert V2 == pytest.approx(TV_CRITICAL_TAIL, rel=1e-9)


def test_divergent_variation_raises():
    with pytest.raises(DivergentIntegralError):
        total_variation_F(lambda r: 1.0, lambda r: 1.0 / r, (1.0, math.inf),
                          df=lambda r: 0.0, d2f=lambda r: 0.0)


def test_olver_examples():
    b = olver_envelopes(lambda r: 1.0, lambda r: 0.0, (0.0, math.inf), df=lambda r: 0.0, d2f=lambda r: 0.0)
    assert b.eps1 == 0.0 and b.eps2 == 0.0
    # g = 0.2 e^{-rho} on [0, oo) with f = 1 gives V = 0.2
    b = olver_envelopes(lambda r: 1.0, lambda r: 0.2 * math.exp(-r), (0.0, math.inf),
                        df=lambda r: 0.0, d2f=lambda r: 0.0)
    assert b.V == pytest.approx(0.2, rel=1e-10)
    assert b.eps1 == pytest.approx(math.exp(0.1) - 1, rel=1e-9)
    assert b.eps1 == pytest.approx(0.10517, abs=1e-5)
    b = olver_envelopes(lambda r: 1.0, lambda r: math.exp(-r), (5.0, math.inf),
                        df=lambda r: 0.0, d2f=lambda r: 0.0)
    assert b.eps1 == pytest.approx(math.expm1(math.exp(-5) / 2), rel=1e-9)


def test_eps_decreases_as_interval_moves_right():
    f = lambda r: 0.05 + 2.0 / r**2
    eps = [olver_envelopes(f, lambda r: math.exp(-r), (a, math.inf)).eps1 for a in (3, 5, 8, 13, 21, 34)]
    assert all(b <= a for a, b in zip(eps, eps[1:]))


def test_positive_constant_tail_certified():
    p = CustomPotential.constant(0.5, 0.0, positive_beyond=0.0)
    cert = certify_tail_positive(p, 0.0, 0.0, 1.0)
    assert cert and cert.kind is Certificate.POSITIVITY_TAIL


def test_power_law_beyond_turning_point_certified():
    sp = PotentialSpec.power_law(1.0, 1.0)
    cert = certify_tail_positive(sp, 0.0, 0.1, 10.5)
    assert cert and cert.kind is Certificate.POSITIVITY_TAIL
    # Q + E = 0.1 - 1/rho is at least 0.1 - 1/10.5 on the tail
    assert 0 < cert.margin <= 0.1 - 1 / 10.5 + 1e-12


def test_inside_oscillation_region_refused():
    sp = PotentialSpec.power_law(1.0, 1.0)
    ref = certify_tail_positive(sp, 0.0, 0.1, 5.0)
    assert not ref
    assert "WKB" in ref.reason


def test_certified_point_has_no_further_zeros():
    rng = random.Random(5)
    n = 0
    while n < 20:
        sp = rng.choice([PotentialSpec.power_law(rng.uniform(0.5, 2), rng.uniform(0.3, 1.5)),
                         PotentialSpec.critical(rng.uniform(0.5, 4)),
                         PotentialSpec.iterated_log(1, rng.uniform(0.5, 4))])
        prob = RadialProblem(sp, rng.uniform(0, 20), rng.uniform(0.005, 0.2), rng.choice(["d", "n"]))
        r = prufer_count(prob, Certified())
        rho_star = r.rho_stop
        if not certify_tail_positive(sp, prob.zeta, prob.E, rho_star) or r.ambiguous:
            continue
        far = prufer_count(prob, FixedWindow(rho_max=10 * rho_star))
        assert far.Z == r.Z, prob
        n += 1
