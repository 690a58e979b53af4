import itertools
import math

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from hypcount.boundary_spectrum import (
    BoundarySpectrum,
    InsufficientSpectrumError,
    cumulative_multiplicity,
    sphere_mode,
    weyl_estimate,
)


def _harmonic_dim(n, k):
    # dimension of degree-k harmonic polynomials in n+1 variables, by brute force:
    # homogeneous degree k minus homogeneous degree k-2
    def hom(d):
        if d < 0:
            return 0
        return sum(1 for e in itertools.product(range(d + 1), repeat=n + 1) if sum(e) == d)
    return hom(k) - hom(k - 2)


@pytest.mark.parametrize("n,k,expected", [(1, 3, (9, 2)), (2, 3, (12, 7)), (3, 2, (8, 9))])
def test_sphere_mode_examples(n, k, expected):
    assert sphere_mode(n, k) == expected


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("k", range(6))
def test_sphere_multiplicity_matches_polynomial_count(n, k):
    assert sphere_mode(n, k) == (k * (k + n - 1), _harmonic_dim(n, k))


def test_cumulative_small_bounds():
    assert cumulative_multiplicity(BoundarySpectrum.sphere(1), 10).exact == 7
    assert cumulative_multiplicity(BoundarySpectrum.sphere(2), 6).exact == 9


def test_cumulative_huge_bound_high_precision():
    r = cumulative_multiplicity(BoundarySpectrum.sphere(1), log_B=40.0)
    with mpmath.workdps(60):
        root = int(mpmath.floor(mpmath.sqrt(mpmath.e ** 40)))
        expected = float(mpmath.log10(2 * root + 1))
    assert r.exact == 2 * root + 1
    assert r.log10 == pytest.approx(expected, abs=1e-12)
    assert r.is_large is False or r.exact >= 10**15


def test_cumulative_mpf_bound_far_beyond_double():
    # e^{2000}: the count 2 floor(e^{1000}) + 1 has ~435 digits
    k = BoundarySpectrum.sphere(1).count(log_B=2000.0)
    with mpmath.workdps(500):
        assert k == 2 * int(mpmath.floor(mpmath.e ** 1000)) + 1


@pytest.mark.parametrize("n,B,approx,exact", [(1, 10000, 200, 201), (2, 110, 110, 121), (1, 4, 4, 5)])
def test_weyl_estimate(n, B, approx, exact):
    sp = BoundarySpectrum.sphere(n)
    assert weyl_estimate(sp, B) == pytest.approx(approx, rel=1e-12)
    assert sp.count(B) == exact


def test_strict_count_excludes_boundary_level():
    sp = BoundarySpectrum.sphere(2)
    assert sp.count(6) == 9
    assert sp.count(6, strict=True) == 4


def test_torus_counts_against_brute_force():
    L = (2 * math.pi, 3.0)
    tor = BoundarySpectrum.flat_torus(L)
    B = 30.0
    brute = sum(1 for a in range(-40, 41) for b in range(-40, 41)
                if (a * 2 * math.pi / L[0]) ** 2 + (b * 2 * math.pi / L[1]) ** 2 <= B)
    assert tor.count(B) == brute
    assert sum(m for _, m in tor.iter_levels(B)) == brute


def test_explicit_spectrum_exhaustion():
    ex = BoundarySpectrum.explicit([(0.0, 1), (1.5, 3)], n=2)
    assert ex.count(1.0) == 1
    with pytest.raises(InsufficientSpectrumError):
        ex.count(2.0)


def test_explicit_rejects_unsorted_levels():
    with pytest.raises(ValueError):
        BoundarySpectrum.explicit([(2.0, 1), (1.0, 1)], n=1)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.floats(0, 1e6), st.floats(0, 1e6))
def test_counts_monotone_in_bound(n, b1, b2):
    sp = BoundarySpectrum.sphere(n)
    lo, hi = sorted((b1, b2))
    assert sp.count(lo) <= sp.count(hi)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 30))
def test_sphere_count_equals_level_sum(n, K):
    B = sphere_mode(n, K)[0]
    assert BoundarySpectrum.sphere(n).count(B) == sum(sphere_mode(n, k)[1] for k in range(K + 1))


def test_large_float_bound_uses_enough_digits():
    # 1e87 is an exact integer in binary; its root has 44 digits
    assert BoundarySpectrum.sphere(1).count(1e87) == 2 * math.isqrt(int(1e87)) + 1


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_log_count_matches_exact_count(n):
    S = BoundarySpectrum.sphere(n)
    for lb in (250.0, 3000.0):
        exact = mpmath.log(S.count(log_B=lb))
        assert S.log_count(lb) == pytest.approx(float(exact), rel=1e-14)
    with pytest.raises(OverflowError):
        BoundarySpectrum.flat_torus([1.0, 2.0]).log_count(1e3)
