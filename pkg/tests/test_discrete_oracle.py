import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigvalsh_tridiagonal

from hypcount.boundary_spectrum import BoundarySpectrum
from hypcount.discrete_oracle import (
    OracleRefusal,
    TridiagonalOperator,
    bracketing_demo,
    dense_count,
    fd_tridiagonal,
    full_oracle_count,
    inertia_below,
    inertia_detail,
    oracle_grid,
    richardson_eigenvalues,
)
from hypcount.mode_aggregation import assemble_count
from hypcount.potential_model import CustomPotential, PotentialSpec, RadialProblem
from hypcount.radial_oscillation import prufer_count, truncation_interval

# whole-manifold counts fixed by full_oracle_count with grid halving
# (identical integers at h, h/2, h/4)
FROZEN_FULL_COUNTS = [
    # family, c, delta, sphere n, E, bc, count
    ("power-law", 1.0, 1.0, 1, 0.2, "dirichlet", 0),
    ("power-law", 1.0, 1.0, 1, 0.05, "dirichlet", 791),
    ("power-law", 1.0, 1.0, 1, 0.05, "neumann", 791),
    ("critical", 1.0, None, 2, 0.1, "dirichlet", 0),
    ("critical", 1.0, None, 2, 0.02, "neumann", 25),
]


def _op(d, e):
    return TridiagonalOperator(0.0, 1.0, np.asarray(d, float), np.asarray(e, float))


def _spec(family, c, delta):
    return PotentialSpec.power_law(c, delta) if family == "power-law" else PotentialSpec.critical(c)


def test_three_by_three_inertia():
    T = _op([2, 2, 2], [-1, -1])
    assert inertia_below(T, 2.0) == 1
    assert inertia_below(T, 3.0) == 2
    # 2 + sqrt(2) ~ 3.414 lies below 3.5, so all three eigenvalues count there
    assert inertia_below(T, 3.5) == 3
    assert inertia_below(T, 2 + math.sqrt(2) + 1e-9) == 3
    d = inertia_detail(T, 2.0)
    assert d.ambiguous and d.count == 1


def test_dirichlet_laplacian_first_eigenvalue():
    p = CustomPotential.constant(0.0, 0.0)
    T = fd_tridiagonal(p, 0.0, math.pi, math.pi / 1000)
    w = eigvalsh_tridiagonal(T.diag, T.off, select="i", select_range=(0, 0))
    assert abs(w[0] - 1.0) < 1e-4
    ex = richardson_eigenvalues(p, 0.0, math.pi, math.pi / 200, 2.0)
    assert ex[0] == pytest.approx(1.0, abs=1e-9)


def test_constant_shift_moves_spectrum_exactly():
    a = fd_tridiagonal(CustomPotential.constant(0.0, 0.0), 0.0, 5.0, 0.01)
    b = fd_tridiagonal(CustomPotential.constant(-1.0, 0.0), 0.0, 5.0, 0.01)
    assert np.array_equal(b.diag, a.diag - 1.0)
    assert np.array_equal(b.off, a.off)
    wa = eigvalsh_tridiagonal(a.diag, a.off)
    wb = eigvalsh_tridiagonal(b.diag, b.off)
    assert np.allclose(wb, wa - 1.0, rtol=0, atol=1e-9 * np.abs(wa).max())


def test_random_tridiagonal_against_dense():
    rng = np.random.default_rng(1)
    d = rng.normal(size=500)
    e = rng.normal(size=499)
    T = _op(d, e)
    w = np.linalg.eigvalsh(T.dense())
    for thr in rng.uniform(w.min() - 0.5, w.max() + 0.5, 20):
        assert inertia_below(T, thr) == int(np.sum(w < thr)) == dense_count(T, thr)


def test_hundred_random_instances_exact():
    rng = np.random.default_rng(2)
    for _ in range(100):
        M = int(rng.integers(2, 2001))
        T = _op(rng.normal(scale=rng.uniform(0.1, 10), size=M), rng.normal(size=M - 1))
        thr = float(rng.normal())
        assert inertia_below(T, thr) == dense_count(T, thr)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(2, 60), st.integers(0, 2**32 - 1), st.floats(-2, 2))
def test_block_diagonal_additivity(m1, m2, seed, thr):
    rng = np.random.default_rng(seed)
    A = (rng.normal(size=m1), rng.normal(size=m1 - 1))
    B = (rng.normal(size=m2), rng.normal(size=m2 - 1))
    full = _op(np.concatenate([A[0], B[0]]), np.concatenate([A[1], [0.0], B[1]]))
    assert inertia_below(full, thr) == inertia_below(_op(*A), thr) + inertia_below(_op(*B), thr)


def test_matrix_matches_prufer_critical_mode():
    sp = PotentialSpec.critical(1.0)
    for E in (0.02, 0.005, 0.001):
        r = prufer_count(RadialProblem(sp, 4.0, E))
        L, h = oracle_grid(r.rho_stop, sp.rho0, E, points_per_unit=60)
        T = fd_tridiagonal(sp, 4.0, L, h)
        assert inertia_below(T, -E) == r.Z
        if T.M <= 2000:
            assert dense_count(T, -E) == r.Z


def test_zero_potential_full_count():
    p = CustomPotential.constant(0.0, 0.0)
    assert full_oracle_count(p, BoundarySpectrum.sphere(3), 0.1, 50.0, 0.05) == 0


@pytest.mark.parametrize("family,c,delta,n,E,bc,count", FROZEN_FULL_COUNTS)
def test_frozen_full_counts_match_band_assembly(family, c, delta, n, E, bc, count):
    sp = _spec(family, c, delta)
    assert assemble_count(sp, BoundarySpectrum.sphere(n), E, bc).N_E == count


def test_frozen_full_count_is_h_stable():
    sp = PotentialSpec.critical(1.0)
    _, rs, _ = truncation_interval(sp, 0.0, 0.02)
    L, h = oracle_grid(rs, sp.rho0, 0.02, points_per_unit=100)
    got = [full_oracle_count(sp, BoundarySpectrum.sphere(2), 0.02, L, h / 2**k, "neumann") for k in range(2)]
    assert got == [25, 25]


def test_oracle_refuses_huge_mode_sums():
    sp = PotentialSpec.power_law(1.0, 1.0)
    with pytest.raises(OracleRefusal):
        full_oracle_count(sp, BoundarySpectrum.sphere(1), 0.005, 3000.0, 0.5)


def test_bracketing_diagonal_is_exact():
    T = _op([0.5, -1.0, 2.0, -0.3, 0.1], [0, 0, 0, 0])
    for k in range(2, 5):
        lo, full, up, holds = bracketing_demo(T, k, 0.2)
        assert lo == full == up and holds


def test_bracketing_laplacian_random_splits():
    M, h = 200, 0.05
    T = _op(np.full(M, 2 / h**2), np.full(M - 1, -1 / h**2))
    w = np.linalg.eigvalsh(T.dense())
    thr = float(np.median(w))
    rng = np.random.default_rng(4)
    for k in rng.integers(2, M, 10):
        lo, full, up, holds = bracketing_demo(T, int(k), thr)
        assert holds and full == int(np.sum(w < thr))


def test_bracketing_critical_midpoint():
    sp = PotentialSpec.critical(1.0)
    T = fd_tridiagonal(sp, 0.0, sp.rho0 + 120.0, 0.1)
    lo, full, up, holds = bracketing_demo(T, T.M // 2, -0.05)
    assert holds
    assert full == int(np.sum(np.linalg.eigvalsh(T.dense()) < -0.05))


def test_bracketing_rejects_edge_split():
    with pytest.raises(ValueError):
        bracketing_demo(_op([1, 2, 3], [0.1, 0.1]), 1, 0.0)
