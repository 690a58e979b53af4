"""Finite-difference ground truth for the zero counts.

The radial operator -d^2/drho^2 + Q on [rho0, L] is discretised with the
three-point Laplacian.  Its number of eigenvalues below -E is read off
the signs of the pivots of an LDL^T factorisation of T + E I (Sylvester's
law of inertia), which is the classical Sturm-sequence count.  Nothing
here touches the Prufer machinery, so agreement between the two is a
genuine cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal

from .boundary_spectrum import BoundarySpectrum, SpectrumKind
from .potential_model import BoundaryCondition, CustomPotential, Family, eval_Q

__all__ = [
    "TridiagonalOperator",
    "InertiaResult",
    "OracleRefusal",
    "fd_tridiagonal",
    "inertia_below",
    "inertia_detail",
    "dense_count",
    "full_oracle_count",
    "bracketing_demo",
    "oracle_grid",
    "richardson_eigenvalues",
]

PIVOT_FLOOR = 1e-30
MAX_MODES = 100_000


class OracleRefusal(RuntimeError):
    """Too many boundary modes carry eigenvalues for direct enumeration."""

    def __init__(self, required: int):
        super().__init__(f"oracle needs {required} boundary modes (limit {MAX_MODES})")
        self.required = required


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix on the grid rho0 + h, ..., rho0 + M h (Dirichlet)
    or rho0, ..., rho0 + (M-1) h (Neumann at rho0)."""

    rho0: float
    h: float
    diag: np.ndarray
    off: np.ndarray
    bc_left: BoundaryCondition = BoundaryCondition.DIRICHLET
    bc_right: BoundaryCondition = BoundaryCondition.DIRICHLET

    @property
    def M(self) -> int:
        return len(self.diag)

    @property
    def grid(self) -> np.ndarray:
        start = 0 if self.bc_left is BoundaryCondition.NEUMANN else 1
        return self.rho0 + self.h * np.arange(start, start + self.M)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def shifted(self, s: float) -> "TridiagonalOperator":
        return TridiagonalOperator(self.rho0, self.h, self.diag + s, self.off,
                                   self.bc_left, self.bc_right)


def _parse_bcs(bc):
    if isinstance(bc, (tuple, list)):
        return BoundaryCondition.parse(bc[0]), BoundaryCondition.parse(bc[1])
    return BoundaryCondition.parse(bc), BoundaryCondition.DIRICHLET


@dataclass(frozen=True)
class _Grid:
    """Zeta-independent pieces: diag(zeta) = base + zeta * cent."""

    rho0: float
    h: float
    base: np.ndarray
    cent: np.ndarray
    left: BoundaryCondition
    right: BoundaryCondition

    def operator(self, zeta: float) -> TridiagonalOperator:
        d = self.base + zeta * self.cent if zeta else self.base.copy()
        off = np.full(len(d) - 1, -1.0 / (self.h * self.h))
        return TridiagonalOperator(self.rho0, self.h, d, off, self.left, self.right)


def _potential_array(spec, rho: np.ndarray) -> np.ndarray:
    """Q at zeta = 0 on a grid, written out directly from the family formulas."""
    x = np.log(rho)
    if spec.family is Family.ITERATED_LOG:
        q = -0.25 / rho ** 2
        prod = rho.copy()
        l = x
        for j in range(1, spec.N + 1):
            prod = prod * l
            g = prod ** -2.0
            if j < spec.N:
                q -= 0.25 * g
                l = np.log(l)
        q -= spec.c * g
        if spec.a:
            q += spec.a * g * x ** (-spec.eps)
    else:
        p = spec.delta - 2.0 if spec.family is Family.POWER_LAW else -2.0
        base = rho ** p
        q = -spec.c * base
        if spec.a:
            q += spec.a * base * x ** (-spec.eps)
    if not spec.X.is_zero:
        q += np.exp(-rho) * np.array([spec.X(float(r)) for r in rho])
    return q


def _grid(spec, L: float, h: float, bc) -> _Grid:
    left, right = _parse_bcs(bc)
    rho0 = spec.rho0
    if not L > rho0 or not h > 0:
        raise ValueError("need L > rho0 and h > 0")
    n = int(round((L - rho0) / h))
    if n < 3:
        raise ValueError("grid too coarse")
    start = 0 if left is BoundaryCondition.NEUMANN else 1
    stop = n if right is BoundaryCondition.NEUMANN else n - 1
    rho = rho0 + h * np.arange(start, stop + 1)
    if isinstance(spec, CustomPotential):
        q = np.array([float(spec.q(float(r))) for r in rho])
        cent = np.zeros_like(q)
    else:
        q = _potential_array(spec, rho)
        cent = np.exp(-2 * rho)
        if not spec.B.is_zero:
            cent = cent * (1 + np.exp(-rho) * np.array([spec.B(float(r)) for r in rho]))
    ih2 = 1.0 / (h * h)
    base = 2 * ih2 + q
    if left is BoundaryCondition.NEUMANN:
        base[0] -= ih2
    if right is BoundaryCondition.NEUMANN:
        base[-1] -= ih2
    return _Grid(rho0, h, base, cent, left, right)


def fd_tridiagonal(spec, zeta: float, L: float, h: float, bc=BoundaryCondition.DIRICHLET
                   ) -> TridiagonalOperator:
    """Three-point discretisation of -u'' + Q u on [rho0, L].

    ``bc`` is the condition at rho0 (the far end is Dirichlet) or a pair
    (left, right).  Neumann ends use the mirrored ghost point u_{-1} = u_1
    collapsed to first order, which puts 1/h^2 on the boundary diagonal.
    """
    return _grid(spec, L, h, bc).operator(zeta)


# -- inertia -----------------------------------------------------------------


@dataclass(frozen=True)
class InertiaResult:
    count: int
    perturbed: bool      # a zero pivot was nudged
    ambiguous: bool      # the threshold sits on an eigenvalue to within 1e-12 scale
    growth: float        # max |pivot| / scale


def _pivot_count(d, e2, sigma: float, floor: float):
    # a zero pivot is nudged to +floor, i.e. the count is taken at sigma - 0
    d = d.tolist() if isinstance(d, np.ndarray) else d
    e2 = e2.tolist() if isinstance(e2, np.ndarray) else e2
    neg = 0
    perturbed = False
    big = 0.0
    p = d[0] - sigma
    if p == 0.0:
        p, perturbed = floor, True
    if p < 0:
        neg += 1
    big = abs(p)
    for di, ei in zip(d[1:], e2):
        p = (di - sigma) - ei / p
        if p == 0.0:
            p, perturbed = floor, True
        if p < 0:
            neg += 1
            if -p > big:
                big = -p
        elif p > big:
            big = p
    return neg, perturbed, big


def inertia_detail(T: TridiagonalOperator, threshold: float) -> InertiaResult:
    """Eigenvalues of T below ``threshold`` by signed LDL^T pivots, with diagnostics."""
    d = np.asarray(T.diag, float)
    e2 = np.asarray(T.off, float) ** 2
    scale = max(float(np.max(np.abs(d))), float(np.max(np.abs(T.off))) if len(T.off) else 0.0, 1.0)
    neg, pert, big = _pivot_count(d, e2, threshold, PIVOT_FLOOR * scale)
    eps = 1e-12 * scale
    lo, _, _ = _pivot_count(d, e2, threshold - eps, PIVOT_FLOOR * scale)
    hi, _, _ = _pivot_count(d, e2, threshold + eps, PIVOT_FLOOR * scale)
    return InertiaResult(neg, pert, lo != hi, big / scale)


def inertia_below(T: TridiagonalOperator, threshold: float) -> int:
    """Number of eigenvalues of T strictly below ``threshold``."""
    d = np.asarray(T.diag, float)
    scale = max(float(np.max(np.abs(d))), 1.0)
    return _pivot_count(d, np.asarray(T.off, float) ** 2, threshold, PIVOT_FLOOR * scale)[0]


def dense_count(T: TridiagonalOperator, threshold: float) -> int:
    """Same count from a full eigensolve (LAPACK), for cross-checks."""
    w = eigvalsh_tridiagonal(T.diag, T.off)
    return int(np.sum(w < threshold))


# -- whole-manifold count -------------------------------------------------------


def oracle_grid(rho_stop: float, rho0: float, E: float, *, decay: float = 18.0,
                points_per_unit: float = 200.0, max_points: int = 400_000):
    """(L, h) with the far end ``decay`` e-folds of e^{-sqrt(E) rho} past rho_stop."""
    L = max(rho_stop, rho0 + 1.0) + decay / math.sqrt(E)
    n = min(max_points, max(400, int((L - rho0) * points_per_unit)))
    return L, (L - rho0) / n


def _levels(boundary: BoundarySpectrum, bound: float):
    if boundary.kind is SpectrumKind.FLAT_TORUS:
        return boundary.iter_levels(bound)
    return boundary.iter_levels()


def full_oracle_count(spec, boundary: BoundarySpectrum, E: float, L: float, h: float,
                      bc=BoundaryCondition.DIRICHLET) -> int:
    """sum_j m(zeta_j) * (eigenvalues of the zeta_j matrix below -E).

    Levels are walked upwards until a level has no eigenvalue below -E
    (the matrices increase with zeta).  Before walking, the last
    contributing zeta is located by bisection on the matrix count and the
    walk is refused when it would exceed MAX_MODES levels.
    """
    g = _grid(spec, L, h, bc)

    def cnt(z: float) -> int:
        return inertia_below(g.operator(z), -E)

    if cnt(0.0) == 0:
        return 0
    hi = 1.0
    while cnt(hi) > 0:
        hi *= 4
        if hi > 1e300:
            raise OverflowError("matrix count never vanishes")
    lo = 0.0
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if cnt(mid) > 0:
            lo = mid
        else:
            hi = mid
    if boundary.kind is SpectrumKind.SPHERE:
        n_levels = int(math.isqrt(int(hi)) + 2)
    else:
        try:
            n_levels = len(list(_levels(boundary, hi))) if boundary.kind is not SpectrumKind.EXPLICIT \
                else sum(1 for z, _ in boundary.levels if z <= hi)
        except OverflowError:
            raise OracleRefusal(boundary.count(hi)) from None
    if n_levels > MAX_MODES:
        raise OracleRefusal(boundary.count(hi))
    total = 0
    for z, m in _levels(boundary, hi * (1 + 1e-6)):
        k = cnt(float(z))
        if k == 0:
            break
        total += m * k
    return total


# -- bracketing ---------------------------------------------------------------


def bracketing_demo(T: TridiagonalOperator, split_index: int, threshold: float):
    """(lower, full, upper, holds) for counts below ``threshold`` with T cut at a bond.

    Cutting the bond between nodes k-1 and k (k = split_index) removes the
    off-diagonal b.  Adding |b| to both end diagonals gives T_D >= T
    (Dirichlet-type pieces: the difference is the PSD rank-one
    |b| (e_{k-1} - sgn b e_k)^2), subtracting it gives T_N <= T
    (Neumann-type pieces, which for the Laplacian is exactly the
    first-order ghost point).  Form ordering T_N <= T <= T_D reverses for
    counts below a threshold: N(T_D) <= N(T) <= N(T_N), and each side is
    the sum of the counts of its two decoupled blocks.
    """
    k = int(split_index)
    if not 1 < k < T.M:
        raise ValueError("split_index must satisfy 1 < k < M")
    b = float(T.off[k - 1])
    ab = abs(b)

    def piece_counts(sign: float) -> int:
        d = np.array(T.diag, float)
        d[k - 1] += sign * ab
        d[k] += sign * ab
        left = TridiagonalOperator(T.rho0, T.h, d[:k], T.off[: k - 1])
        right = TridiagonalOperator(T.rho0, T.h, d[k:], T.off[k:])
        return inertia_below(left, threshold) + inertia_below(right, threshold)

    lower = piece_counts(+1.0)
    full = inertia_below(T, threshold)
    upper = piece_counts(-1.0)
    return lower, full, upper, lower <= full <= upper


# -- eigenvalues for interlacing checks ---------------------------------------------


def richardson_eigenvalues(spec, zeta: float, L: float, h: float, below: float, *, levels: int = 3):
    """Eigenvalues below ``below`` of the Dirichlet problem, extrapolated in h.

    The three-point scheme has an even error expansion in h, so values at
    h, h/2, h/4 combined by Richardson cancel the h^2 and h^4 terms.
    """
    vals = []
    for i in range(levels):
        hh = h / 2 ** i
        T = fd_tridiagonal(spec, zeta, L, hh, BoundaryCondition.DIRICHLET)

        w = eigvalsh_tridiagonal(T.diag, T.off,
                                 select="v", select_range=(-1e300, below))
        vals.append(np.sort(w))
    n = min(len(v) for v in vals)
    tab = [v[:n] for v in vals]
    for j in range(1, levels):
        f = 4 ** j
        tab = [(f * tab[i + 1] - tab[i]) / (f - 1) for i in range(len(tab) - 1)]
    return tab[0]
