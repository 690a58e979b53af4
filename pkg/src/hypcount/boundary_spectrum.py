"""Eigenvalues of the boundary Laplacian, with multiplicities.

Three kinds of boundary are supported: round spheres S^n, flat tori
R^n / (L_1 Z x ... x L_n Z) and user supplied level lists.  Cumulative
counts are exact Python integers.  Bounds that do not fit a double may be
passed as ``mpmath.mpf`` values (or through ``log_B``), which is how the
mode aggregation hands over breakpoints of size e^{2000}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import mpmath

__all__ = [
    "SpectrumKind",
    "BoundarySpectrum",
    "MultiplicityCount",
    "sphere_mode",
    "cumulative_multiplicity",
    "weyl_estimate",
    "InsufficientSpectrumError",
    "LOG10_SWITCH",
]

# counts at or above 10**15 are reported through their log10
LOG10_SWITCH = 15

# lattice enumeration for flat tori stops beyond this many visited rows
_TORUS_WORK_LIMIT = 5_000_000


class InsufficientSpectrumError(ValueError):
    """An explicit spectrum ends before the requested bound."""


class SpectrumKind(str, enum.Enum):
    SPHERE = "sphere"
    FLAT_TORUS = "flat-torus"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class MultiplicityCount:
    """Number of eigenvalues (with multiplicity) below a bound.

    ``exact`` is always populated; ``log10`` is its decimal logarithm.
    ``is_large`` marks counts past the 10**15 switch, where callers that
    obtained the bound numerically should only trust ``log10``.
    """

    exact: int
    log10: float

    @property
    def is_large(self) -> bool:
        return self.exact >= 10**LOG10_SWITCH


def _log10_int(k: int) -> float:
    if k <= 0:
        return -math.inf
    if k < 2**53:
        return math.log10(k)
    with mpmath.workdps(30):
        return float(mpmath.log10(mpmath.mpf(k)))


def _as_mpf(B, log_B=None):
    """Bound as an mpf with enough digits to floor its square root exactly."""
    if log_B is not None:
        digits = max(30, int(abs(log_B) / math.log(10)) + 30)
        with mpmath.workdps(digits):
            return +mpmath.exp(mpmath.mpf(log_B)), digits
    if isinstance(B, mpmath.mpf):
        if not mpmath.isfinite(B):
            raise OverflowError("bound must be finite")
        mag = 0 if B == 0 else int(abs(mpmath.log10(B)))
        return B, max(30, mag + 30)
    B = float(B)
    if not math.isfinite(B):
        raise OverflowError("bound must be finite")
    mag = 0 if B == 0 else int(abs(math.log10(B)))
    return mpmath.mpf(B), max(40, mag + 30)


def sphere_mode(n: int, k: int) -> tuple[int, int]:
    """Level k of the Laplacian on the unit sphere S^n: (eigenvalue, multiplicity)."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    zeta = k * (k + n - 1)
    m = math.comb(n + k, n) - (math.comb(n + k - 2, n) if k >= 2 else 0)
    return zeta, m


def _sphere_top_level(n: int, B, digits: int, strict: bool) -> int:
    """Largest k with k(k+n-1) <= B (or < B when strict); -1 if none."""
    if B < 0 or (strict and B <= 0):
        return -1
    with mpmath.workdps(digits):
        b = mpmath.mpf(B)
        root = (-(n - 1) + mpmath.sqrt((n - 1) ** 2 + 4 * b)) / 2
        k = int(mpmath.floor(root))
    k = max(k, 0)

    def inside(j: int) -> bool:
        z = j * (j + n - 1)
        with mpmath.workdps(digits):
            return z < b if strict else z <= b

    # the float floor can be off by one at exact squares
    while k > 0 and not inside(k):
        k -= 1
    while inside(k + 1):
        k += 1
    if not inside(k):
        return -1
    return k


def _sphere_cumulative(n: int, K: int) -> int:
    # sum_{k<=K} [C(n+k,n) - C(n+k-2,n)] telescopes
    if K < 0:
        return 0
    return math.comb(n + K, n) + (math.comb(n + K - 1, n) if K >= 1 else 0)


@dataclass(frozen=True)
class BoundarySpectrum:
    """Ordered source of boundary eigenvalue levels (zeta_j, m_j)."""

    kind: SpectrumKind
    n: int
    lengths: tuple[float, ...] = ()
    levels: tuple[tuple[float, int], ...] = ()
    volume: float | None = None

    @classmethod
    def sphere(cls, n: int) -> "BoundarySpectrum":
        if n < 1:
            raise ValueError("sphere dimension must be >= 1")
        vol = 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)
        return cls(SpectrumKind.SPHERE, n, volume=vol)

    @classmethod
    def flat_torus(cls, lengths: Sequence[float]) -> "BoundarySpectrum":
        lengths = tuple(float(L) for L in lengths)
        if not lengths or any(L <= 0 for L in lengths):
            raise ValueError("torus side lengths must be positive")
        return cls(SpectrumKind.FLAT_TORUS, len(lengths), lengths=lengths,
                   volume=math.prod(lengths))

    @classmethod
    def explicit(cls, levels: Sequence[tuple[float, int]], n: int,
                 volume: float | None = None) -> "BoundarySpectrum":
        lv = tuple((float(z), int(m)) for z, m in levels)
        for i, (z, m) in enumerate(lv):
            if z < 0 or m < 1:
                raise ValueError(f"bad level {i}: eigenvalue {z}, multiplicity {m}")
            if i and z <= lv[i - 1][0]:
                raise ValueError("explicit levels must be strictly increasing")
        return cls(SpectrumKind.EXPLICIT, n, levels=lv, volume=volume)

    # -- enumeration -------------------------------------------------------

    def iter_levels(self, B: float = math.inf) -> Iterator[tuple[float, int]]:
        """Levels with eigenvalue <= B in increasing order."""
        if self.kind is SpectrumKind.SPHERE:
            k = 0
            while True:
                z, m = sphere_mode(self.n, k)
                if z > B:
                    return
                yield z, m
                k += 1
        elif self.kind is SpectrumKind.EXPLICIT:
            for z, m in self.levels:
                if z > B:
                    return
                yield z, m
            if math.isfinite(B) and (not self.levels or B > self.levels[-1][0]):
                raise InsufficientSpectrumError(
                    f"explicit spectrum is exhausted below the bound {B}")
        else:
            if math.isinf(B):
                raise ValueError("torus enumeration needs a finite bound")
            yield from self._torus_levels(B)

    def _torus_levels(self, B: float) -> list[tuple[float, int]]:
        pts: dict[float, int] = {}
        scale = [(2 * math.pi / L) ** 2 for L in self.lengths]
        work = 0

        def rec(i: int, acc: float):
            nonlocal work
            if i == self.n:
                key = round(acc, 9) if acc < 1e6 else float(f"{acc:.12g}")
                pts[key] = pts.get(key, 0) + 1
                return
            mmax = int(math.floor(math.sqrt(max(B - acc, 0.0) / scale[i]))) + 1
            for m in range(-mmax, mmax + 1):
                v = acc + scale[i] * m * m
                if v <= B * (1 + 1e-14):
                    work += 1
                    if work > _TORUS_WORK_LIMIT:
                        raise OverflowError("torus enumeration exceeds the work limit")
                    rec(i + 1, v)

        rec(0, 0.0)
        return sorted(pts.items())

    # -- counting ----------------------------------------------------------

    def count(self, B=None, *, log_B: float | None = None, strict: bool = False) -> int:
        """Exact number of eigenvalues <= B (or < B with ``strict``)."""
        if log_B is None and B is None:
            raise ValueError("give B or log_B")
        if log_B is not None and log_B == -math.inf:
            B, log_B = 0.0, None
        if log_B is None and B < 0:
            raise ValueError("bound must be >= 0")
        if self.kind is SpectrumKind.SPHERE:
            b, digits = _as_mpf(B, log_B)
            K = _sphere_top_level(self.n, b, digits, strict)
            return _sphere_cumulative(self.n, K)
        if log_B is not None:
            if log_B > 700:
                raise OverflowError("bound too large for this boundary kind")
            B = math.exp(log_B)
        B = float(B)
        if self.kind is SpectrumKind.EXPLICIT:
            if not self.levels or B > self.levels[-1][0]:
                raise InsufficientSpectrumError(
                    f"explicit spectrum is exhausted below the bound {B}")
            return sum(m for z, m in self.levels if (z < B if strict else z <= B))
        return self._torus_count(B, strict)

    def log_count(self, log_B: float) -> float:
        """Natural log of the count below e^log_B, for bounds too large to floor.

        Sphere only.  The cumulative count C(n+K, n) + C(n+K-1, n) with top
        level K ~ sqrt(B) equals (2 / n!) K^n up to a relative O(1/K), far
        below double resolution once log_B is past a few hundred.
        """
        if self.kind is not SpectrumKind.SPHERE:
            raise OverflowError("log counts are only available for spheres")
        if log_B < 200:
            raise ValueError("use count() for bounds below e^200")
        n = self.n
        return math.log(2.0) + 0.5 * n * log_B - math.lgamma(n + 1)

    def _torus_count(self, B: float, strict: bool) -> int:
        scale = [(2 * math.pi / L) ** 2 for L in self.lengths]
        if self.n == 1:
            if B < 0 or (strict and B <= 0):
                return 0
            m = math.isqrt(int(B / scale[0])) + 2
            while m >= 0 and (scale[0] * m * m > B or (strict and scale[0] * m * m >= B)):
                m -= 1
            return 2 * m + 1
        work = 0

        def rec(i: int, rem: float) -> int:
            nonlocal work
            if i == self.n - 1:
                if rem < 0 or (strict and rem <= 0):
                    return 0
                m = int(math.floor(math.sqrt(rem / scale[i]))) + 1
                while m >= 0 and (scale[i] * m * m > rem or (strict and scale[i] * m * m >= rem)):
                    m -= 1
                return 2 * m + 1
            mmax = int(math.floor(math.sqrt(max(rem, 0.0) / scale[i])))
            total = 0
            for m in range(-mmax, mmax + 1):
                work += 1
                if work > _TORUS_WORK_LIMIT:
                    raise OverflowError("torus count exceeds the work limit")
                total += rec(i + 1, rem - scale[i] * m * m)
            return total

        return rec(0, B)

    def levels_near(self, B: float, rel: float) -> list[tuple[float, int]]:
        """Levels within relative distance ``rel`` of B (small B only)."""
        lo, hi = B * (1 - rel), B * (1 + rel)
        if self.kind is SpectrumKind.SPHERE:
            K = _sphere_top_level(self.n, mpmath.mpf(hi), 40, strict=False)
            out = []
            k = K
            while k >= 0:
                z, m = sphere_mode(self.n, k)
                if z < lo:
                    break
                out.append((float(z), m))
                k -= 1
            return out[::-1]
        return [(z, m) for z, m in self.iter_levels(hi) if z >= lo]

    def weyl_constant(self) -> float:
        if self.volume is None:
            raise ValueError("Weyl estimate needs the boundary volume")
        n = self.n
        ball = math.pi ** (n / 2) / math.gamma(n / 2 + 1)
        return ball * self.volume / (2 * math.pi) ** n


def cumulative_multiplicity(spec: BoundarySpectrum, B=None, *,
                            log_B: float | None = None) -> MultiplicityCount:
    """Sum of multiplicities over levels with eigenvalue <= B."""
    k = spec.count(B, log_B=log_B)
    return MultiplicityCount(k, _log10_int(k))


def weyl_estimate(spec: BoundarySpectrum, B: float) -> float:
    """Leading Weyl term C * B^{n/2}.

    A seeding heuristic for searches, never a substitute for ``count``.
    The exponent is n/2 because B is an eigenvalue bound (frequency
    squared); with a frequency bound kappa the same law reads C kappa^n.
    """
    if B <= 0:
        raise ValueError("bound must be positive")
    return spec.weyl_constant() * B ** (spec.n / 2)
