"""Radial potential families and the effective one-dimensional potential.

Every mode of the separated problem solves

    u'' = (Q(rho) + E) u,    Q = e^{-2 rho} (1 + e^{-rho} B) zeta + V + e^{-rho} X,

on [rho0, oo).  V is one of three model families:

    power-law     V = -c rho^{delta-2} + a rho^{delta-2} (log rho)^{-eps}
    critical      V = -c rho^{-2}      + a rho^{-2} (log rho)^{-eps}
    iterated-log  V = -1/4 rho^{-2} - 1/4 sum_{j<N} G_j - c_N G_N + a G_N (log rho)^{-eps}

with G_j = (rho log rho ... log_(j) rho)^{-2}.  B and X are bounded
perturbations given as callables together with a declared sup bound.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath

__all__ = [
    "Family",
    "BoundaryCondition",
    "Perturbation",
    "ZERO",
    "PotentialSpec",
    "CustomPotential",
    "RadialProblem",
    "DomainError",
    "iter_log",
    "eval_V",
    "eval_Q",
    "auto_rho0",
    "rho0_floor",
    "remainder_envelope",
    "safe_exp",
]


class DomainError(ValueError):
    """An iterated logarithm left its domain."""


class Family(str, enum.Enum):
    POWER_LAW = "power-law"
    CRITICAL = "critical"
    ITERATED_LOG = "iterated-log"


class BoundaryCondition(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value) -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        if v in ("d", "dirichlet"):
            return cls.DIRICHLET
        if v in ("n", "neumann"):
            return cls.NEUMANN
        raise ValueError(f"unknown boundary condition {value!r}")


def safe_exp(x: float) -> float:
    """exp that saturates to inf instead of raising."""
    if x > 709.0:
        return math.inf
    return math.exp(x)


def _zero(rho: float) -> float:
    return 0.0


@dataclass(frozen=True)
class Perturbation:
    """A bounded function of rho together with its declared sup bound."""

    fn: Callable[[float], float] = _zero
    sup: float = 0.0

    def __post_init__(self):
        if self.sup < 0 or not math.isfinite(self.sup):
            raise ValueError("sup bound must be finite and >= 0")

    @property
    def is_zero(self) -> bool:
        return self.fn is _zero

    def __call__(self, rho: float) -> float:
        return self.fn(rho)

    def spot_check(self, samples: Sequence[float], name: str = "perturbation") -> None:
        for r in samples:
            v = self.fn(r)
            if not abs(v) <= self.sup * (1 + 1e-12) + 1e-300:
                raise ValueError(f"{name}({r:g}) = {v:g} exceeds its declared sup {self.sup:g}")

    @classmethod
    def constant(cls, value: float) -> "Perturbation":
        if value == 0:
            return ZERO
        return cls(_Constant(float(value)), abs(float(value)))


@dataclass(frozen=True)
class _Constant:
    value: float

    def __call__(self, rho: float) -> float:
        return self.value


ZERO = Perturbation()


def iter_log(j: int, rho=None, *, log_rho=None) -> float:
    """j-fold natural logarithm of rho.

    Every iterate must stay positive; otherwise a DomainError names the
    depth that failed.  ``rho`` may be an mpmath number, and ``log_rho``
    lets callers pass rho through its logarithm when rho itself does not
    fit any floating format.
    """
    if j < 1:
        raise ValueError("depth must be >= 1")
    if (rho is None) == (log_rho is None):
        raise ValueError("give exactly one of rho, log_rho")
    if log_rho is not None:
        v, start = log_rho, 2
        if not v > 0:
            raise DomainError(f"iterated log undefined at depth 1 (value {float(v)!r})")
    else:
        v, start = rho, 1
    log = mpmath.log if isinstance(v, mpmath.mpf) else math.log
    for depth in range(start, j + 1):
        if not v > 0:
            raise DomainError(f"iterated log undefined at depth {depth} (argument {float(v)!r})")
        v = log(v)
        if not v > 0:
            raise DomainError(f"iterated log undefined at depth {depth} (value {float(v)!r})")
    return float(v)


def _logs(x: float, depth: int) -> list[float]:
    """[l_1, ..., l_depth] starting from l_1 = x = log rho; no positivity check."""
    out = [x]
    for _ in range(depth - 1):
        v = out[-1]
        out.append(math.log(v) if v > 0 else math.nan)
    return out


def rho0_floor(family: Family, N: int = 1) -> float:
    """Smallest rho with log_(j) rho >= 1 for j <= N+1 (depth 1 for the first two families)."""
    if family is not Family.ITERATED_LOG:
        return math.e
    v = 1.0
    for _ in range(N + 1):
        v = safe_exp(v)
    if math.isinf(v):
        raise OverflowError(f"iterated-log depth N={N} needs rho0 beyond double range")
    return v


@dataclass(frozen=True)
class PotentialSpec:
    """A built-in radial potential family with its perturbations and base point."""

    family: Family
    c: float
    delta: float = 0.0
    N: int = 1
    a: float = 0.0
    eps: float = 1.0
    B: Perturbation = ZERO
    X: Perturbation = ZERO
    rho0: float | None = None
    rho0_is_auto: bool = field(default=False, compare=False)

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if fam is Family.POWER_LAW and not (self.delta < 2 and self.delta != 0):
            raise ValueError("power-law needs delta < 2, delta != 0 (delta = 0 is the critical family)")
        if fam is Family.ITERATED_LOG and (int(self.N) != self.N or self.N < 1):
            raise ValueError("iterated-log depth N must be an integer >= 1")
        if self.rho0 is None:
            # the envelope only needs the declared sup bounds of B and X
            object.__setattr__(self, "rho0", auto_rho0(self))
            object.__setattr__(self, "rho0_is_auto", True)
        else:
            self._check_domain(float(self.rho0))
            object.__setattr__(self, "rho0", float(self.rho0))
        samples = [self.rho0 * 10 ** (k / 16) for k in range(49)]
        self.B.spot_check(samples, "B")
        self.X.spot_check(samples, "X")

    def _check_domain(self, rho0: float) -> None:
        if not rho0 > 0:
            raise ValueError("rho0 must be positive")
        if self.a != 0 and not rho0 > 1:
            raise ValueError("a nonzero remainder needs log rho0 > 0")
        if self.family is Family.ITERATED_LOG:
            ls = _logs(math.log(rho0), self.N)
            if not all(v > 0 for v in ls):
                raise ValueError(f"iterated logs up to depth {self.N} must be positive at rho0")

    # -- constructors ------------------------------------------------------

    @classmethod
    def power_law(cls, c: float, delta: float, **kw) -> "PotentialSpec":
        return cls(Family.POWER_LAW, c, delta=delta, **kw)

    @classmethod
    def critical(cls, c: float, **kw) -> "PotentialSpec":
        return cls(Family.CRITICAL, c, **kw)

    @classmethod
    def iterated_log(cls, N: int, c: float, **kw) -> "PotentialSpec":
        return cls(Family.ITERATED_LOG, c, N=N, **kw)

    # -- derived constants -------------------------------------------------

    @property
    def lam(self) -> float:
        """Effective frequency sqrt(c - 1/4) (1 when c <= 1/4); 0 for power-law."""
        if self.family is Family.POWER_LAW:
            return 0.0
        return math.sqrt(self.c - 0.25) if self.c > 0.25 else 1.0

    @property
    def oscillatory(self) -> bool:
        if self.family is Family.POWER_LAW:
            return self.delta > 0
        return self.c > 0.25

    def params(self) -> dict:
        d = {"family": self.family.value, "c": self.c}
        if self.family is Family.POWER_LAW:
            d["delta"] = self.delta
        if self.family is Family.ITERATED_LOG:
            d["N"] = self.N
        d.update(a=self.a, eps=self.eps, rho0=self.rho0)
        return d

    def with_rho0(self, rho0: float) -> "PotentialSpec":
        return PotentialSpec(self.family, self.c, self.delta, self.N, self.a, self.eps,
                             self.B, self.X, rho0)


@dataclass(frozen=True)
class CustomPotential:
    """User supplied Q(rho) on [rho0, oo); zeta plays no role.

    ``positive_beyond`` declares a point past which Q + E > 0 for every E the
    caller will use; with it the certified stop is available.  ``kinks``
    lists points where Q is not smooth so the integrator can step across
    them exactly.
    """

    q: Callable[[float], float]
    rho0: float = 0.0
    positive_beyond: float | None = None
    kinks: tuple[float, ...] = ()
    name: str = "custom"

    @classmethod
    def constant(cls, value: float, rho0: float = 0.0, **kw) -> "CustomPotential":
        return cls(_Constant(float(value)), rho0, **kw)


@dataclass(frozen=True)
class RadialProblem:
    """One Cauchy problem: potential, boundary eigenvalue, offset and boundary condition.

    zeta may be astronomically large, so it is carried as ``log_zeta`` as
    well; pass ``log_zeta`` alone to build such problems.  E = 0 is accepted
    for fixed-window counts only.
    """

    spec: PotentialSpec | CustomPotential
    zeta: float = 0.0
    E: float = 0.0
    bc: BoundaryCondition = BoundaryCondition.DIRICHLET
    log_zeta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "bc", BoundaryCondition.parse(self.bc))
        if self.log_zeta is None:
            if not self.zeta >= 0:
                raise ValueError("zeta must be >= 0")
            lz = math.log(self.zeta) if self.zeta > 0 else -math.inf
            object.__setattr__(self, "log_zeta", lz)
        else:
            object.__setattr__(self, "zeta", safe_exp(self.log_zeta))
        if not self.E >= 0:
            raise ValueError("E must be >= 0")


# -- evaluation --------------------------------------------------------------


def _G(rho: float, logs: list[float], j: int) -> float:
    p = rho
    for k in range(j):
        p *= logs[k]
    return 1.0 / (p * p)


def eval_V(spec: PotentialSpec, rho: float) -> float:
    """-V_0 + a V_1 for the family at rho (no check against rho0)."""
    if isinstance(spec, CustomPotential):
        raise TypeError("custom potentials have no separate V")
    if not rho > 0:
        raise DomainError("rho must be positive")
    fam = spec.family
    if fam is Family.ITERATED_LOG:
        x = math.log(rho)
        logs = [x]
        for depth in range(2, spec.N + 1):
            if not logs[-1] > 0:
                raise DomainError(f"iterated log undefined at depth {depth}")
            logs.append(math.log(logs[-1]))
        if not logs[-1] > 0:
            raise DomainError(f"iterated log at depth {spec.N} must be positive")
        v = -0.25 / (rho * rho)
        for j in range(1, spec.N):
            v -= 0.25 * _G(rho, logs, j)
        gN = _G(rho, logs, spec.N)
        v -= spec.c * gN
        if spec.a:
            v += spec.a * gN * x ** (-spec.eps)
        return v
    p = spec.delta - 2.0 if fam is Family.POWER_LAW else -2.0
    base = rho ** p
    v = -spec.c * base
    if spec.a:
        x = math.log(rho)
        if not x > 0:
            raise DomainError("log rho must be positive when a != 0")
        v += spec.a * base * x ** (-spec.eps)
    return v


def eval_Q(spec, zeta: float, rho: float, *, log_zeta: float | None = None) -> float:
    """Effective potential of one mode; the radial ODE is u'' = (Q + E) u."""
    if isinstance(spec, CustomPotential):
        return float(spec.q(rho))
    if log_zeta is None:
        log_zeta = math.log(zeta) if zeta > 0 else -math.inf
    q = eval_V(spec, rho)
    if log_zeta > -math.inf:
        cent = safe_exp(log_zeta - 2.0 * rho)
        if cent:
            b = spec.B(rho) if not spec.B.is_zero else 0.0
            q += cent * (1.0 + math.exp(-rho) * b) if b else cent
    if not spec.X.is_zero:
        q += math.exp(-rho) * spec.X(rho)
    return q


# -- base point selection ------------------------------------------------------


def remainder_envelope(spec: PotentialSpec, rho: float) -> float:
    """Monotone upper envelope of the rescaled remainder at rho.

    power-law (0 < delta < 2):
        |a|/c L^-eps + Xsup/c rho^{2-delta} e^-rho + |1 - delta^2/4| rho^-delta / (4c)
    power-law (delta < 0): the same without the last term, which grows
    critical: |a| L^-eps + Xsup rho^2 e^-rho
    iterated-log: |a| L^-eps + Xsup (rho l_1 ... l_N)^2 e^-rho
    Each term decreases on the family's floor and beyond.
    """
    x = math.log(rho)
    fam = spec.family
    if fam is Family.POWER_LAW:
        c, d = spec.c, spec.delta
        env = abs(spec.a) / c * x ** (-spec.eps)
        env += spec.X.sup / c * safe_exp((2 - d) * x - rho)
        if d > 0:
            env += abs(1 - d * d / 4) / (4 * c) * rho ** (-d)
        return env
    env = abs(spec.a) * x ** (-spec.eps)
    if fam is Family.CRITICAL:
        env += spec.X.sup * safe_exp(2 * x - rho)
    else:
        logpi = x + sum(math.log(v) for v in _logs(x, spec.N))
        env += spec.X.sup * safe_exp(2 * logpi - rho)
    return env


def _rho0_ok(spec: PotentialSpec, rho: float) -> bool:
    return remainder_envelope(spec, rho) <= 0.5 and spec.B.sup * math.exp(-rho) <= 0.5


def auto_rho0(spec: PotentialSpec) -> float:
    """Smallest base point past which the family's remainder condition holds.

    Scan a geometric grid from the family floor, then bisect the bracketing
    cell to relative 1e-6; the returned point is the upper end of the final
    bracket, so the condition is certified there and beyond because every
    envelope term is decreasing.
    """
    floor = rho0_floor(spec.family, spec.N)
    if spec.family is Family.POWER_LAW and spec.delta < 0 and spec.X.sup > 0:
        # rho^{2-delta} e^-rho decreases only past rho = 2 - delta
        floor = max(floor, 2 - spec.delta)
    if _rho0_ok(spec, floor):
        return floor
    lo, hi = floor, floor * 2
    while not _rho0_ok(spec, hi):
        lo, hi = hi, hi * 2
        if hi > 1e300:
            raise ValueError("remainder condition cannot be met with the declared sup bounds")
    while hi - lo > 1e-6 * hi:
        mid = 0.5 * (lo + hi)
        if _rho0_ok(spec, mid):
            hi = mid
        else:
            lo = mid
    return hi
