"""Summing zero counts over boundary modes.

N_E = sum_j m(zeta_j) Z(zeta_j) where Z is a nonincreasing integer step
function of the boundary eigenvalue.  Writing b_k for the point where Z
drops below k,

    N_E = sum_{k=1}^{Z(0)} #{j : zeta_j < b_k},

so a handful of bisections in zeta replaces a sum over up to e^{2 rho_u}
modes.  Bisection runs in s = log(1 + zeta), which is linear near 0 and
equal to log zeta for large zeta, so breakpoints far beyond the double
range stay representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath

from .boundary_spectrum import LOG10_SWITCH, BoundarySpectrum, SpectrumKind
from .potential_model import (
    BoundaryCondition,
    Family,
    PotentialSpec,
    RadialProblem,
    _logs,
)
from .radial_oscillation import Certified, prufer_count

__all__ = [
    "CutoffEstimate",
    "Breakpoint",
    "CountResult",
    "MonotonicityError",
    "cutoff_estimate",
    "zeta_breakpoints",
    "assemble_count",
    "enumerate_count",
]

# breakpoints closer than this (relative) to a boundary level are resolved directly
NEAR_LEVEL_REL = 1e-9
# breakpoints are located again at rtol * TIGHTEN to estimate their error
TIGHTEN = 1e-2
# beyond this log zeta, per-level counts have more digits than the breakpoints
# justify (relative 1e-12) and are summed as logs instead of exact integers
LOG_DOMAIN_LZ = 1e4
_DOUBLING_LIMIT = 40


class MonotonicityError(RuntimeError):
    """Z(zeta) increased with zeta between two probes."""


# -- cutoff seeds ---------------------------------------------------------------


@dataclass(frozen=True)
class CutoffEstimate:
    rho_u: float
    log_mu_upper: float
    log_mu_lower: float
    clamped: bool = False

    @property
    def log10_mu_upper(self) -> float:
        return self.log_mu_upper / math.log(10)

    @property
    def log10_mu_lower(self) -> float:
        return self.log_mu_lower / math.log(10)


def _log_pi(rho: float, N: int) -> float:
    # log(rho l_1 ... l_N)
    ls = _logs(math.log(rho), N)
    return math.log(rho) + sum(math.log(v) for v in ls[:N])


def _log_mu_general(spec: PotentialSpec, rho: float) -> float:
    """log of 4 Vhat(rho) e^{2 rho}, the centrifugal level that matches twice the potential."""
    if spec.family is Family.POWER_LAW:
        return math.log(4 * spec.c) + (spec.delta - 2) * math.log(rho) + 2 * rho
    lam2 = spec.lam ** 2
    if spec.family is Family.CRITICAL:
        return math.log(4 * lam2) - 2 * math.log(rho) + 2 * rho
    return math.log(4 * lam2) - 2 * _log_pi(rho, spec.N) + 2 * rho


def _solve_pi(target_log: float, N: int, lo: float) -> float:
    """rho >= lo with log(rho l_1 ... l_N) = target_log (lo if already past)."""
    if _log_pi(lo, N) >= target_log:
        return lo
    hi = max(lo * 2, 4.0)
    while _log_pi(hi, N) < target_log:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _log_pi(mid, N) < target_log:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * hi:
            break
    return hi


def cutoff_estimate(spec: PotentialSpec, E: float) -> CutoffEstimate:
    """Closed-form turning radius and the boundary eigenvalue window it implies.

    mu_upper bounds the breakpoint search from above, mu_lower is a seed
    below which every level is expected to carry the full count; neither
    is ever used as an answer.  If rho_u falls below rho0 it is clamped
    there and mu_upper is recomputed from the general expression.
    """
    if not E > 0:
        raise ValueError("cutoff needs E > 0")
    if not isinstance(spec, PotentialSpec):
        raise TypeError("cutoff formulas exist for built-in families only")
    logE2 = math.log(2 * E)
    if spec.family is Family.POWER_LAW:
        p = 1.0 / (2 - spec.delta)
        rho_u = (2 * spec.c / E) ** p
        log_up = logE2 + 2 * rho_u
        rho_2 = (spec.c / (8 * E)) ** p
        log_lo = logE2 + 2 * rho_2
    elif spec.family is Family.CRITICAL:
        lam2 = spec.lam ** 2
        rho_u = math.sqrt(lam2) * math.sqrt(2 / E)
        log_up = logE2 + 2 * rho_u
        log_lo = logE2 + 2 * math.sqrt(lam2 / (8 * E))
    else:
        lam2 = spec.lam ** 2
        if spec.N == 1:
            A1 = math.sqrt(2 * lam2 / E)
            rho_u = 2 * A1 / math.log(A1) if A1 > math.e else spec.rho0
            beta = math.sqrt(lam2 / (8 * E))
            if beta > math.e:
                rho_2 = beta / math.log(beta)
                log_lo = 2 * rho_2 - math.log(16) - 2 * math.log(rho_2 * math.log(rho_2)) \
                    if rho_2 > 1 else -math.inf
            else:
                log_lo = -math.inf
        else:
            # same construction one level deeper: twice the root of Pi(rho)^2 = 2 lam^2 / E
            rho_u = 2 * _solve_pi(0.5 * math.log(2 * lam2 / E), spec.N, spec.rho0)
            r2 = _solve_pi(0.5 * math.log(lam2 / (8 * E)), spec.N, spec.rho0)
            log_lo = 2 * r2 - math.log(16) - 2 * _log_pi(r2, spec.N)
        log_up = None
    clamped = rho_u < spec.rho0
    if clamped:
        rho_u = spec.rho0
    if log_up is None or clamped:
        log_up = _log_mu_general(spec, rho_u)
    log_lo = min(log_lo, log_up)
    return CutoffEstimate(rho_u, log_up, log_lo, clamped)


# -- breakpoints ----------------------------------------------------------------


def _log_zeta(s: float) -> float:
    """log(e^s - 1) without overflow."""
    if s == 0:
        return -math.inf
    if s > 40:
        return s + math.log1p(-math.exp(-s))
    return math.log(math.expm1(s))


@dataclass(frozen=True)
class Breakpoint:
    """Drop of Z by ``drop`` between zeta_lo (Z = upper) and zeta_hi (Z = upper - drop).

    Values are kept as s = log(1 + zeta); ``log_zeta`` is the bracket top.
    ``s_err`` is the estimated location error in s: how far the bracket
    moved when the drop was located again at a 100x tighter tolerance.
    """

    s_lo: float
    s_hi: float
    upper: int
    drop: int
    s_err: float = 0.0

    @property
    def log_zeta(self) -> float:
        return _log_zeta(self.s_hi)

    @property
    def zeta(self) -> float:
        return math.exp(self.log_zeta) if self.s_hi < 700 else math.inf

    @property
    def log_zeta_lo(self) -> float:
        return _log_zeta(self.s_lo)

    def band(self) -> tuple[float, float]:
        """log zeta range that may hold the drop once s_err is allowed for."""
        return _log_zeta(max(self.s_lo - self.s_err, 0.0)), _log_zeta(self.s_hi + self.s_err)


@dataclass
class _Prober:
    spec: PotentialSpec
    E: float
    bc: BoundaryCondition
    rtol: float = 1e-9
    atol: float = 1e-12
    probes: int = 0
    ambiguous: list = field(default_factory=list)
    max_dtheta: float = 0.0
    cache: dict = field(default_factory=dict)

    def __call__(self, s: float) -> int:
        if s in self.cache:
            return self.cache[s]
        prob = RadialProblem(self.spec, E=self.E, bc=self.bc, log_zeta=_log_zeta(s))
        r = prufer_count(prob, Certified(), rtol=self.rtol, atol=self.atol)
        self.probes += 1
        self.max_dtheta = max(self.max_dtheta, r.max_dtheta)
        if r.ambiguous:
            self.ambiguous.append(s)
        self.cache[s] = r.Z
        return r.Z


def _s_tol(s: float) -> float:
    # relative 1e-12 in zeta, floored at a few ulps of s
    zeta_rel = 1e-12 * (-math.expm1(-s)) if s > 0 else 0.0
    return max(zeta_rel, 4 * math.ulp(max(s, 1.0)), 1e-300)


def _search(probe, s_hi_seed: float):
    """Return (Z0, breakpoints, s_upper, doublings)."""
    z0 = probe(0.0)
    if z0 == 0:
        return 0, [], 0.0, 0
    s_hi = max(s_hi_seed, 1.0)
    n = 0
    while probe(s_hi) > 0:
        n += 1
        if n > _DOUBLING_LIMIT:
            raise RuntimeError("Z stays positive for every probed boundary eigenvalue")
        s_hi *= 2
    out: list[Breakpoint] = []

    def rec(a: float, za: int, b: float, zb: int):
        # invariant: za > zb, Z(a) = za, Z(b) = zb
        while True:
            if b - a <= _s_tol(b):
                out.append(Breakpoint(a, b, za, za - zb))
                return
            m = 0.5 * (a + b)
            if not a < m < b:
                out.append(Breakpoint(a, b, za, za - zb))
                return
            zm = probe(m)
            if zm > za or zm < zb:
                raise MonotonicityError(
                    f"Z = {zm} at s = {m!r} lies outside [{zb}, {za}] of its bracket")
            if zm == za:
                a = m
            elif zm == zb:
                b = m
            else:
                # lower drops live in the right half; recurse there, continue left
                rec(m, zm, b, zb)
                b, zb = m, zm

    rec(0.0, z0, s_hi, probe(s_hi))
    out.sort(key=lambda bp: -bp.s_hi)
    return z0, out, s_hi, n


def _refine(tight, bp: Breakpoint) -> Breakpoint:
    """Locate the drop of ``bp`` again with ``tight`` and record the shift as s_err.

    Near a drop the Cauchy solution ends on the recessive branch, where
    integration error is amplified, so the bisection tolerance says little
    about where the drop really is; the coarse/tight disagreement does.
    """
    lo_z, hi_z = bp.upper, bp.upper - bp.drop
    a, b = bp.s_lo, bp.s_hi
    step = max(b - a, 1e-10 * max(1.0, b))
    while tight(a) < lo_z and a > 0:
        a = max(0.0, a - step)
        step *= 2
    step = max(b - bp.s_lo, 1e-10 * max(1.0, b))
    n = 0
    while tight(b) > hi_z:
        b += step
        step *= 2
        n += 1
        if n > 200:
            raise RuntimeError("drop not found again at the tighter tolerance")
    if tight(a) < lo_z:
        # the drop moved all the way to zeta = 0: everything below is uncertain
        return Breakpoint(bp.s_lo, bp.s_hi, bp.upper, bp.drop, bp.s_hi)
    while b - a > _s_tol(b):
        m = 0.5 * (a + b)
        if not a < m < b:
            break
        zm = tight(m)
        if zm >= lo_z:
            a = m
        elif zm <= hi_z:
            b = m
        else:
            # coincident drops come apart at the tighter tolerance; keep both inside
            break
    err = max(abs(a - bp.s_lo), abs(b - bp.s_hi), _s_tol(b))
    return Breakpoint(a, b, bp.upper, bp.drop, err)


def _tight(probe: _Prober) -> _Prober:
    return _Prober(probe.spec, probe.E, probe.bc, probe.rtol * TIGHTEN, probe.atol * TIGHTEN)


def zeta_breakpoints(spec: PotentialSpec, E: float, bc=BoundaryCondition.DIRICHLET, *,
                     rtol: float = 1e-9, atol: float = 1e-12) -> list[Breakpoint]:
    """Drop points of zeta -> Z(zeta), largest first.

    Each entry brackets one drop to relative 1e-12 in zeta at a 100x
    tighter tolerance than ``rtol``, with ``s_err`` estimating how far the
    drop itself may be from that bracket.  Coincident drops show up as one
    entry with ``drop`` > 1.
    """
    bc = BoundaryCondition.parse(bc)
    cut = cutoff_estimate(spec, E)
    probe = _Prober(spec, E, bc, rtol, atol)
    _, bps, _, _ = _search(probe, max(cut.log_mu_upper, 0.0) + math.log1p(math.exp(-abs(cut.log_mu_upper))))
    tight = _tight(probe)
    return [_refine(tight, bp) for bp in bps]


# -- assembly -------------------------------------------------------------------


@dataclass
class CountResult:
    """N_E with its band decomposition.

    ``N_E`` is an exact int below 10**15 and None above; ``log10_NE`` is
    always filled, with ``log10_err`` bounding its error.  ``bands`` lists
    (Z level, number of modes on that level), largest level first; it is
    empty when the counts were only summed as logs (flag "log-domain-count").
    """

    N_E: int | None
    log10_NE: float
    log10_err: float
    Z0: int
    breakpoints: list[Breakpoint]
    bands: list[tuple[int, int]]
    cutoff: CutoffEstimate
    s_upper: float
    probes: int
    ambiguous: bool
    flags: tuple[str, ...] = ()
    max_dtheta: float = 0.0
    precision: str = "exact"

    def recompute(self) -> int:
        return sum(k * m for k, m in self.bands)


def _count_below(boundary: BoundarySpectrum, log_zeta: float, strict: bool) -> int:
    if log_zeta == -math.inf:
        return 0 if strict else boundary.count(0.0)
    if log_zeta < 700:
        B = math.exp(log_zeta)
        if boundary.kind is SpectrumKind.SPHERE:
            return boundary.count(log_B=log_zeta, strict=strict)
        return boundary.count(B, strict=strict)
    return boundary.count(log_B=log_zeta, strict=strict)


def _levels_between(boundary: BoundarySpectrum, lz_lo: float, lz_hi: float, limit: int = 64):
    """Levels zeta_j with zeta_lo <= zeta_j <= zeta_hi, or None when too many or too large."""
    if lz_hi > 700:
        return None
    inside = _count_below(boundary, lz_hi, strict=False) - _count_below(boundary, lz_lo, strict=True)
    if inside == 0:
        return []
    if inside > limit:
        return None
    lo = 0.0 if lz_lo == -math.inf else math.exp(lz_lo)
    hi = math.exp(lz_hi)
    if boundary.kind is SpectrumKind.SPHERE:
        lv = boundary.levels_near(0.5 * (lo + hi), (hi - lo) / max(hi + lo, 1e-300) + 1e-15)
        lv = [(z, m) for z, m in lv if lo <= z <= hi]
    else:
        lv = [(z, m) for z, m in boundary.iter_levels(hi) if z >= lo]
    if len(lv) > limit:
        return None
    return lv


def assemble_count(spec: PotentialSpec, boundary: BoundarySpectrum, E: float,
                   bc=BoundaryCondition.DIRICHLET, *, rtol: float = 1e-9,
                   atol: float = 1e-12) -> CountResult:
    """N_E = sum over modes of m(zeta_j) Z(zeta_j), assembled from breakpoints."""
    bc = BoundaryCondition.parse(bc)
    cut = cutoff_estimate(spec, E)
    probe = _Prober(spec, E, bc, rtol, atol)
    seed = max(cut.log_mu_upper, 0.0) + math.log1p(math.exp(-abs(cut.log_mu_upper)))
    z0, bps, s_up, doublings = _search(probe, seed)
    tight = _tight(probe)
    bps = [_refine(tight, bp) for bp in bps]
    flags = []
    if doublings:
        flags.append(f"cutoff-doubled-{doublings}")

    if boundary.kind is SpectrumKind.SPHERE and any(bp.log_zeta > LOG_DOMAIN_LZ for bp in bps):
        return _log_domain_result(boundary, bps, (probe, tight), cut, z0, s_up, flags)

    # per level k: number of modes with Z >= k.  Levels below the uncertainty
    # band of b_k carry Z >= k, levels above it Z < k, and the few inside are
    # probed one by one at the tight tolerance
    per_level: dict[int, int] = {}
    err_modes = 0
    for bp in bps:
        band_lo, band_hi = bp.band()
        band_lo, band_hi = band_lo - NEAR_LEVEL_REL, band_hi + NEAR_LEVEL_REL
        below = _count_below(boundary, band_lo, strict=True)
        lv = _levels_between(boundary, band_lo, band_hi)
        extra = {k: 0 for k in range(bp.upper - bp.drop + 1, bp.upper + 1)}
        if lv is None:
            flags.append("dense-levels-at-breakpoint")
            err_modes += bp.drop * (_count_below(boundary, band_hi, False) - below)
            below = _count_below(boundary, bp.log_zeta_lo, strict=False)
        elif lv:
            flags.append("breakpoint-near-level")
            for z, m in lv:
                zj = tight(math.log1p(z))
                for k in extra:
                    if zj >= k:
                        extra[k] += m
        for k in extra:
            per_level[k] = below + extra[k]

    # fixed order: level Z0 down to 1
    levels = sorted(per_level, reverse=True)
    total = 0
    for k in levels:
        total += per_level[k]
    bands = []
    prev = 0
    for k in levels:
        bands.append((k, per_level[k] - prev))
        prev = per_level[k]

    if total > 0:
        with mpmath.workdps(40):
            log10 = float(mpmath.log10(mpmath.mpf(total)))
    else:
        log10 = -math.inf
    # modes inside a dense band may sit on either side of the drop
    rel = 1e-12 * max(1, boundary.n) + (err_modes / total if total else 0.0)
    log10_err = math.log1p(rel) / math.log(10) if total else 0.0
    large = total >= 10 ** LOG10_SWITCH or err_modes > 0
    n_amb = len(probe.ambiguous) + len(tight.ambiguous)
    if n_amb:
        flags.append(f"ambiguous-probes-{n_amb}")
    return CountResult(
        N_E=None if large else total,
        log10_NE=log10,
        log10_err=log10_err,
        Z0=z0,
        breakpoints=bps,
        bands=bands,
        cutoff=cut,
        s_upper=s_up,
        probes=probe.probes + tight.probes,
        ambiguous=bool(n_amb),
        flags=tuple(dict.fromkeys(flags)),
        max_dtheta=max(probe.max_dtheta, tight.max_dtheta),
        precision="log10" if large else "exact",
    )


def _logsumexp(logs) -> float:
    top = max(logs)
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


def _log_count(boundary, lz: float) -> float:
    if lz > LOG_DOMAIN_LZ:
        return boundary.log_count(lz)
    return math.log(max(_count_below(boundary, lz, strict=False), 1))


def _log_domain_result(boundary, bps, probes, cut, z0, s_up, flags) -> CountResult:
    """N_E as log10 only, from per-level counts evaluated as logs."""
    terms, err_terms = [], []
    half_n = 0.5 * boundary.n
    for bp in bps:
        terms += [_log_count(boundary, bp.log_zeta_lo)] * bp.drop
        # modes inside the uncertainty band may carry either count; at this
        # size one ulp of log zeta can already be many e-folds of the count
        band_lo, band_hi = bp.band()
        if band_hi <= LOG_DOMAIN_LZ:
            inside = _count_below(boundary, band_hi, False) - _count_below(boundary, band_lo, True)
            if inside:
                err_terms.append(math.log(bp.drop * inside))
        elif band_lo <= LOG_DOMAIN_LZ:
            err_terms.append(math.log(bp.drop) + boundary.log_count(band_hi))
        else:
            y = half_n * max(band_hi - band_lo, 1e-300)
            log_expm1 = y + math.log1p(-math.exp(-y)) if y > 30 else math.log(math.expm1(y))
            err_terms.append(boundary.log_count(band_lo) + math.log(bp.drop) + log_expm1)
    log_total = _logsumexp(terms)
    log_rel = _logsumexp([math.log(1e-12 * max(1, boundary.n))] + [t - log_total for t in err_terms])
    # log10(1 + rel), first order rel / ln 10 when small
    log10_err = (log_rel if log_rel > 30 else math.log1p(math.exp(log_rel))) / math.log(10)
    flags = flags + ["dense-levels-at-breakpoint", "log-domain-count"]
    n_amb = sum(len(p.ambiguous) for p in probes)
    if n_amb:
        flags.append(f"ambiguous-probes-{n_amb}")
    return CountResult(
        N_E=None,
        log10_NE=log_total / math.log(10),
        log10_err=log10_err,
        Z0=z0,
        breakpoints=bps,
        bands=[],
        cutoff=cut,
        s_upper=s_up,
        probes=sum(p.probes for p in probes),
        ambiguous=bool(n_amb),
        flags=tuple(dict.fromkeys(flags)),
        max_dtheta=max(p.max_dtheta for p in probes),
        precision="log10",
    )


def enumerate_count(spec: PotentialSpec, boundary: BoundarySpectrum, E: float,
                    bc=BoundaryCondition.DIRICHLET, *, max_levels: int = 100_000,
                    rtol: float = 1e-9, atol: float = 1e-12) -> int:
    """Direct sum of m_j Z(zeta_j) over levels until Z vanishes (reference path)."""
    bc = BoundaryCondition.parse(bc)
    total = 0
    seen = 0

    def take(levels):
        nonlocal total, seen
        for z, m in levels:
            if seen >= max_levels:
                raise OverflowError(f"more than {max_levels} levels carry zeros")
            seen += 1
            r = prufer_count(RadialProblem(spec, z, E, bc), Certified(), rtol=rtol, atol=atol)
            if r.Z == 0:
                return True
            total += m * r.Z
        return False

    if boundary.kind is not SpectrumKind.FLAT_TORUS:
        if not take(boundary.iter_levels()):
            raise RuntimeError("levels ran out before Z vanished")
        return total
    # torus levels come from a bounded lattice search, so widen the bound
    lo, hi = -1.0, 16.0
    while True:
        if take((z, m) for z, m in boundary.iter_levels(hi) if z > lo):
            return total
        lo, hi = hi, hi * 4
