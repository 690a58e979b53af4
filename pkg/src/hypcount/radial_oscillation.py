"""Zero counting for the radial Cauchy problems via the Prufer angle.

For u'' = (Q + E) u the Liouville change t = phi(rho), u = phi'^{-1/2} w gives

    w'' = W(t) w,   W = (Q + E)/phi'^2 - phi'^{-3/2} (phi'^{-1/2})''

and each family has a coordinate in which W tends to a constant:

    power-law     t = (2 sqrt(c)/delta) rho^{delta/2}
                  W = -1 + rho^{2-delta}(Q + c rho^{delta-2} + E)/c + (1 - delta^2/4) rho^{-delta}/(4c)
    critical      t = lam log rho,             W = (1/4 - c + rho^2 (Q + c rho^-2 + E)) / lam^2
    iterated-log  t = lam log_(N+1) rho,       W = (1/4 - c_N + Pi^2 (Q - V_0 + E)) / lam^2

with lam = sqrt(c - 1/4) (or 1 when c <= 1/4) and Pi = rho l_1 ... l_N.
Everything is evaluated through x = log rho and, for the iterated-log
family, through l_{N+1} directly, so rho = e^{e^{20}} is reachable.

The Prufer angle theta = atan2(w, w') obeys theta' = cos^2 theta - W sin^2 theta;
it can only cross a multiple of pi upwards, so the zero count is the
number of multiples of pi passed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from ._dopri import IntegrationError, MarchState, march
from .potential_model import (
    BoundaryCondition,
    CustomPotential,
    Family,
    PotentialSpec,
    RadialProblem,
    eval_Q,
    safe_exp,
)
from .tail_certificates import (
    Certificate,
    RawEnvelope,
    certified_stop,
    positive_tail_start,
)

__all__ = [
    "TransformDescriptor",
    "PruferState",
    "ZResult",
    "Certified",
    "FixedWindow",
    "IntegrationError",
    "transform_for",
    "truncation_interval",
    "prufer_count",
    "solve_cauchy",
]

PI = math.pi
AMBIGUITY_TOL = 1e-6
# stiff forbidden region: skip once W >= SKIP_W and int sqrt(W) dt >= SKIP_DECAY
SKIP_W = 2500.0
SKIP_DECAY = 20.0
# a restart this far above SKIP_W means the bisection could not get near the wall
WALL_W = 1e12


def _exp_tower(v: float, n: int) -> float:
    for _ in range(n):
        v = safe_exp(v)
    return v


@dataclass(frozen=True)
class TransformDescriptor:
    """Compressed coordinate of a family.

    All maps are also available through x = log rho (``t_of_x``,
    ``x_of_t``); ``forward``/``inverse`` are the rho versions.
    ``omega(rho)`` is the weight in u = omega w and ``neumann_slope(x)``
    is k with w'/w = -k when u' = 0.
    """

    family: str
    lam: float
    spec: PotentialSpec | None = None

    # -- coordinate maps ---------------------------------------------------

    def t_of_x(self, x: float) -> float:
        s = self.spec
        if self.family == "raw":
            return safe_exp(x)
        if self.family == Family.POWER_LAW.value:
            return 2 * math.sqrt(s.c) / s.delta * safe_exp(0.5 * s.delta * x)
        if self.family == Family.CRITICAL.value:
            return self.lam * x
        v = x
        for _ in range(s.N):
            v = math.log(v)
        return self.lam * v

    def x_of_t(self, t: float) -> float:
        s = self.spec
        if self.family == "raw":
            return math.log(t)
        if self.family == Family.POWER_LAW.value:
            return 2.0 / s.delta * math.log(s.delta * t / (2 * math.sqrt(s.c)))
        if self.family == Family.CRITICAL.value:
            return t / self.lam
        # x = l_1 = exp^N(l_{N+1})
        return _exp_tower(t / self.lam, s.N)

    def forward(self, rho: float) -> float:
        if self.family == "raw":
            return rho
        return self.t_of_x(math.log(rho))

    def inverse(self, t: float) -> float:
        if self.family == "raw":
            return t
        return safe_exp(self.x_of_t(t))

    def dt_drho(self, rho: float) -> float:
        s = self.spec
        if self.family == "raw":
            return 1.0
        if self.family == Family.POWER_LAW.value:
            return math.sqrt(s.c) * rho ** (0.5 * s.delta - 1)
        if self.family == Family.CRITICAL.value:
            return self.lam / rho
        return self.lam * math.exp(-self._log_pi(math.log(rho)))

    def omega(self, rho: float) -> float:
        s = self.spec
        if self.family == "raw":
            return 1.0
        if self.family == Family.POWER_LAW.value:
            return rho ** (0.5 * (1 - 0.5 * s.delta))
        if self.family == Family.CRITICAL.value:
            return math.sqrt(rho)
        return math.exp(0.5 * self._log_pi(math.log(rho)))

    def _logs(self, x: float) -> list[float]:
        out = [x]
        for _ in range(self.spec.N):
            v = out[-1]
            out.append(math.log(v) if v > 0 else math.nan)
        return out

    def _log_pi(self, x: float) -> float:
        # log(rho l_1 ... l_N) = l_1 + ... + l_{N+1}
        return sum(self._logs(x))

    def log_scale(self, x: float) -> float:
        """log of 1/phi'^2, the factor multiplying Q + E in W."""
        s = self.spec
        if self.family == "raw":
            return 0.0
        if self.family == Family.POWER_LAW.value:
            return (2 - s.delta) * x - math.log(s.c)
        if self.family == Family.CRITICAL.value:
            return 2 * x - 2 * math.log(self.lam)
        return 2 * self._log_pi(x) - 2 * math.log(self.lam)

    def hardy(self, x: float) -> float:
        """The curvature term -phi'^{-3/2}(phi'^{-1/2})''."""
        s = self.spec
        if self.family == "raw":
            return 0.0
        if self.family == Family.POWER_LAW.value:
            return (1 - 0.25 * s.delta ** 2) / (4 * s.c) * safe_exp(-s.delta * x)
        if self.family == Family.CRITICAL.value:
            return 0.25 / self.lam ** 2
        # 1/4 sum_{j=0}^{N} Pi^2 G_j / lam^2, with Pi^2 G_j = (l_{j+1} ... l_N)^2
        ls = self._logs(x)
        acc, tot = 0.0, 1.0
        for k in range(s.N - 1, -1, -1):
            acc += 2 * math.log(ls[k])
            tot += safe_exp(acc)
        return 0.25 * tot / self.lam ** 2

    def neumann_slope(self, x: float) -> float:
        """k = (omega'/omega) / phi' at x = log rho (so u' = 0 means w'/w = -k)."""
        s = self.spec
        if self.family == "raw":
            return 0.0
        if self.family == Family.POWER_LAW.value:
            return (1 - 0.5 * s.delta) * safe_exp(-0.5 * s.delta * x) / (2 * math.sqrt(s.c))
        if self.family == Family.CRITICAL.value:
            return 0.5 / self.lam
        # (1/(2 lam)) sum_{k=0}^{N} l_{k+1} ... l_N
        ls = self._logs(x)
        tot, prod = 1.0, 1.0
        for k in range(s.N - 1, -1, -1):
            prod *= ls[k]
            tot += prod
        return 0.5 * tot / self.lam

    # -- transformed potential --------------------------------------------------

    def potential(self, problem: RadialProblem) -> Callable[[float], float]:
        """W(t) for one problem as a fast closure."""
        s = problem.spec
        E = problem.E
        lz = problem.log_zeta
        if self.family == "raw":
            if isinstance(s, CustomPotential):
                q = s.q
                return lambda t: q(t) + E
            return lambda t: eval_Q(s, 0.0, t, log_zeta=lz) + E
        Bf = None if s.B.is_zero else s.B.fn
        Xf = None if s.X.is_zero else s.X.fn
        need_rho = lz > -math.inf or Xf is not None
        logE = math.log(E) if E > 0 else -math.inf
        a, eps = s.a, s.eps

        def extras(x: float, logscale: float) -> float:
            rho = safe_exp(x)
            v = 0.0
            if lz > -math.inf:
                cen = safe_exp(lz - 2 * rho + logscale)
                if cen and Bf is not None:
                    cen *= 1.0 + math.exp(-rho) * Bf(rho)
                v += cen
            if Xf is not None and rho < math.inf:
                v += safe_exp(logscale - rho) * Xf(rho)
            return v

        if self.family == Family.POWER_LAW.value:
            c, d = s.c, s.delta
            k1 = 2.0 / d
            k2 = d / (2 * math.sqrt(c))
            hk = (1 - 0.25 * d * d) / (4 * c)
            ac = a / c
            logc = math.log(c)

            def W(t: float) -> float:
                x = k1 * math.log(k2 * t)
                w = -1.0 + hk * safe_exp(-d * x)
                ls = (2 - d) * x - logc
                if E > 0:
                    w += safe_exp(ls + logE)
                if a:
                    w += ac * x ** (-eps)
                if need_rho:
                    w += extras(x, ls)
                return w

            return W

        lam2 = self.lam ** 2
        const = (0.25 - s.c) / lam2
        al = a / lam2
        loglam2 = math.log(lam2)
        if self.family == Family.CRITICAL.value:
            lam = self.lam

            def W(t: float) -> float:
                x = t / lam
                w = const
                ls = 2 * x - loglam2
                if E > 0:
                    w += safe_exp(ls + logE)
                if a:
                    w += al * x ** (-eps)
                if need_rho:
                    w += extras(x, ls)
                return w

            return W

        N = s.N
        lam = self.lam

        def W(t: float) -> float:
            v = t / lam           # l_{N+1}
            logpi = v
            for _ in range(N):
                v = safe_exp(v)   # l_N, ..., l_1 = x
                logpi += v
            x = v
            w = const
            ls = 2 * logpi - loglam2
            if E > 0:
                w += safe_exp(ls + logE)
            if a:
                w += al * x ** (-eps)
            if need_rho:
                w += extras(x, ls)
            return w

        return W


def transform_for(spec) -> TransformDescriptor:
    """The compressed coordinate for a built-in family."""
    if isinstance(spec, CustomPotential):
        return TransformDescriptor("raw", 1.0, None)
    if spec.family is Family.POWER_LAW:
        return TransformDescriptor(Family.POWER_LAW.value, 0.0, spec)
    return TransformDescriptor(spec.family.value, spec.lam, spec)


def _raw_descriptor(spec) -> TransformDescriptor:
    return TransformDescriptor("raw", 1.0, spec if isinstance(spec, PotentialSpec) else None)


@dataclass(frozen=True)
class Certified:
    """Stop where Q + E > 0 is certified on the rest of the half line."""


@dataclass(frozen=True)
class FixedWindow:
    """Count zeros in (rho0, rho_max]; the end may be given through t or log rho."""

    rho_max: float | None = None
    t_max: float | None = None
    log_rho_max: float | None = None

    def __post_init__(self):
        if sum(v is not None for v in (self.rho_max, self.t_max, self.log_rho_max)) != 1:
            raise ValueError("give exactly one of rho_max, t_max, log_rho_max")


@dataclass
class PruferState:
    theta: float
    logr: float
    coordinate: float
    crossings: int


@dataclass
class ZResult:
    Z: int
    rho_stop: float
    certificate: Certificate
    ambiguous: bool
    state: PruferState | None = None
    log_rho_stop: float = math.nan
    steps: int = 0
    max_dtheta: float = 0.0
    skipped_to: float | None = None
    zeros: list = field(default_factory=list)
    notes: tuple[str, ...] = ()


# -- truncation ------------------------------------------------------------------


def _stop_x(spec, problem: RadialProblem) -> float:
    """x = log rho_stop with Q + E > 0 certified beyond it."""
    if isinstance(spec, CustomPotential):
        if spec.positive_beyond is None:
            raise ValueError("certified counting needs positive_beyond for a custom potential")
        r = max(spec.rho0, spec.positive_beyond)
        return math.log(r) if r > 0 else -math.inf
    if not problem.E > 0:
        raise ValueError("certified counting needs E > 0")
    env = RawEnvelope(spec, problem.log_zeta, problem.E)
    x0 = math.log(spec.rho0)
    xt = positive_tail_start(env, x0)
    if not math.isfinite(xt):
        raise ValueError("could not certify a positive tail")
    return certified_stop(env, x0, xt)


def truncation_interval(spec, zeta: float, E: float, *, log_zeta: float | None = None):
    """(rho0, rho_stop, certificate): Q + E > 0 is certified on (rho_stop, oo)."""
    prob = RadialProblem(spec, zeta, E, log_zeta=log_zeta)
    xs = _stop_x(spec, prob)
    return spec.rho0, safe_exp(xs), Certificate.POSITIVITY_TAIL


# -- counting --------------------------------------------------------------------


def _seed(tr: TransformDescriptor, bc: BoundaryCondition, x0: float) -> float:
    if bc is BoundaryCondition.DIRICHLET:
        return 0.0
    return math.atan2(1.0, -tr.neumann_slope(x0))


def _scaled(raw: float, log_scale: float) -> float:
    """raw * exp(log_scale) without overflowing the product."""
    if raw == 0 or not math.isfinite(raw):
        return float(raw)
    return math.copysign(safe_exp(math.log(abs(raw)) + log_scale), raw)


def _skip_point(tr: TransformDescriptor, problem: RadialProblem, x0: float, x_hi: float):
    """Where to restart after a stiff forbidden stretch at the start.

    Returns None (no skip), math.inf (Q + E > 0 on the whole window) or
    (x_s, x_w): x_s is the largest point found with W >= SKIP_W certified
    on [x0, x_s], x_w the first point where that certificate fails.  A skip is
    only taken when the recessive part has decayed by e^{-20} over the
    stretch, so the WKB seed at x_s is the dominant branch to working
    accuracy, and for Neumann when W dominates k^2, so the seed has a
    dominant component of the right sign.
    """
    spec = problem.spec
    if isinstance(spec, CustomPotential) or problem.log_zeta == -math.inf:
        return None
    env = RawEnvelope(spec, problem.log_zeta, problem.E)
    floor = SKIP_W
    if problem.bc is BoundaryCondition.NEUMANN:
        floor = max(floor, 4 * tr.neumann_slope(x0) ** 2)

    def w_low(xa: float, xs: float) -> float:
        raw = env.cell_lower(xa, xs)
        if not raw > 0:
            return -math.inf
        return _scaled(raw, tr.log_scale(xa)) + min(0.0, tr.hardy(xa), tr.hardy(xs))

    if env.cell_lower(x0, x_hi) > 0:
        # Q + E > 0 throughout, so u u' >= 0 persists from rho0
        return math.inf
    if not w_low(x0, x0 + 1e-9 * max(1.0, abs(x0))) >= floor:
        return None
    # one cell [x0, x_s] scaled at x0 can undershoot W by the whole growth
    # of the scale; restarting the bisection from each certified end keeps
    # the bound rigorous and lands where W itself is near the floor
    lo, hi = x0, x_hi
    for _ in range(8):
        base, hi = lo, x_hi
        for _ in range(200):
            if hi - lo <= 1e-12 * max(1.0, abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            if w_low(base, mid) >= floor:
                lo = mid
            else:
                hi = mid
        if lo - base <= 1e-12 * max(1.0, abs(lo)):
            break
    # lower bound of int sqrt(W) dt over [x0, lo], cell by cell
    decay = 0.0
    edges = [x0 + (lo - x0) * i / 64 for i in range(65)]
    for xa, xb in zip(edges, edges[1:]):
        w = _scaled(env.cell_lower(xa, xb), tr.log_scale(xa)) + min(0.0, tr.hardy(xa), tr.hardy(xb))
        if w > 0:
            decay += math.sqrt(w) * (tr.t_of_x(xb) - tr.t_of_x(xa))
    if decay < SKIP_DECAY:
        return None
    return lo, hi


def _wkb_seed(W: Callable[[float], float], t: float) -> float:
    w = W(t)
    h = 1e-5 * max(1.0, abs(t))
    # behind a centrifugal wall W can change by e over far less than h
    while h > 1e-14 * max(1.0, abs(t)) and not (0.5 * w < W(t - h) < 2 * w and 0.5 * w < W(t + h) < 2 * w):
        h *= 0.25
    dw = (W(t + h) - W(t - h)) / (2 * h)
    slope = math.sqrt(w) - dw / (4 * w)
    return math.atan2(1.0, slope)


def prufer_count(problem: RadialProblem, stop=None, *, coordinate: str = "transformed",
                 rtol: float = 1e-9, atol: float = 1e-12, record_zeros: bool = False,
                 max_extensions: int = 60) -> ZResult:
    """Number of zeros of the Cauchy solution in (rho0, rho_stop].

    ``stop`` is Certified() (default) or FixedWindow(...).  Dirichlet starts
    at theta = 0.  Neumann starts at u' = 0, which in the transformed
    coordinate is w'/w = -k, i.e. theta = atan2(1, -k); in raw rho it is
    theta = pi/2.  Zeros at rho0 itself are never counted; a zero within
    1e-6 (in theta) of the window end is counted and flagged ambiguous.
    """
    stop = Certified() if stop is None else stop
    spec = problem.spec
    if coordinate == "raw" or isinstance(spec, CustomPotential):
        tr = _raw_descriptor(spec)
    elif coordinate == "transformed":
        tr = transform_for(spec)
    else:
        raise ValueError(f"unknown coordinate {coordinate!r}")
    W = tr.potential(problem)
    rho0 = spec.rho0
    raw = tr.family == "raw"
    x0 = math.log(rho0) if rho0 > 0 else -math.inf
    t0 = rho0 if raw else tr.t_of_x(x0)
    notes = []

    certified = isinstance(stop, Certified)
    if certified:
        x_end = _stop_x(spec, problem)
        cert = Certificate.POSITIVITY_TAIL
    else:
        if stop.rho_max is not None:
            x_end = math.log(stop.rho_max) if stop.rho_max > 0 else -math.inf
            t_end = stop.rho_max if raw else tr.t_of_x(x_end)
        elif stop.log_rho_max is not None:
            x_end = stop.log_rho_max
            t_end = safe_exp(x_end) if raw else tr.t_of_x(x_end)
        else:
            if raw:
                raise ValueError("t_max needs the transformed coordinate")
            t_end = stop.t_max
            x_end = tr.x_of_t(t_end)
        cert = Certificate.FIXED_WINDOW
        if t_end < t0:
            raise ValueError("window ends before rho0")

    if certified:
        if x_end <= x0:
            # Q + E > 0 on all of [rho0, oo) and u u' >= 0 at rho0: u never vanishes
            return ZResult(0, rho0, cert, False, None, log_rho_stop=x0,
                           notes=("positive on the whole half line",))
        t_end = safe_exp(x_end) if raw else tr.t_of_x(x_end)
    theta0 = math.pi / 2 if (raw and problem.bc is BoundaryCondition.NEUMANN) else (
        0.0 if problem.bc is BoundaryCondition.DIRICHLET else _seed(tr, problem.bc, x0))
    st = MarchState(t0, theta0)
    skipped = None
    if not raw and t_end > t0:
        xs = _skip_point(tr, problem, x0, x_end)
        if xs == math.inf:
            return ZResult(0, safe_exp(x_end), cert, False, None, log_rho_stop=x_end,
                           notes=("positive on the whole window",))
        if xs is not None:
            xs, xw = xs
            ts = tr.t_of_x(xs)
            w = W(ts)
            if 0.25 * SKIP_W <= w <= WALL_W:
                st = MarchState(ts, _wkb_seed(W, ts))
                notes.append("stiff start skipped")
            else:
                # the centrifugal wall is thinner than the grid of doubles (W at
                # the restart is astronomically large, or already past the wall
                # after rounding x -> t): w'/w leaves it ~ sqrt(W) >> 1, theta ~ 0+
                xs = xw
                ts = tr.t_of_x(xw)
                st = MarchState(ts, math.atan2(1.0, math.sqrt(max(w, WALL_W))))
                notes.append("stiff start skipped across an unresolved wall")
            skipped = safe_exp(xs)

    kinks = sorted(k for k in getattr(spec, "kinks", ()) if st.t < k < t_end) if raw else []
    for k in kinks + [t_end]:
        march(W, st, k, rtol=rtol, atol=atol, record_zeros=record_zeros)

    ambiguous = False
    if certified:
        # beyond rho_stop Q + E > 0: a zero is still possible while u u' < 0
        x_cur = x_end

        def heading_down() -> bool:
            th = st.theta % PI
            if th == 0.0:
                return False
            cot = math.cos(th) / math.sin(th)
            k = tr.neumann_slope(x_cur)
            return cot < -k - 1e-12 * (1.0 + abs(k))

        n_ext = 0
        while heading_down():
            if n_ext >= max_extensions:
                ambiguous = True
                notes.append("tail state unresolved")
                break
            if raw:
                x_cur = x_cur + max(0.5, 0.25 * abs(x_cur))
                t_next = safe_exp(x_cur)
            else:
                # past the turning point W grows like E e^{2x}: fixed steps in
                # x = log rho grow it by about e per stretch in every family
                x_cur = x_cur + 0.5
                t_next = tr.t_of_x(x_cur)
            if not math.isfinite(t_next):
                ambiguous = True
                notes.append("tail extension left the double range")
                break
            march(W, st, t_next, rtol=rtol, atol=atol, record_zeros=record_zeros)
            n_ext += 1
        x_end = x_cur

    base = math.floor(theta0 / PI)
    Z = st.top - base
    frac = st.theta - st.top * PI
    if PI - frac < AMBIGUITY_TOL:
        Z += 1
        ambiguous = True
    elif st.top > base and frac < AMBIGUITY_TOL:
        ambiguous = True
    if st.backtracks:
        notes.append(f"{st.backtracks} backtracks")
    rho_stop = safe_exp(x_end)
    return ZResult(Z, rho_stop, cert, ambiguous,
                   PruferState(st.theta, st.logr, st.t, st.top - base),
                   log_rho_stop=x_end, steps=st.steps, max_dtheta=st.max_rate,
                   skipped_to=skipped,
                   zeros=[tr.inverse(z) for z in st.zeros] if record_zeros else [],
                   notes=tuple(notes))


# -- reference trajectories ---------------------------------------------------------


def solve_cauchy(problem: RadialProblem, window: tuple[float, float],
                 samples: int | Sequence[float] = 101, *, rtol: float = 1e-9,
                 atol: float = 1e-12, method: str = "DOP853"):
    """Trajectory of the untransformed Cauchy problem as [(rho, u, u'), ...].

    Starts at rho0 with (u, u') = (0, 1) for Dirichlet and (1, 0) for
    Neumann and reports the solution at the sample points inside ``window``.
    """
    spec = problem.spec
    rho0 = spec.rho0
    a, b = float(window[0]), float(window[1])
    if a < rho0 or b <= a:
        raise ValueError("window must lie inside [rho0, oo) with a < b")
    pts = np.linspace(a, b, samples) if isinstance(samples, int) else np.asarray(samples, float)
    E, lz = problem.E, problem.log_zeta

    if isinstance(spec, CustomPotential):
        def rhs(r, y):
            return [y[1], (spec.q(r) + E) * y[0]]
    else:
        def rhs(r, y):
            return [y[1], (eval_Q(spec, 0.0, r, log_zeta=lz) + E) * y[0]]

    y0 = [0.0, 1.0] if problem.bc is BoundaryCondition.DIRICHLET else [1.0, 0.0]
    if b == rho0:
        return [(rho0, y0[0], y0[1])]
    sol = solve_ivp(rhs, (rho0, b), y0, method=method, rtol=rtol, atol=atol,
                    t_eval=pts, dense_output=False)
    if not sol.success:
        raise IntegrationError(sol.message, float(sol.t[-1]) if len(sol.t) else rho0)
    return [(float(r), float(u), float(du)) for r, u, du in zip(sol.t, sol.y[0], sol.y[1])]
