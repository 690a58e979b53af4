"""Certificates that no zeros occur past a truncation point.

Two independent arguments are available.

Positivity: if Q + E > 0 on [rho*, oo), a solution with u u' >= 0 at rho*
satisfies (u^2)'' = 2u'^2 + 2(Q+E)u^2 > 0 and never vanishes again.  Q + E
is bounded from below by closed-form monotone pieces of each built-in
family, so positivity on a whole half line reduces to a finite scan.

WKB: for u'' = (f + g) u with f > 0, Olver's theorem gives solutions
f^{-1/4} exp(+-int f^{1/2}) (1 + eps) with |eps| <= exp(V/2) - 1, where V is
the total variation of

    F = int f^{-1/4} (f^{-1/4})'' - g f^{-1/2}.

When exp(V/2) - 1 < 1 both members of the pair keep their sign on the tail.

All envelope functions below take x = log rho so that rho far outside the
double range (iterated-log family) stays usable.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .potential_model import (
    CustomPotential,
    Family,
    PotentialSpec,
    eval_V,
    safe_exp,
)

__all__ = [
    "Certificate",
    "RawEnvelope",
    "TailCertificate",
    "Refusal",
    "WkbBound",
    "DivergentIntegralError",
    "total_variation_F",
    "olver_envelopes",
    "certify_tail_positive",
    "positive_tail_start",
    "certified_stop",
]


class Certificate(str, enum.Enum):
    POSITIVITY_TAIL = "positivity-tail"
    WKB_ENVELOPE = "wkb-envelope"
    FIXED_WINDOW = "fixed-window"


# absolute floor for the variation integral; the five-point derivatives
# carry roundoff near 1e-11 rho^-2, so asking for less makes quad flag noise
EPS_ABS = 1e-12


class DivergentIntegralError(ArithmeticError):
    """The total variation integral does not converge."""


# -- lower envelopes of Q + E ---------------------------------------------------


def _exp_neg_rho(x: float) -> float:
    # e^{-rho} with rho = e^x
    return math.exp(-safe_exp(x))


@dataclass(frozen=True)
class RawEnvelope:
    """Lower bound for Q(rho) + E split into monotone pieces of x = log rho.

    inc(x)  sum of terms increasing in x: E, the leading -V_0, -Xsup e^-rho
            and a V_1 when a < 0
    dec(x)  a V_1 when a > 0 (positive, decreasing)
    cent    zeta e^{-2 rho} (1 - Bsup e^-rho)_+ (nonnegative)
    """

    spec: PotentialSpec
    log_zeta: float
    E: float

    def _logs(self, x: float) -> list[float]:
        out = [x]
        for _ in range(self.spec.N):
            v = out[-1]
            out.append(math.log(v) if v > 0 else math.nan)
        return out  # l_1 .. l_{N+1}

    def v0(self, x: float) -> float:
        """Leading part -V_0 (increasing to 0)."""
        s = self.spec
        if s.family is Family.POWER_LAW:
            return -s.c * safe_exp((s.delta - 2) * x)
        if s.family is Family.CRITICAL:
            return -s.c * safe_exp(-2 * x)
        ls = self._logs(x)
        acc = x
        out = -0.25 * safe_exp(-2 * x)
        for j in range(1, s.N + 1):
            acc += ls[j]  # log l_j
            g = safe_exp(-2 * acc)
            out -= (s.c if j == s.N else 0.25) * g
        return out

    def v1(self, x: float) -> float:
        """Damped remainder shape V_1 >= 0 (decreasing)."""
        s = self.spec
        if s.a == 0:
            return 0.0
        damp = x ** (-s.eps)
        if s.family is Family.POWER_LAW:
            return safe_exp((s.delta - 2) * x) * damp
        if s.family is Family.CRITICAL:
            return safe_exp(-2 * x) * damp
        ls = self._logs(x)
        return safe_exp(-2 * sum(ls[: s.N + 1])) * damp

    def inc(self, x: float) -> float:
        s = self.spec
        v = self.E + self.v0(x)
        if s.X.sup:
            v -= s.X.sup * _exp_neg_rho(x)
        if s.a < 0:
            v += s.a * self.v1(x)
        return v

    def dec(self, x: float) -> float:
        return self.spec.a * self.v1(x) if self.spec.a > 0 else 0.0

    def cent(self, xa: float, xb: float) -> float:
        if self.log_zeta == -math.inf:
            return 0.0
        damp = 1.0 - self.spec.B.sup * _exp_neg_rho(xa)
        if damp <= 0:
            return 0.0
        return safe_exp(self.log_zeta - 2 * safe_exp(xb)) * damp

    def cell_lower(self, xa: float, xb: float) -> float:
        """Lower bound of Q + E over rho in [e^xa, e^xb]."""
        return self.inc(xa) + self.dec(xb) + self.cent(xa, xb)

    def tail_lower(self, x: float) -> float:
        """Lower bound of Q + E over [e^x, oo)."""
        return self.inc(x)

    def upper_abs(self, rho: float) -> float:
        """Upper bound of |Q(rho)| used by the WKB variation."""
        s = self.spec
        v = abs(eval_V(s, rho))
        if self.log_zeta > -math.inf:
            v += safe_exp(self.log_zeta - 2 * rho) * (1 + s.B.sup * math.exp(-rho))
        v += s.X.sup * math.exp(-rho)
        return v


def positive_tail_start(env: RawEnvelope, x0: float, *, tol: float = 1e-12) -> float:
    """Smallest x >= x0 (to tolerance) with Q + E > 0 certified on [e^x, oo); inf if none."""
    if env.tail_lower(x0) > 0:
        return x0
    step = 1.0
    lo, hi = x0, x0 + step
    while not env.tail_lower(hi) > 0:
        lo = hi
        step *= 2
        hi = x0 + step
        if step > 1e6:
            return math.inf
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if env.tail_lower(mid) > 0:
            hi = mid
        else:
            lo = mid
    return hi


def certified_stop(env: RawEnvelope, x0: float, x_tail: float, *,
                   cells: int = 128, tol: float = 1e-11) -> float:
    """Smallest scanned x such that Q + E > 0 is certified on [e^x, oo).

    Cells of [x0, x_tail] are checked from the right; the first failing
    cell is split recursively (right half first) down to ``tol``.  Returns
    x0 when nothing fails.
    """
    if x_tail <= x0:
        return x0

    def scan(a: float, b: float, depth: int) -> float | None:
        if env.cell_lower(a, b) > 0:
            return None
        if b - a <= tol * max(1.0, abs(b)) or depth > 60:
            return b
        m = 0.5 * (a + b)
        r = scan(m, b, depth + 1)
        if r is not None:
            return r
        return scan(a, m, depth + 1)

    edges = np.linspace(x0, x_tail, cells + 1)
    for i in range(cells - 1, -1, -1):
        r = scan(float(edges[i]), float(edges[i + 1]), 0)
        if r is not None:
            return r
    return x0


# -- Olver total variation ------------------------------------------------------


@dataclass(frozen=True)
class WkbBound:
    interval: tuple[float, float]
    V: float
    eps1: float
    eps2: float


def _derivatives(f: Callable[[float], float], x: float) -> tuple[float, float, float]:
    # five-point stencils; step sized for the second derivative
    h = 2e-3 * max(1.0, abs(x))
    f0 = f(x)
    fp1, fm1 = f(x + h), f(x - h)
    fp2, fm2 = f(x + 2 * h), f(x - 2 * h)
    d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)
    d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
    return f0, d1, d2


def _F_prime(f, g, df, d2f, rho: float) -> float:
    if df is None or d2f is None:
        fv, f1, f2 = _derivatives(f, rho)
    else:
        fv, f1, f2 = f(rho), df(rho), d2f(rho)
    if not fv > 0:
        raise ValueError(f"f must be positive, f({rho:g}) = {fv:g}")
    # (f^{-1/4})'' = -1/4 f^{-5/4} f'' + 5/16 f^{-9/4} f'^2
    q = fv ** -0.25
    second = -0.25 * fv ** -1.25 * f2 + 0.3125 * fv ** -2.25 * f1 * f1
    return q * second - g(rho) / math.sqrt(fv)


def total_variation_F(f: Callable[[float], float], g: Callable[[float], float],
                      interval: tuple[float, float], *,
                      df: Callable[[float], float] | None = None,
                      d2f: Callable[[float], float] | None = None,
                      rtol: float = 1e-8) -> float:
    """Total variation of Olver's error-control function F on ``interval``.

    Integrates |f^{-1/4}(f^{-1/4})'' - g f^{-1/2}| adaptively.  An infinite
    right end is mapped by rho = a + L s / (1 - s) with L = max(1, |a|), so
    algebraic tails stay integrable in s.  Pass ``df`` and ``d2f`` when
    available; otherwise derivatives come from five-point differences, good
    to roughly 1e-9 relative.
    """
    a, b = float(interval[0]), float(interval[1])
    if not b > a:
        raise ValueError("interval must have a < b")

    def integrand(rho):
        return abs(_F_prime(f, g, df, d2f, rho))

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if math.isinf(b):
                scale = max(1.0, abs(a))

                def mapped(s):
                    if s >= 1.0:
                        return 0.0
                    return integrand(a + scale * s / (1.0 - s)) * scale / (1.0 - s) ** 2

                val, _ = integrate.quad(mapped, 0.0, 1.0, epsrel=rtol, epsabs=EPS_ABS, limit=400)
            else:
                val, _ = integrate.quad(integrand, a, b, epsrel=rtol, epsabs=EPS_ABS, limit=400)
        except integrate.IntegrationWarning as exc:
            raise DivergentIntegralError(f"variation integral did not converge: {exc}") from None
    if not math.isfinite(val):
        raise DivergentIntegralError("variation integral is not finite")
    return val


def olver_envelopes(f, g, interval, **kw) -> WkbBound:
    """Error envelopes eps1 = eps2 = exp(V/2) - 1 of the Liouville-Green pair."""
    V = total_variation_F(f, g, interval, **kw)
    eps = math.expm1(0.5 * V)
    return WkbBound((float(interval[0]), float(interval[1])), V, eps, eps)


# -- tail certification -----------------------------------------------------------


@dataclass(frozen=True)
class TailCertificate:
    kind: Certificate
    rho_star: float
    margin: float  # lower bound of Q+E on the tail, or 1 - eps for WKB
    detail: str = ""

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Refusal:
    rho_star: float
    reason: str

    def __bool__(self) -> bool:
        return False


def certify_tail_positive(spec, zeta: float, E: float, rho_star: float, *,
                          log_zeta: float | None = None) -> TailCertificate | Refusal:
    """Certify that the tail [rho_star, oo) carries no oscillation.

    Positivity is tried first; it certifies Q + E > 0 on the whole tail, so
    a solution with u u' >= 0 at rho_star has no further zero.  Failing
    that, the WKB route bounds the variation with f = E, g = |Q| envelope;
    exp(V/2) - 1 < 1 means the recessive and dominant solutions keep their
    sign, so any solution has at most one further zero and the recessive one
    none.  Otherwise a Refusal is returned.
    """
    if isinstance(spec, CustomPotential):
        if spec.positive_beyond is not None and rho_star >= spec.positive_beyond:
            return TailCertificate(Certificate.POSITIVITY_TAIL, rho_star, math.nan,
                                   "declared positive tail")
        return Refusal(rho_star, "custom potential without a declared positive tail")
    if rho_star < spec.rho0:
        raise ValueError("rho_star must be >= rho0")
    if not E > 0:
        return Refusal(rho_star, "E must be positive")
    if log_zeta is None:
        log_zeta = math.log(zeta) if zeta > 0 else -math.inf
    env = RawEnvelope(spec, log_zeta, E)
    xs = math.log(rho_star)
    x_tail = positive_tail_start(env, xs)
    if math.isfinite(x_tail):
        x_stop = certified_stop(env, xs, x_tail)
        if x_stop <= xs:
            edges = np.linspace(xs, x_tail, 33)
            margin = min([env.cell_lower(float(p), float(q)) for p, q in zip(edges[:-1], edges[1:])]
                         + [env.tail_lower(x_tail)]) if x_tail > xs else env.tail_lower(xs)
            return TailCertificate(Certificate.POSITIVITY_TAIL, rho_star, margin,
                                   "Q+E > 0 on the whole tail")
    try:
        bound = olver_envelopes(lambda r: E, env.upper_abs, (rho_star, math.inf),
                                df=lambda r: 0.0, d2f=lambda r: 0.0)
    except (DivergentIntegralError, OverflowError) as exc:
        return Refusal(rho_star, f"Q+E changes sign on the tail and the WKB variation diverges ({exc})")
    if bound.eps1 < 1.0:
        return TailCertificate(Certificate.WKB_ENVELOPE, rho_star, 1.0 - bound.eps1,
                               f"V = {bound.V:.6g}")
    return Refusal(rho_star, f"WKB envelope too wide (eps = {bound.eps1:.3g})")
