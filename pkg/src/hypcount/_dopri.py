"""Scalar Dormand-Prince 5(4) stepper specialised to the Prufer equation.

theta' = cos^2 theta - W(t) sin^2 theta, with log r' = (1 + W) sin theta cos theta
carried along as a quadrature (it does not enter the error norm).  The
coefficients and the continuous extension follow Hairer, Norsett & Wanner,
Solving ODEs I, sec. II.5 / II.6.  Written against ``math`` floats because
a NumPy array round trip per stage costs more than the whole stage here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

PI = math.pi

A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)
D1, D3, D4, D5, D6, D7 = (-12715105075 / 11282082432, 87487479700 / 32700410799,
                          -10690763975 / 1880347072, 701980252875 / 199316789632,
                          -1453857185 / 822651844, 69997945 / 29380423)


class IntegrationError(RuntimeError):
    """Step size underflow or runaway step count; carries the location."""

    def __init__(self, msg: str, t: float):
        super().__init__(f"{msg} at t = {t:.17g}")
        self.t = t


@dataclass
class MarchState:
    t: float
    theta: float
    logr: float = 0.0
    h: float = 0.0
    top: int = 0                 # highest multiple of pi reached so far
    steps: int = 0
    rejected: int = 0
    max_rate: float = 0.0        # max |theta'| seen at step starts
    backtracks: int = 0
    zeros: list = field(default_factory=list)


def _rhs(W: Callable[[float], float], t: float, th: float):
    w = W(t)
    s = math.sin(th)
    c = math.cos(th)
    return c * c - w * s * s, (1.0 + w) * s * c


def march(W: Callable[[float], float], st: MarchState, t_end: float, *,
          rtol: float = 1e-9, atol: float = 1e-12, record_zeros: bool = False,
          max_steps: int = 2_000_000) -> MarchState:
    """Advance ``st`` to ``t_end`` (> st.t), counting upward pi crossings."""
    t, th, lr = st.t, st.theta, st.logr
    span = t_end - t
    if span <= 0:
        return st
    k1, l1 = _rhs(W, t, th)
    h = st.h
    if not h > 0:
        w0 = abs(W(t))
        h = 0.05 / max(1.0, math.sqrt(w0)) if math.isfinite(w0) else 1e-6
    h = min(h, span)
    h_next = h
    hmin_rel = 1e-13
    while t < t_end:
        if st.steps >= max_steps:
            raise IntegrationError("too many steps", t)
        last = False
        if t + h >= t_end or t_end - (t + h) < 1e-12 * abs(t_end):
            h = t_end - t
            last = True
        if h <= hmin_rel * max(1.0, abs(t)):
            raise IntegrationError("step size underflow", t)
        k2, l2 = _rhs(W, t + C2 * h, th + h * A21 * k1)
        k3, l3 = _rhs(W, t + C3 * h, th + h * (A31 * k1 + A32 * k2))
        k4, l4 = _rhs(W, t + C4 * h, th + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5, l5 = _rhs(W, t + C5 * h, th + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        tn = t_end if last else t + h
        k6, l6 = _rhs(W, tn, th + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        thn = th + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7, l7 = _rhs(W, tn, thn)
        err_est = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sc = atol + rtol * max(abs(th), abs(thn))
        err = abs(err_est) / sc
        if not math.isfinite(err):
            h *= 0.1
            st.rejected += 1
            continue
        if err <= 1.0:
            st.steps += 1
            rate = abs(k1)
            if rate > st.max_rate:
                st.max_rate = rate
            lrn = lr + h * (B1 * l1 + B3 * l3 + B4 * l4 + B5 * l5 + B6 * l6)
            kn = math.floor(thn / PI)
            if kn > st.top:
                ko = st.top
                dense = None
                for m in range(ko + 1, kn + 1):
                    if record_zeros or dense is None:
                        dense = _dense_coeffs(th, thn, h, k1, k3, k4, k5, k6, k7)
                    tc = _locate(dense, t, h, m * PI) if record_zeros else t + h * (m * PI - th) / (thn - th)
                    slope, _ = _rhs(W, tc, m * PI)
                    if not slope > 0:
                        raise IntegrationError("non-transversal pi crossing", tc)
                    if record_zeros:
                        st.zeros.append(tc)
                st.top = kn
            elif thn < st.top * PI - 1e-6:
                st.backtracks += 1
            t, th, lr = tn, thn, lrn
            k1, l1 = k7, l7
            fac = 0.9 * err ** -0.2 if err > 0 else 5.0
            h_next = h * min(5.0, max(0.2, fac))
            if not last:
                h = h_next
        else:
            st.rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2)
    st.t, st.theta, st.logr = t, th, lr
    st.h = h_next
    return st


def _dense_coeffs(y0, y1, h, k1, k3, k4, k5, k6, k7):
    r1 = y0
    r2 = y1 - y0
    r3 = h * k1 - r2
    r4 = r2 - h * k7 - r3
    r5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
    return r1, r2, r3, r4, r5


def _dense_eval(c, s):
    r1, r2, r3, r4, r5 = c
    s1 = 1.0 - s
    return r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)))


def _locate(c, t0, h, target, tol=1e-10):
    lo, hi = 0.0, 1.0
    # the crossing is transversal, so the interpolant is increasing near it
    while (hi - lo) * abs(h) > tol:
        mid = 0.5 * (lo + hi)
        if _dense_eval(c, mid) < target:
            lo = mid
        else:
            hi = mid
    return t0 + h * 0.5 * (lo + hi)
