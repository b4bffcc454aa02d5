"""Time-stepping kernels, each with a numba and a pure-numpy implementation.

The numba versions loop over ensemble members and steps; the numpy versions
loop over steps and vectorize across members. The active backend is chosen
at import time: numba is used when importable unless the environment
variable ``CHEMOSTAT_RDS_NUMBA`` is set to ``0``/``false``/``no``/``off``.
Both sets of functions are always importable by name for testing and
benchmarking.

The Euler-Maruyama kernels store every ``stride``-th state (``stride`` must
divide the step count).

Failure convention: ``fail[b]`` is the step index at which member ``b``
tripped the pole guard or produced a non-finite state (``-1`` if none);
states from that index on are NaN.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy.signal import lfilter

try:
    import numba
except ImportError:  # pragma: no cover - depends on environment
    numba = None

_FLAG = os.environ.get("CHEMOSTAT_RDS_NUMBA", "1").strip().lower()
USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "no", "off")
BACKEND = "numba" if USE_NUMBA else "numpy"


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True)(fn)


# ---------------------------------------------------------------- OU recursion


def ou_numpy(inc, dt, z0):
    """Exponential update ``z[k+1] = e^-dt z[k] + c inc[k]``, ``c = (1-e^-dt)/dt``."""
    decay = math.exp(-dt)
    c = -math.expm1(-dt) / dt
    out = np.empty(len(inc) + 1)
    out[0] = z0
    if len(inc):
        zi = np.array([decay * z0])
        out[1:], _ = lfilter([c], [1.0, -decay], inc, zi=zi)
    return out


@_njit
def ou_numba(inc, dt, z0):
    decay = math.exp(-dt)
    c = -math.expm1(-dt) / dt
    n = inc.shape[0]
    out = np.empty(n + 1)
    z = z0
    out[0] = z
    for k in range(n):
        z = decay * z + c * inc[k]
        out[k + 1] = z
    return out


# ------------------------------------------------------------- Euler-Maruyama


def em_numpy(s_in, a, m, d, alpha, dw, dt, s0, x0, floor, stride=1):
    nb, n = dw.shape
    out = np.full((nb, n // stride + 1, 2), np.nan)
    fail = np.full(nb, -1, dtype=np.int64)
    clamps = np.zeros(nb, dtype=np.int64)
    s = np.array(s0, dtype=float)
    x = np.array(x0, dtype=float)
    out[:, 0, 0] = s
    out[:, 0, 1] = x
    live = np.ones(nb, dtype=bool)
    with np.errstate(all="ignore"):
        for j in range(n):
            den = a + s
            bad = live & ~(den > floor)
            if bad.any():
                fail[bad] = j
                live &= ~bad
            mu = m * s / den
            w = dw[:, j]
            sn = s + ((s_in - s) * d - mu * x) * dt + alpha * (s_in - s) * w
            xn = x + x * (mu - d) * dt - alpha * x * w
            neg = xn < 0.0
            clamps += neg & live
            xn = np.where(neg, 0.0, xn)
            bad = live & ~(np.isfinite(sn) & np.isfinite(xn))
            if bad.any():
                fail[bad] = j + 1
                live &= ~bad
            s = np.where(live, sn, np.nan)
            x = np.where(live, xn, np.nan)
            if (j + 1) % stride == 0:
                out[:, (j + 1) // stride, 0] = s
                out[:, (j + 1) // stride, 1] = x
    return out, clamps, fail


@_njit
def em_numba(s_in, a, m, d, alpha, dw, dt, s0, x0, floor, stride=1):
    nb, n = dw.shape
    out = np.full((nb, n // stride + 1, 2), np.nan)
    fail = np.full(nb, -1, dtype=np.int64)
    clamps = np.zeros(nb, dtype=np.int64)
    for b in range(nb):
        s = s0[b]
        x = x0[b]
        out[b, 0, 0] = s
        out[b, 0, 1] = x
        for j in range(n):
            den = a + s
            if not den > floor:
                fail[b] = j
                break
            mu = m * s / den
            w = dw[b, j]
            sn = s + ((s_in - s) * d - mu * x) * dt + alpha * (s_in - s) * w
            xn = x + x * (mu - d) * dt - alpha * x * w
            if xn < 0.0:
                xn = 0.0
                clamps[b] += 1
            if not (math.isfinite(sn) and math.isfinite(xn)):
                fail[b] = j + 1
                break
            s = sn
            x = xn
            if (j + 1) % stride == 0:
                out[b, (j + 1) // stride, 0] = s
                out[b, (j + 1) // stride, 1] = x
    return out, clamps, fail


# ------------------------------------------------------- RK4 on the random ODE
#
# zs[b] holds z* at half-step points: zs[b, 2i] at t_i, zs[b, 2i+1] at the
# stage midpoint, zs[b, 2i+2] at t_{i+1}.


def rk4_numpy(s_in, a, m, dbar, alpha, zs, h, sig0, kap0, floor):
    nb = zs.shape[0]
    n = (zs.shape[1] - 1) // 2
    out = np.full((nb, n + 1, 2), np.nan)
    fail = np.full(nb, -1, dtype=np.int64)
    clamps = np.zeros(nb, dtype=np.int64)
    sig = np.array(sig0, dtype=float)
    kap = np.array(kap0, dtype=float)
    out[:, 0, 0] = sig
    out[:, 0, 1] = kap
    live = np.ones(nb, dtype=bool)
    ma = m * a

    def rhs(sg, kp, z):
        den = a + s_in + sg * np.exp(-alpha * z)
        ok = den > floor
        g = -(dbar + alpha * z)
        u = ma * kp / den
        return g * sg - m * kp + u, g * kp + m * kp - u, ok

    with np.errstate(all="ignore"):
        for i in range(n):
            za = zs[:, 2 * i]
            zm = zs[:, 2 * i + 1]
            zb = zs[:, 2 * i + 2]
            a1, b1, ok1 = rhs(sig, kap, za)
            a2, b2, ok2 = rhs(sig + 0.5 * h * a1, kap + 0.5 * h * b1, zm)
            a3, b3, ok3 = rhs(sig + 0.5 * h * a2, kap + 0.5 * h * b2, zm)
            a4, b4, ok4 = rhs(sig + h * a3, kap + h * b3, zb)
            sn = sig + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            kn = kap + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            bad = live & ~(ok1 & ok2 & ok3 & ok4)
            if bad.any():
                fail[bad] = i
                live &= ~bad
            neg = kn < 0.0
            clamps += neg & live
            kn = np.where(neg, 0.0, kn)
            bad = live & ~(np.isfinite(sn) & np.isfinite(kn))
            if bad.any():
                fail[bad] = i + 1
                live &= ~bad
            sig = np.where(live, sn, np.nan)
            kap = np.where(live, kn, np.nan)
            out[:, i + 1, 0] = sig
            out[:, i + 1, 1] = kap
    return out, clamps, fail


@_njit
def _rhs_scalar(s_in, a, m, dbar, alpha, sg, kp, z, floor):
    den = a + s_in + sg * math.exp(-alpha * z)
    if not den > floor:
        # numba raises on float division by zero, so bail out before dividing
        return 0.0, 0.0, False
    g = -(dbar + alpha * z)
    u = m * a * kp / den
    return g * sg - m * kp + u, g * kp + m * kp - u, True


@_njit
def rk4_numba(s_in, a, m, dbar, alpha, zs, h, sig0, kap0, floor):
    nb = zs.shape[0]
    n = (zs.shape[1] - 1) // 2
    out = np.full((nb, n + 1, 2), np.nan)
    fail = np.full(nb, -1, dtype=np.int64)
    clamps = np.zeros(nb, dtype=np.int64)
    hh = 0.5 * h
    for b in range(nb):
        sg = sig0[b]
        kp = kap0[b]
        out[b, 0, 0] = sg
        out[b, 0, 1] = kp
        for i in range(n):
            za = zs[b, 2 * i]
            zm = zs[b, 2 * i + 1]
            zb = zs[b, 2 * i + 2]
            a1, b1, ok1 = _rhs_scalar(s_in, a, m, dbar, alpha, sg, kp, za, floor)
            a2, b2, ok2 = _rhs_scalar(s_in, a, m, dbar, alpha, sg + hh * a1, kp + hh * b1, zm, floor)
            a3, b3, ok3 = _rhs_scalar(s_in, a, m, dbar, alpha, sg + hh * a2, kp + hh * b2, zm, floor)
            a4, b4, ok4 = _rhs_scalar(s_in, a, m, dbar, alpha, sg + h * a3, kp + h * b3, zb, floor)
            if not (ok1 and ok2 and ok3 and ok4):
                fail[b] = i
                break
            sn = sg + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            kn = kp + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            if kn < 0.0:
                kn = 0.0
                clamps[b] += 1
            if not (math.isfinite(sn) and math.isfinite(kn)):
                fail[b] = i + 1
                break
            sg = sn
            kp = kn
            out[b, i + 1, 0] = sg
            out[b, i + 1, 1] = kp
    return out, clamps, fail


if USE_NUMBA:
    ou_recursion = ou_numba
    em_batch = em_numba
    rk4_batch = rk4_numba
else:
    ou_recursion = ou_numpy
    em_batch = em_numpy
    rk4_batch = rk4_numpy
