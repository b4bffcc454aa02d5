"""Stationary Ornstein-Uhlenbeck realization driven by a Wiener path.

``z*`` solves ``dz = -z dt + dw``. It is computed by running the
exponential one-step update from ``z = 0`` at the left edge of the path
window and discarding the first ``burn_in`` time units; the initial
condition is forgotten like ``e^{-burn_in}``.

The update ``z[k+1] = e^{-dt} z[k] + (1 - e^{-dt})/dt * dw[k]`` uses the
conditional mean of the exact stochastic convolution given the increment,
so the recursion is exact in the decay and pathwise consistent with the
increments to O(dt).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .brownian import GridError, WienerPath

__all__ = ["OUPath", "ou_from_wiener", "ergodic_averages", "ErgodicAverages", "DEFAULT_BURN_IN"]

DEFAULT_BURN_IN = 20.0


@dataclass(frozen=True, eq=False)
class OUPath:
    dt: float
    n_lo: int
    values: np.ndarray = field(repr=False)
    burn_in: float

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def n_hi(self) -> int:
        return self.n_lo + len(self.values) - 1

    @property
    def t_start(self) -> float:
        return self.n_lo * self.dt

    @property
    def t_end(self) -> float:
        return self.n_hi * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1) * self.dt

    def index_of(self, t: float) -> int:
        q = t / self.dt
        k = round(q)
        if abs(q - k) > 1e-9 * max(1.0, abs(q)):
            raise GridError(f"t={t!r} is off the OU grid (dt={self.dt})")
        if not self.n_lo <= k <= self.n_hi:
            raise GridError(f"t={t!r} outside OU window [{self.t_start}, {self.t_end}]")
        return int(k) - self.n_lo

    def __call__(self, t: float) -> float:
        return float(self.values[self.index_of(t)])

    def window(self, t0: float, t1: float) -> np.ndarray:
        return self.values[self.index_of(t0): self.index_of(t1) + 1]

    def integral(self, t0: float, t1: float) -> float:
        """Trapezoidal integral of z* over ``[t0, t1]`` on the OU grid."""
        if t1 < t0:
            return -self.integral(t1, t0)
        seg = self.window(t0, t1)
        if len(seg) < 2:
            return 0.0
        return float(self.dt * (0.5 * (seg[0] + seg[-1]) + seg[1:-1].sum()))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "z"])
            for t, v in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(v))])


def ou_from_wiener(path: WienerPath, burn_in: float = DEFAULT_BURN_IN) -> OUPath:
    """OU values on ``[path.t_start + burn_in, path.t_end]``."""
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    skip = math.ceil(burn_in / path.dt - 1e-9)
    if skip > path.n_steps:
        raise GridError(
            f"path window [{path.t_start}, {path.t_end}] shorter than burn_in={burn_in}"
        )
    z = _kernels.ou_recursion(np.ascontiguousarray(path.increments), path.dt, 0.0)
    return OUPath(dt=path.dt, n_lo=path.n_lo + skip, values=np.array(z[skip:]), burn_in=burn_in)


@dataclass(frozen=True)
class ErgodicAverages:
    avg_z: float
    avg_abs_z: float
    sup_growth: float


def ergodic_averages(ou: OUPath, t: float) -> ErgodicAverages:
    """Time averages of z* and |z*| over ``[0, t]`` (or ``[t, 0]`` for t < 0).

    ``sup_growth`` is ``max |z*(s)| / (1 + |s|)`` over the grid points
    between 0 and ``t``.
    """
    if t == 0:
        raise ValueError("horizon must be non-zero")
    lo, hi = (0.0, t) if t > 0 else (t, 0.0)
    seg = ou.window(lo, hi)
    s = np.arange(ou.index_of(lo), ou.index_of(hi) + 1) * ou.dt + ou.t_start
    dt = ou.dt
    absseg = np.abs(seg)

    def trap(v):
        return dt * (0.5 * (v[0] + v[-1]) + v[1:-1].sum())

    span = hi - lo
    return ErgodicAverages(
        avg_z=float(trap(seg) / span),
        avg_abs_z=float(trap(absseg) / span),
        sup_growth=float(np.max(absseg / (1.0 + np.abs(s)))),
    )
