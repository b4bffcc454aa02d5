"""Seeded two-sided discrete Wiener paths.

A path lives on the uniform grid ``t_k = k * dt`` for integer ``k`` in
``[n_lo, n_hi]`` with ``n_lo <= 0 <= n_hi``, and is anchored so that the
value at ``t = 0`` is exactly zero.

Generator
---------
Increments are drawn with numpy's ``PCG64`` bit generator seeded through
``SeedSequence(seed)``. The sequence is split with ``spawn(2)``: child 0
produces the increments on ``[0, t_end]`` walking forward from the anchor,
child 1 produces the increments on ``[t_start, 0]`` walking backward from
the anchor. Each draw is ``standard_normal() * sqrt(dt)``. Because the two
sides are independent streams read outward from zero, widening the window
at fixed ``(seed, dt)`` keeps every previously generated increment, so
growing windows sample the same realization.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "GridError",
    "WienerPath",
    "generate",
    "value_at",
    "shift",
    "coarsen",
    "GENERATOR",
]

GENERATOR = "numpy.random.PCG64 via SeedSequence(seed).spawn(2); v1"

_DIV_TOL = 1e-12
_GRID_TOL = 1e-9


class GridError(ValueError):
    """Raised for off-grid evaluation or incompatible window/step."""


def _as_steps(t: float, dt: float, tol: float, what: str) -> int:
    q = t / dt
    k = round(q)
    if abs(q - k) > tol * max(1.0, abs(q)):
        raise GridError(f"{what}={t!r} is not an integer multiple of dt={dt!r}")
    return int(k)


@dataclass(frozen=True, eq=False)
class WienerPath:
    """Immutable discrete Brownian trajectory.

    ``root`` holds the values of the originally generated path and
    ``offset`` the number of grid steps by which this path is Wiener-shifted
    relative to it. Shifting only adds to ``offset``, so compositions of
    shifts are exact.
    """

    dt: float
    seed: int | None
    root: np.ndarray = field(repr=False)
    root_n_lo: int
    offset: int = 0

    def __post_init__(self):
        self.root.setflags(write=False)
        if self.offset == 0 and self.root[self.root_zero] == 0.0:
            values = self.root
        else:
            values = self.root - self.root[self.root_zero]
            values.setflags(write=False)
        object.__setattr__(self, "_values", values)

    @property
    def root_zero(self) -> int:
        """Index of the shifted origin inside ``root``."""
        return -self.root_n_lo + self.offset

    @property
    def n_lo(self) -> int:
        return self.root_n_lo - self.offset

    @property
    def n_hi(self) -> int:
        return self.n_lo + len(self.root) - 1

    @property
    def n_steps(self) -> int:
        return len(self.root) - 1

    @property
    def t_start(self) -> float:
        return self.n_lo * self.dt

    @property
    def t_end(self) -> float:
        return self.n_hi * self.dt

    @property
    def values(self) -> np.ndarray:
        """Path values on the grid, left to right."""
        return self._values

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self._values)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1) * self.dt

    def index_of(self, t: float) -> int:
        """Array index of grid time ``t``; raises GridError off-support."""
        k = _as_steps(t, self.dt, _GRID_TOL, "t")
        if not self.n_lo <= k <= self.n_hi:
            raise GridError(f"t={t!r} outside [{self.t_start}, {self.t_end}]")
        return k - self.n_lo

    def __call__(self, t: float) -> float:
        return value_at(self, t)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "w"])
            for t, v in zip(self.times, self._values):
                w.writerow([repr(float(t)), repr(float(v))])


def generate(seed: int, t_start: float, t_end: float, dt: float) -> WienerPath:
    """Draw a two-sided path on ``[t_start, t_end]`` with step ``dt``."""
    if not dt > 0:
        raise GridError(f"dt must be positive, got {dt!r}")
    if not t_start < t_end:
        raise GridError(f"need t_start < t_end, got {t_start!r} >= {t_end!r}")
    span = (t_end - t_start) / dt
    if abs(span - round(span)) > _DIV_TOL * max(1.0, abs(span)):
        raise GridError(f"interval length {t_end - t_start!r} not divisible by dt={dt!r}")
    if t_start > 0 or t_end < 0:
        raise GridError("window must contain t = 0")
    n_lo = _as_steps(t_start, dt, _DIV_TOL, "t_start")
    n_hi = _as_steps(t_end, dt, _DIV_TOL, "t_end")

    fwd_ss, bwd_ss = np.random.SeedSequence(seed).spawn(2)
    scale = math.sqrt(dt)
    fwd = np.random.Generator(np.random.PCG64(fwd_ss)).standard_normal(n_hi) * scale
    bwd = np.random.Generator(np.random.PCG64(bwd_ss)).standard_normal(-n_lo) * scale

    values = np.empty(n_hi - n_lo + 1)
    zero = -n_lo
    values[zero] = 0.0
    np.cumsum(fwd, out=values[zero + 1:])
    # bwd[j] is the increment on [-(j+1) dt, -j dt]
    values[:zero] = -np.cumsum(bwd)[::-1]
    return WienerPath(dt=float(dt), seed=seed, root=values, root_n_lo=n_lo)


def value_at(path: WienerPath, t: float) -> float:
    """Path value at on-grid time ``t``."""
    return float(path.values[path.index_of(t)])


def shift(path: WienerPath, s: float) -> WienerPath:
    """Wiener shift: the returned path ``v`` has ``v(t) = w(t + s) - w(s)``."""
    k = _as_steps(s, path.dt, _GRID_TOL, "s")
    if not path.n_lo <= k <= path.n_hi:
        raise GridError(f"shift s={s!r} outside [{path.t_start}, {path.t_end}]")
    return WienerPath(
        dt=path.dt,
        seed=path.seed,
        root=path.root,
        root_n_lo=path.root_n_lo,
        offset=path.offset + k,
    )


def coarsen(path: WienerPath, factor: int) -> WienerPath:
    """Keep every ``factor``-th grid point.

    Coarse increments are sums of ``factor`` consecutive fine increments and
    values at shared grid points are bit-identical to the fine path. Both
    window ends must sit on the coarse grid so that ``t = 0`` stays a grid
    point.
    """
    if int(factor) != factor or factor < 1:
        raise GridError(f"factor must be a positive integer, got {factor!r}")
    factor = int(factor)
    if factor == 1:
        return path
    if path.n_steps % factor or path.n_lo % factor:
        raise GridError(
            f"factor {factor} does not divide the grid ({path.n_lo}..{path.n_hi} steps)"
        )
    return WienerPath(
        dt=path.dt * factor,
        seed=path.seed,
        root=np.array(path.values[::factor]),
        root_n_lo=path.n_lo // factor,
    )
