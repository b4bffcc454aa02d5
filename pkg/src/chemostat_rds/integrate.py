"""Euler-Maruyama for the Ito chemostat, RK4 for the random ODE, and the
conjugated simulation that maps RK4 solutions back to ``(S, x)``."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import _kernels
from .brownian import GridError, WienerPath
from .model import POLE_FLOOR, ChemostatParams, RandomState, StochState, transform
from .ou import DEFAULT_BURN_IN, OUPath, ou_from_wiener

__all__ = [
    "NumericalFailure",
    "Trajectory",
    "euler_maruyama",
    "euler_maruyama_ensemble",
    "rk4_random",
    "simulate_conjugated",
    "read_trajectory_csv",
]

STOCHASTIC = "stochastic"
RANDOM = "random"


class NumericalFailure(ArithmeticError):
    """Pole guard tripped or a state became non-finite."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass(eq=False)
class Trajectory:
    """Uniformly sampled solution of either system.

    ``states[:, 0]`` is ``S`` or ``sigma``, ``states[:, 1]`` is ``x`` or
    ``kappa``. ``z`` holds z* at the output times when the trajectory came
    from (or through) the random ODE. ``failed_step`` is set only for
    ensemble members that hit a numerical failure; their states are NaN
    from that step on.
    """

    times: np.ndarray
    states: np.ndarray
    kind: str
    params: ChemostatParams
    seed: int | None = None
    scheme: str = ""
    clamp_events: int = 0
    z: np.ndarray | None = field(default=None, repr=False)
    failed_step: int | None = None

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def first(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def second(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def columns(self) -> tuple[str, str]:
        return ("S", "x") if self.kind == STOCHASTIC else ("sigma", "kappa")

    def to_csv(self, path: str | Path) -> None:
        p = self.params
        with open(path, "w", newline="") as fh:
            fh.write(f"# params: S0={p.S0!r} a={p.a!r} m={p.m!r} D={p.D!r} alpha={p.alpha!r}\n")
            fh.write(f"# seed: {self.seed!r} kind: {self.kind}\n")
            fh.write(f"# scheme: {self.scheme} clamp_events={self.clamp_events}\n")
            w = csv.writer(fh)
            w.writerow(["t", *self.columns])
            for t, (u, v) in zip(self.times, self.states):
                w.writerow([repr(float(t)), repr(float(u)), repr(float(v))])


def read_trajectory_csv(path: str | Path) -> Trajectory:
    """Inverse of :meth:`Trajectory.to_csv`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    meta = [ln[2:] for ln in lines[:3]]
    kv = dict(tok.split("=", 1) for tok in meta[0].removeprefix("params: ").split())
    params = ChemostatParams(**{k: float(v) for k, v in kv.items()})
    seed_part, kind = meta[1].removeprefix("seed: ").split(" kind: ")
    seed = None if seed_part == "None" else int(seed_part)
    scheme, clamp = meta[2].removeprefix("scheme: ").rsplit(" clamp_events=", 1)
    rows = list(csv.reader(lines[4:]))
    data = np.array([[float(c) for c in r] for r in rows]) if rows else np.empty((0, 3))
    return Trajectory(
        times=data[:, 0],
        states=data[:, 1:3].copy(),
        kind=kind,
        params=params,
        seed=seed,
        scheme=scheme,
        clamp_events=int(clamp),
    )


def _span_indices(n_lo: int, n_hi: int, dt: float, t_span, step_ratio: int) -> tuple[int, int]:
    t0, t1 = t_span
    if not t0 < t1:
        raise GridError(f"empty time span {t_span!r}")
    i0, i1 = t0 / dt, t1 / dt
    k0, k1 = round(i0), round(i1)
    if abs(i0 - k0) > 1e-9 * max(1.0, abs(i0)) or abs(i1 - k1) > 1e-9 * max(1.0, abs(i1)):
        raise GridError(f"t_span {t_span!r} not on the grid of step {dt}")
    if k0 < n_lo or k1 > n_hi:
        raise GridError(f"t_span {t_span!r} not covered by [{n_lo * dt}, {n_hi * dt}]")
    if (k1 - k0) % step_ratio:
        raise GridError(f"span of {k1 - k0} steps not divisible by refinement {step_ratio}")
    return int(k0 - n_lo), int(k1 - n_lo)


def _refinement(path_dt: float, dt_out: float | None, refinement: int | None) -> int:
    if refinement is None:
        if dt_out is None:
            return 1
        q = dt_out / path_dt
        refinement = round(q)
        if abs(q - refinement) > 1e-9 * q or refinement < 1:
            raise GridError(f"dt_out={dt_out} is not a multiple of path dt={path_dt}")
    elif dt_out is not None and abs(dt_out - refinement * path_dt) > 1e-9 * dt_out:
        raise GridError(f"dt_out={dt_out} != refinement {refinement} * path dt {path_dt}")
    if refinement < 1 or int(refinement) != refinement:
        raise GridError(f"refinement must be a positive integer, got {refinement!r}")
    return int(refinement)


def _aggregated_increments(path: WienerPath, t_span, refinement: int) -> np.ndarray:
    i0, i1 = _span_indices(path.n_lo, path.n_hi, path.dt, t_span, refinement)
    return np.diff(path.values[i0: i1 + 1: refinement])


def _check_stoch(p: ChemostatParams, v0) -> StochState:
    S, x = (float(c) for c in v0)
    if not (math.isfinite(S) and math.isfinite(x)) or x < 0 or not S > -p.a:
        raise ValueError(f"inadmissible initial state (S, x) = ({S}, {x}); need x >= 0, S > -a")
    return StochState(S, x)


def _em_run(p, dw, dt, s0, x0, floor):
    return _kernels.em_batch(p.S0, p.a, p.m, p.D, p.alpha, dw, dt, s0, x0, floor)


def euler_maruyama(
    p: ChemostatParams,
    path: WienerPath,
    v0,
    t_span,
    dt_out: float | None = None,
    refinement: int | None = None,
    floor: float = POLE_FLOOR,
) -> Trajectory:
    """Euler-Maruyama on the Ito system with step ``refinement * path.dt``.

    Each step uses the path increment aggregated over ``refinement`` fine
    steps. Biomass is clamped at zero after every step; the number of
    clamps is recorded in ``clamp_events``.
    """
    v0 = _check_stoch(p, v0)
    r = _refinement(path.dt, dt_out, refinement)
    dw = _aggregated_increments(path, t_span, r)
    h = r * path.dt
    out, clamps, fail = _em_run(p, dw[None, :], h, np.array([v0.S]), np.array([v0.x]), floor)
    if fail[0] >= 0:
        raise NumericalFailure(
            f"Euler-Maruyama failed at step {fail[0]} (t={t_span[0] + fail[0] * h:.6g}): "
            "pole guard or non-finite state",
            step=int(fail[0]),
        )
    n = dw.shape[0]
    return Trajectory(
        times=t_span[0] + np.arange(n + 1) * h,
        states=out[0],
        kind=STOCHASTIC,
        params=p,
        seed=path.seed,
        scheme=f"euler-maruyama dt={h!r} R={r} path_dt={path.dt!r}",
        clamp_events=int(clamps[0]),
    )


def euler_maruyama_ensemble(
    p: ChemostatParams,
    paths: Iterable[WienerPath],
    v0,
    t_span,
    dt_out: float | None = None,
    refinement: int | None = None,
    floor: float = POLE_FLOOR,
) -> list[Trajectory]:
    """Batched Euler-Maruyama over several paths sharing one grid.

    ``paths`` is consumed once, so a generator keeps only one fine path in
    memory. Members whose integration fails are returned with
    ``failed_step`` set instead of raising.
    """
    v0 = _check_stoch(p, v0)
    dws, seeds, dt, r = [], [], None, None
    for q in paths:
        if dt is None:
            dt = q.dt
            r = _refinement(dt, dt_out, refinement)
        elif q.dt != dt:
            raise GridError("ensemble paths must share dt")
        dws.append(_aggregated_increments(q, t_span, r))
        seeds.append(q.seed)
    if not dws:
        return []
    dw = np.stack(dws)
    nb = len(dws)
    h = r * dt
    out, clamps, fail = _em_run(p, dw, h, np.full(nb, v0.S), np.full(nb, v0.x), floor)
    times = t_span[0] + np.arange(dw.shape[1] + 1) * h
    scheme = f"euler-maruyama dt={h!r} R={r} path_dt={dt!r}"
    return [
        Trajectory(
            times=times,
            states=out[b],
            kind=STOCHASTIC,
            params=p,
            seed=sd,
            scheme=scheme,
            clamp_events=int(clamps[b]),
            failed_step=None if fail[b] < 0 else int(fail[b]),
        )
        for b, sd in enumerate(seeds)
    ]


def stage_values(ou: OUPath, t_span, dt: float) -> np.ndarray:
    """z* at the half-step points of an RK4 sweep over ``t_span``.

    Points on the OU grid are read directly; a stage midpoint that falls
    between two grid points (odd step ratio) takes their average.
    """
    q = dt / ou.dt
    r = round(q)
    if r < 1 or abs(q - r) > 1e-9 * q:
        raise GridError(f"RK4 step {dt} is not a multiple of the OU step {ou.dt}")
    i0, i1 = _span_indices(ou.n_lo, ou.n_hi, ou.dt, t_span, r)
    z = ou.values[i0: i1 + 1]
    nodes = z[::r]
    n = len(nodes) - 1
    zs = np.empty(2 * n + 1)
    zs[::2] = nodes
    if r % 2 == 0:
        zs[1::2] = z[r // 2:: r][:n]
    else:
        lo = z[(r - 1) // 2:: r][:n]
        hi = z[(r + 1) // 2:: r][:n]
        zs[1::2] = 0.5 * (lo + hi)
    return zs


def _check_random(p: ChemostatParams, u0, z0: float) -> RandomState:
    sigma, kappa = (float(c) for c in u0)
    if not (math.isfinite(sigma) and math.isfinite(kappa)) or kappa < 0:
        raise ValueError(f"inadmissible random state ({sigma}, {kappa}); need kappa >= 0")
    if not p.a + p.S0 + sigma * math.exp(-p.alpha * z0) > 0:
        raise ValueError(f"random state ({sigma}, {kappa}) lies beyond the pole at z*={z0}")
    return RandomState(sigma, kappa)


def rk4_random(
    p: ChemostatParams,
    ou: OUPath,
    u0,
    t_span,
    dt: float,
    floor: float = POLE_FLOOR,
) -> Trajectory:
    """Classical RK4 on the random ODE driven by ``ou``.

    When the step equals the OU grid step, the stage weights integrate z*
    with exactly the trapezoid rule on the OU grid, which is what the
    closed-form check of ``sigma + kappa`` relies on.
    """
    zs = stage_values(ou, t_span, dt)
    u0 = _check_random(p, u0, float(zs[0]))
    out, clamps, fail = _kernels.rk4_batch(
        p.S0, p.a, p.m, p.dbar, p.alpha, zs[None, :], dt,
        np.array([u0.sigma]), np.array([u0.kappa]), floor,
    )
    if fail[0] >= 0:
        raise NumericalFailure(
            f"RK4 failed at step {fail[0]} (t={t_span[0] + fail[0] * dt:.6g}): "
            "pole guard or non-finite state",
            step=int(fail[0]),
        )
    n = (len(zs) - 1) // 2
    return Trajectory(
        times=t_span[0] + np.arange(n + 1) * dt,
        states=out[0],
        kind=RANDOM,
        params=p,
        scheme=f"rk4 dt={dt!r} ou_dt={ou.dt!r} burn_in={ou.burn_in!r}",
        clamp_events=int(clamps[0]),
        z=np.array(zs[::2]),
    )


def simulate_conjugated(
    p: ChemostatParams,
    path: WienerPath,
    v0,
    t_span,
    dt: float,
    burn_in: float = DEFAULT_BURN_IN,
    ou: OUPath | None = None,
    floor: float = POLE_FLOOR,
) -> Trajectory:
    """Solve the stochastic system through the random ODE.

    Maps ``v0`` into random coordinates with z* at ``t_span[0]``, integrates
    with RK4 and maps every output point back with z* at that time. The path
    must start at least ``burn_in`` before ``t_span[0]``.
    """
    v0 = _check_stoch(p, v0)
    if ou is None:
        ou = ou_from_wiener(path, burn_in)
    z0 = ou(t_span[0])
    u = rk4_random(p, ou, transform(p, z0, v0), t_span, dt, floor=floor)
    e = np.exp(-p.alpha * u.z)
    states = np.column_stack([p.S0 + u.states[:, 0] * e, u.states[:, 1] * e])
    return Trajectory(
        times=u.times,
        states=states,
        kind=STOCHASTIC,
        params=p,
        seed=path.seed,
        scheme=f"conjugated {u.scheme} path_dt={path.dt!r}",
        clamp_events=u.clamp_events,
        z=u.z,
    )
