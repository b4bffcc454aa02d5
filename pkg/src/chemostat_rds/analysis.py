"""Diagnostics for the random chemostat: the closed form for sigma + kappa,
absorbing-set membership, pullback experiments and extinction/persistence
classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .brownian import generate
from .integrate import RANDOM, STOCHASTIC, Trajectory, rk4_random
from .model import ChemostatParams, RandomState, extinction_condition, transform_inv
from .ou import DEFAULT_BURN_IN, OUPath, ou_from_wiener

__all__ = [
    "q_closed_form",
    "AbsorbingSpec",
    "in_absorbing_set",
    "absorption_time",
    "PullbackResult",
    "pullback_experiment",
    "distance_to_b0",
    "distance_to_washout_line",
    "Verdict",
    "ClassificationReport",
    "classify",
    "check_invariants",
    "washout_geometry",
]


def q_closed_form(p: ChemostatParams, ou: OUPath, Q0: float, t: float, t0: float = 0.0) -> float:
    """``Q0 exp(-dbar (t - t0) - alpha * int_{t0}^{t} z*)`` with the trapezoid rule."""
    if Q0 == 0:
        return 0.0
    return Q0 * math.exp(-p.dbar * (t - t0) - p.alpha * ou.integral(t0, t))


@dataclass(frozen=True)
class AbsorbingSpec:
    """Parameters of the absorbing set ``B_eps`` at one fiber.

    ``z_at_fiber`` is z* at the fiber. When it is None, trajectory scans
    use the trajectory's own z* at each output time.
    """

    epsilon: float
    params: ChemostatParams
    z_at_fiber: float | None = None

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")


def _sigma_floor(p: ChemostatParams, z):
    return -(p.a + p.S0) * np.exp(p.alpha * np.asarray(z, dtype=float))


def in_absorbing_set(u, spec: AbsorbingSpec, z: float | None = None) -> bool:
    """Membership in ``{|sigma + kappa| <= eps, sigma >= -(a+S0) e^{alpha z} - eps}``."""
    if z is None:
        z = spec.z_at_fiber
    if z is None:
        raise ValueError("no fiber value z* given")
    sigma, kappa = u
    eps = spec.epsilon
    q = sigma + kappa
    return bool(-eps <= q <= eps and sigma >= float(_sigma_floor(spec.params, z)) - eps)


def _membership(states: np.ndarray, spec: AbsorbingSpec, z) -> np.ndarray:
    q = states[:, 0] + states[:, 1]
    eps = spec.epsilon
    floor = _sigma_floor(spec.params, z) - eps
    return (q >= -eps) & (q <= eps) & (states[:, 0] >= floor)


def absorption_time(traj: Trajectory, spec: AbsorbingSpec) -> float | None:
    """First output time from which every later point stays in the set."""
    if traj.kind != RANDOM:
        raise ValueError(f"absorption_time needs a random-kind trajectory, got {traj.kind!r}")
    if spec.z_at_fiber is not None:
        z = spec.z_at_fiber
    elif traj.z is not None:
        z = traj.z
    else:
        raise ValueError("trajectory carries no z* values and spec has no fiber value")
    inside = _membership(traj.states, spec, z)
    if not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    k = 0 if len(outside) == 0 else int(outside[-1]) + 1
    return float(traj.times[k])


@dataclass
class PullbackResult:
    u0: RandomState
    pullback_times: list[float]
    states_at_zero: list[RandomState]
    distances_to_washout: list[float]
    z_at_zero: float = 0.0

    def as_rows(self) -> list[dict]:
        return [
            dict(sigma0=self.u0.sigma, kappa0=self.u0.kappa, t=t, sigma=s.sigma,
                 kappa=s.kappa, distance=d)
            for t, s, d in zip(self.pullback_times, self.states_at_zero, self.distances_to_washout)
        ]


def pullback_experiment(
    p: ChemostatParams,
    seed: int,
    u0_set: Sequence,
    t_list: Sequence[float],
    dt: float,
    burn_in: float = DEFAULT_BURN_IN,
    path_dt: float | None = None,
) -> list[PullbackResult]:
    """Integrate from ``-t`` to 0 on one fixed realization for each ``t``.

    The noise window is ``[-max(t_list) - burn_in, 0]``; every pullback
    time shares the same path, so the results sample ``phi(t, theta_{-t} w) u0``
    at a single fiber.
    """
    t_list = [float(t) for t in t_list]
    if not t_list or any(t <= 0 for t in t_list) or any(b <= a for a, b in zip(t_list, t_list[1:])):
        raise ValueError(f"t_list must be positive and strictly increasing, got {t_list!r}")
    path_dt = dt if path_dt is None else path_dt
    path = generate(seed, -(t_list[-1] + burn_in), 0.0, path_dt)
    ou = ou_from_wiener(path, burn_in)
    results = []
    for u0 in u0_set:
        u0 = RandomState(*(float(c) for c in u0))
        states, dists = [], []
        for t in t_list:
            tr = rk4_random(p, ou, u0, (-t, 0.0), dt)
            end = RandomState(*tr.states[-1])
            states.append(end)
            dists.append(float(math.hypot(end.sigma, end.kappa)))
        results.append(PullbackResult(u0, list(t_list), states, dists, z_at_zero=ou(0.0)))
    return results


def distance_to_b0(p: ChemostatParams, u, z: float) -> float:
    """Euclidean distance from ``u`` to the segment ``{sigma + kappa = 0, sigma >= -(a+S0)e^{alpha z}, kappa >= 0}``."""
    sigma, kappa = u
    lo = float(_sigma_floor(p, z))
    # segment from (lo, -lo) to (0, 0), parametrised by sigma in [lo, 0]
    s_proj = min(max(0.5 * (sigma - kappa), lo), 0.0)
    return math.hypot(sigma - s_proj, kappa + s_proj)


def distance_to_washout_line(p: ChemostatParams, v) -> float:
    """Distance from ``(S, x)`` to ``{S + x = S0, S >= -a, x >= 0}``."""
    S, x = v
    s_proj = min(max(0.5 * (S - x + p.S0), -p.a), p.S0)
    return math.hypot(S - s_proj, x - (p.S0 - s_proj))


class Verdict(str, enum.Enum):
    EXTINCTION = "Extinction"
    PERSISTENCE = "Persistence"
    UNDETERMINED = "Undetermined"


@dataclass
class ClassificationReport:
    verdict: Verdict
    dbar: float
    mu_s0: float
    condition_ce: bool
    terminal_biomass: float
    min_late_biomass: float
    params: ChemostatParams | None = None
    seed: int | None = None
    clamp_events: int = 0
    failure: str = ""
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        p = self.params
        d = dict(
            seed=self.seed,
            S0=p.S0 if p else None, a=p.a if p else None, m=p.m if p else None,
            D=p.D if p else None, alpha=p.alpha if p else None,
            dbar=self.dbar, mu_s0=self.mu_s0, condition_ce=self.condition_ce,
            verdict=self.verdict.value, terminal_biomass=self.terminal_biomass,
            min_late_biomass=self.min_late_biomass, clamp_events=self.clamp_events,
            failure=self.failure,
        )
        d.update(self.extra)
        return d

    def to_text(self) -> str:
        return "\n".join(f"{k} = {_fmt(v)}" for k, v in self.as_dict().items())

    def csv_row(self) -> list[str]:
        return [_fmt(v) for v in self.as_dict().values()]

    def csv_header(self) -> list[str]:
        return list(self.as_dict().keys())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def classify(
    p: ChemostatParams,
    traj: Trajectory,
    ext_tol: float = 1e-3,
    persist_floor: float = 0.05,
    late_window: float | None = None,
) -> ClassificationReport:
    """Extinction if ``x(T) < ext_tol``; Persistence if ``min x`` over the
    trailing ``late_window`` (default: second half of the horizon) exceeds
    ``persist_floor``; otherwise Undetermined. Failed runs are Undetermined."""
    if traj.kind != STOCHASTIC:
        raise ValueError("classify needs a stochastic-kind trajectory")
    ce = extinction_condition(p)
    horizon = float(traj.times[-1] - traj.times[0])
    if late_window is None:
        late_window = 0.5 * horizon
    if not 0 < late_window <= horizon + 1e-12:
        raise ValueError(f"late_window={late_window} exceeds trajectory horizon {horizon}")
    mask = traj.times >= traj.times[-1] - late_window - 1e-9 * max(1.0, horizon)
    x = traj.states[:, 1]
    common = dict(dbar=ce.dbar, mu_s0=ce.mu_s0, condition_ce=ce.holds, params=p,
                  seed=traj.seed, clamp_events=traj.clamp_events)
    if traj.failed_step is not None:
        return ClassificationReport(
            verdict=Verdict.UNDETERMINED, terminal_biomass=math.nan,
            min_late_biomass=math.nan, failure=f"numerical failure at step {traj.failed_step}",
            **common,
        )
    terminal = float(x[-1])
    late_min = float(x[mask].min())
    if terminal < ext_tol:
        verdict = Verdict.EXTINCTION
    elif late_min > persist_floor:
        verdict = Verdict.PERSISTENCE
    else:
        verdict = Verdict.UNDETERMINED
    return ClassificationReport(verdict=verdict, terminal_biomass=terminal,
                                min_late_biomass=late_min, **common)


def check_invariants(traj: Trajectory) -> list[str]:
    """Positivity and pole-side checks; returns a list of violations."""
    bad = []
    st = traj.states
    if traj.failed_step is not None:
        st = st[: traj.failed_step]
    if not np.all(np.diff(traj.times) > 0):
        bad.append("times not strictly increasing")
    if np.any(st[:, 1] < 0):
        bad.append("negative biomass" if traj.kind == STOCHASTIC else "negative kappa")
    p = traj.params
    if traj.kind == STOCHASTIC:
        if np.any(~(st[:, 0] > -p.a)):
            bad.append("S <= -a")
    elif traj.z is not None:
        z = traj.z[: len(st)]
        if np.any(~(st[:, 0] > _sigma_floor(p, z))):
            bad.append("sigma <= -(a+S0) e^{alpha z}")
    return bad


def washout_geometry(p: ChemostatParams, result: PullbackResult) -> list[float]:
    """Distances of the pullback end states, mapped to ``(S, x)``, to the washout line."""
    return [distance_to_washout_line(p, transform_inv(p, result.z_at_zero, s))
            for s in result.states_at_zero]

