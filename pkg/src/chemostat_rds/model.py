"""Chemostat parameters, vector fields and the conjugating transform.

Two systems share the same parameters but use different effective dilution
rates: the Ito system is written with ``D``, while its Stratonovich form and
the random ODE obtained from it carry ``dbar = D + alpha**2 / 2``. Both are
exposed explicitly. Mixing the two up is exactly the sort of slip the
pathwise conjugation tests exist to catch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DomainError",
    "ChemostatParams",
    "StochState",
    "RandomState",
    "BASE_CONSTANTS",
    "mu",
    "dbar",
    "deterministic_rhs",
    "ito_fields",
    "stratonovich_fields",
    "random_rhs",
    "random_rhs_direct",
    "transform",
    "transform_inv",
    "extinction_condition",
    "POLE_FLOOR",
]

POLE_FLOOR = 1e-12


class DomainError(ValueError):
    """State outside the domain of the uptake function."""


@dataclass(frozen=True)
class ChemostatParams:
    S0: float
    a: float
    m: float
    D: float
    alpha: float = 0.0

    def __post_init__(self):
        for name in ("S0", "a", "m", "D"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be >= 0, got {self.alpha!r}")

    @property
    def dbar(self) -> float:
        return self.D + 0.5 * self.alpha**2

    def replace(self, **changes) -> "ChemostatParams":
        fields = dict(S0=self.S0, a=self.a, m=self.m, D=self.D, alpha=self.alpha)
        fields.update(changes)
        return ChemostatParams(**fields)


# Growth constants shared by every campaign.
BASE_CONSTANTS = dict(S0=1.0, a=0.6, m=3.0)


class StochState(NamedTuple):
    S: float
    x: float


class RandomState(NamedTuple):
    sigma: float
    kappa: float


def mu(p: ChemostatParams, S):
    """Holling type-II uptake ``m S / (a + S)``; rejects ``S <= -a``."""
    S_arr = np.asarray(S, dtype=float)
    if np.any(~(p.a + S_arr > 0)):
        raise DomainError(f"uptake undefined for S <= -a (a={p.a})")
    out = p.m * S_arr / (p.a + S_arr)
    return float(out) if out.ndim == 0 else out


def dbar(p: ChemostatParams) -> float:
    return p.dbar


def deterministic_rhs(p: ChemostatParams, v) -> np.ndarray:
    """Noise-free chemostat vector field."""
    S, x = v
    u = mu(p, S)
    return np.array([(p.S0 - S) * p.D - u * x, x * (u - p.D)])


def ito_fields(p: ChemostatParams, v) -> tuple[np.ndarray, np.ndarray]:
    """Drift and diffusion of the Ito system (dilution rate ``D``).

    The biomass diffusion is ``-alpha x``, the sign carried by the SDE. A
    positive sign would describe the same law but a different pathwise
    solution for a given Brownian path.
    """
    S, x = v
    drift = deterministic_rhs(p, v)
    diffusion = np.array([p.alpha * (p.S0 - S), -p.alpha * x])
    return drift, diffusion


def stratonovich_fields(p: ChemostatParams, v) -> tuple[np.ndarray, np.ndarray]:
    """Drift and diffusion of the equivalent Stratonovich system (``dbar``)."""
    S, x = v
    u = mu(p, S)
    db = p.dbar
    drift = np.array([(p.S0 - S) * db - u * x, -db * x + u * x])
    diffusion = np.array([p.alpha * (p.S0 - S), -p.alpha * x])
    return drift, diffusion


def _pole_distance(p, sigma, z):
    return p.a + p.S0 + sigma * math.exp(-p.alpha * z)


def random_rhs(p: ChemostatParams, u, z: float, floor: float = POLE_FLOOR) -> np.ndarray:
    """Right-hand side of the random ODE in ``(sigma, kappa)``.

    Evaluated in the split form ``m kappa - m a kappa / den`` with
    ``den = a + S0 + sigma e^{-alpha z}``; raises DomainError if ``den``
    is not above ``floor``.
    """
    sigma, kappa = u
    den = _pole_distance(p, sigma, z)
    if not den > floor:
        raise DomainError(f"pole guard: a + S0 + sigma*exp(-alpha z) = {den!r}")
    g = -(p.dbar + p.alpha * z)
    w = p.m * p.a * kappa / den
    return np.array([g * sigma - p.m * kappa + w, g * kappa + p.m * kappa - w])


def random_rhs_direct(p: ChemostatParams, u, z: float) -> np.ndarray:
    """Same field written with the uptake evaluated at ``S0 + sigma e^{-alpha z}``."""
    sigma, kappa = u
    e = math.exp(-p.alpha * z)
    if not _pole_distance(p, sigma, z) > 0:
        raise DomainError("pole guard")
    g = -(p.dbar + p.alpha * z)
    up = p.m * (p.S0 + sigma * e) / (p.a + p.S0 + sigma * e)
    return np.array([g * sigma - up * kappa, g * kappa + up * kappa])


def transform(p: ChemostatParams, z: float, v) -> RandomState:
    """``(S, x) -> ((S - S0) e^{alpha z}, x e^{alpha z})``."""
    S, x = v
    e = math.exp(p.alpha * z)
    return RandomState((S - p.S0) * e, x * e)


def transform_inv(p: ChemostatParams, z: float, u) -> StochState:
    sigma, kappa = u
    e = math.exp(-p.alpha * z)
    return StochState(p.S0 + sigma * e, kappa * e)


@dataclass(frozen=True)
class ExtinctionCondition:
    holds: bool
    dbar: float
    mu_s0: float


def extinction_condition(p: ChemostatParams) -> ExtinctionCondition:
    """Sufficient condition for wash-out: ``dbar > mu(S0)``."""
    db = p.dbar
    ms = mu(p, p.S0)
    return ExtinctionCondition(holds=db > ms, dbar=db, mu_s0=ms)
