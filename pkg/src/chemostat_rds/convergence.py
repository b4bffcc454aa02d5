"""Refinement studies: Euler-Maruyama self-convergence and the pathwise gap
between direct Euler-Maruyama and the conjugated RK4 route."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .brownian import generate
from .integrate import euler_maruyama, simulate_conjugated
from .model import POLE_FLOOR, ChemostatParams
from .ou import DEFAULT_BURN_IN, ou_from_wiener

_CHUNK_DRAWS = 2**24

__all__ = ["ConvergenceTable", "em_strong_convergence", "conjugation_gap_study", "fitted_order"]


@dataclass
class ConvergenceTable:
    dt: np.ndarray
    strong_error: np.ndarray
    observed_order: np.ndarray  # NaN in the first row
    per_seed: np.ndarray | None = None  # (n_seeds, n_levels), when recorded

    @property
    def order(self) -> float:
        return fitted_order(self.dt, self.strong_error)

    @property
    def ratios(self) -> np.ndarray:
        return self.strong_error[:-1] / self.strong_error[1:]

    def rows(self):
        return zip(self.dt, self.strong_error, self.observed_order)


def fitted_order(dt, err) -> float:
    """Least-squares slope of log(err) against log(dt)."""
    return float(np.polyfit(np.log(dt), np.log(err), 1)[0])


def _pairwise_orders(dt, err):
    orders = np.full(len(dt), np.nan)
    orders[1:] = np.log(err[:-1] / err[1:]) / np.log(dt[:-1] / dt[1:])
    return orders


def em_strong_convergence(
    p: ChemostatParams,
    v0=(2.5, 5.0),
    T: float = 1.0,
    dts: Sequence[float] = tuple(2.0 ** -k for k in range(10, 15)),
    ref_factor: int = 64,
    n_paths: int = 256,
    seed: int = 0,
) -> ConvergenceTable:
    """Mean endpoint error ``E|X_h(T) - X_ref(T)|`` for each step ``h``.

    The reference runs on the same Brownian paths with step
    ``min(dts) / ref_factor``; coarser levels aggregate its increments.
    With the default chemostat parameters the drift error dominates for
    steps above roughly 1e-3, so the default levels start at 2**-10.
    """
    dts = np.asarray(sorted(dts, reverse=True), dtype=float)
    if len(dts) < 2:
        raise ValueError("need at least two refinement levels")
    fine = dts[-1] / ref_factor
    ratios = np.rint(dts / fine).astype(np.int64)
    if np.any(np.abs(dts / fine - ratios) > 1e-9 * ratios):
        raise ValueError("every dt must be an integer multiple of the reference step")
    n_fine = round(T / fine)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    args = (p.S0, p.a, p.m, p.D, p.alpha)
    chunk = max(1, min(n_paths, _CHUNK_DRAWS // n_fine))
    sums = np.zeros(len(dts))
    used = 0
    for start in range(0, n_paths, chunk):
        nb = min(chunk, n_paths - start)
        dw = rng.standard_normal((nb, n_fine)) * np.sqrt(fine)
        s0 = np.full(nb, float(v0[0]))
        x0 = np.full(nb, float(v0[1]))
        ref, _, fail = _kernels.em_batch(*args, dw, fine, s0, x0, POLE_FLOOR, n_fine)
        ok = fail < 0
        ends = []
        for h, r in zip(dts, ratios):
            agg = dw.reshape(nb, -1, r).sum(axis=2)
            out, _, f = _kernels.em_batch(*args, agg, h, s0, x0, POLE_FLOOR, agg.shape[1])
            ok &= f < 0
            ends.append(out[:, -1, :])
        for j, e in enumerate(ends):
            sums[j] += np.linalg.norm(e[ok] - ref[ok, -1, :], axis=1).sum()
        used += int(ok.sum())
    if used == 0:
        raise ArithmeticError("every path failed in the convergence study")
    err = sums / used
    return ConvergenceTable(dt=dts, strong_error=err, observed_order=_pairwise_orders(dts, err))


def conjugation_gap_study(
    p: ChemostatParams,
    v0=(2.5, 5.0),
    T: float = 5.0,
    dts: Sequence[float] = (1e-2, 5e-3, 2.5e-3, 1.25e-3),
    seeds: Sequence[int] = tuple(range(10)),
    path_factor: int = 64,
    burn_in: float = DEFAULT_BURN_IN,
) -> ConvergenceTable:
    """Sup-norm gap between direct EM and the conjugated RK4 solution.

    Both routes read the same Wiener path, resolved at
    ``min(dts) / path_factor``. ``strong_error`` is the seed average,
    ``per_seed`` the individual gaps.
    """
    dts = np.asarray(sorted(dts, reverse=True), dtype=float)
    if len(dts) < 2:
        raise ValueError("need at least two refinement levels")
    path_dt = dts[-1] / path_factor
    gaps = np.empty((len(seeds), len(dts)))
    for i, s in enumerate(seeds):
        path = generate(s, -burn_in, T, path_dt)
        ou = ou_from_wiener(path, burn_in)
        for j, h in enumerate(dts):
            r = round(h / path_dt)
            em = euler_maruyama(p, path, v0, (0.0, T), refinement=r)
            cj = simulate_conjugated(p, path, v0, (0.0, T), h, ou=ou)
            gaps[i, j] = np.abs(em.states - cj.states).max()
    mean = gaps.mean(axis=0)
    return ConvergenceTable(dt=dts, strong_error=mean,
                            observed_order=_pairwise_orders(dts, mean), per_seed=gaps)
