"""Ensemble runs and the five phase-plane campaigns.

Every campaign uses ``S0 = 1, a = 0.6, m = 3`` and starts from
``(S, x) = (2.5, 5)``. The two ``high_d`` campaigns run at ``D = 3`` and
again at ``D = 1.5``; each run is tagged with a ``reading`` label such as
``D3`` so both appear side by side in the reports.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import ClassificationReport, Verdict, classify
from .brownian import generate
from .integrate import Trajectory, euler_maruyama_ensemble
from .model import BASE_CONSTANTS, ChemostatParams
from .svg import PhasePlot

__all__ = ["Campaign", "CAMPAIGNS", "DEFAULT_INITIAL", "run_ensemble", "classify_ensemble",
           "deterministic_trajectory", "run_figures"]

DEFAULT_INITIAL = (2.5, 5.0)


@dataclass(frozen=True)
class Campaign:
    key: str
    D: float
    alphas: tuple[float, float]
    expected: Verdict
    alt_D: float | None = None

    def readings(self) -> list[tuple[str, float]]:
        Ds = [self.D] if self.alt_D is None else [self.D, self.alt_D]
        return [(f"D{d:g}", d) for d in Ds]

    def params(self, alpha: float, D: float | None = None) -> ChemostatParams:
        return ChemostatParams(D=self.D if D is None else D, alpha=alpha, **BASE_CONSTANTS)


CAMPAIGNS = {
    c.key: c
    for c in (
        Campaign("high_d_low_noise", 3.0, (0.1, 0.5), Verdict.EXTINCTION, alt_D=1.5),
        Campaign("high_d_high_noise", 3.0, (1.0, 1.5), Verdict.EXTINCTION, alt_D=1.5),
        Campaign("mid_d_low_noise", 1.5, (0.1, 0.5), Verdict.PERSISTENCE),
        Campaign("mid_d_high_noise", 1.5, (1.0, 1.5), Verdict.EXTINCTION),
        Campaign("low_d_low_noise", 0.8, (0.1, 0.5), Verdict.PERSISTENCE),
    )
}


def _run_chunk(args):
    p, seeds, v0, horizon, dt, path_dt = args
    r = round(dt / path_dt)
    paths = (generate(s, 0.0, horizon, path_dt) for s in seeds)
    return euler_maruyama_ensemble(p, paths, v0, (0.0, horizon), refinement=r)


def run_ensemble(
    p: ChemostatParams,
    seeds: Sequence[int],
    v0=DEFAULT_INITIAL,
    horizon: float = 100.0,
    dt: float = 1e-2,
    path_dt: float = 1e-4,
    workers: int = 1,
) -> list[Trajectory]:
    """Euler-Maruyama trajectories for each seed, returned in seed order."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seed list is empty")
    q = dt / path_dt
    if abs(q - round(q)) > 1e-9 * q or round(q) < 1:
        raise ValueError(f"dt={dt} must be a positive multiple of path_dt={path_dt}")
    if workers <= 1 or len(seeds) == 1:
        return _run_chunk((p, seeds, v0, horizon, dt, path_dt))
    chunks = [c.tolist() for c in np.array_split(np.array(seeds), min(workers, len(seeds))) if len(c)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [(p, c, v0, horizon, dt, path_dt) for c in chunks])
        return [t for part in parts for t in part]


def classify_ensemble(p: ChemostatParams, trajs: Sequence[Trajectory], **thresholds) -> list[ClassificationReport]:
    return [classify(p, t, **thresholds) for t in trajs]


def deterministic_trajectory(p: ChemostatParams, v0=DEFAULT_INITIAL, horizon: float = 100.0,
                             dt: float = 1e-2) -> Trajectory:
    """Noise-free Euler solution with the same step, for the dashed overlay."""
    from .brownian import WienerPath

    n = round(horizon / dt)
    flat = WienerPath(dt=dt, seed=None, root=np.zeros(n + 1), root_n_lo=0)
    return euler_maruyama_ensemble(p.replace(alpha=0.0), [flat], v0, (0.0, horizon))[0]


def run_figures(
    out_dir: str | Path,
    keys: Sequence[str] | None = None,
    seeds: Sequence[int] = tuple(range(10)),
    v0=DEFAULT_INITIAL,
    horizon: float = 100.0,
    dt: float = 1e-2,
    path_dt: float = 1e-4,
    workers: int = 1,
    plot_members: int = 5,
    thresholds: dict | None = None,
) -> list[Path]:
    """Run the named campaigns and write CSVs, SVGs and a report per campaign.

    Layout under ``out_dir/<key>/``: ``<reading>/alpha_<a>/seed_<n>.csv``,
    ``<reading>/deterministic.csv``, ``<key>_<reading>_alpha_<a>.svg`` and
    ``report.csv`` (one row per seed, reading and alpha).
    """
    keys = list(CAMPAIGNS) if keys is None else list(keys)
    unknown = [k for k in keys if k not in CAMPAIGNS]
    if unknown:
        raise ValueError(f"unknown campaign key(s) {unknown}; choose from {sorted(CAMPAIGNS)}")
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seed list is empty")
    thresholds = thresholds or {}
    out_dir = Path(out_dir)
    written: list[Path] = []
    for key in keys:
        camp = CAMPAIGNS[key]
        cdir = out_dir / key
        cdir.mkdir(parents=True, exist_ok=True)
        header, rows = None, []
        for reading, D in camp.readings():
            rdir = cdir / reading
            rdir.mkdir(exist_ok=True)
            det = deterministic_trajectory(camp.params(0.0, D), v0, horizon, dt)
            det.to_csv(rdir / "deterministic.csv")
            written.append(rdir / "deterministic.csv")
            for alpha in camp.alphas:
                p = camp.params(alpha, D)
                adir = rdir / f"alpha_{alpha:g}"
                adir.mkdir(exist_ok=True)
                trajs = run_ensemble(p, seeds, v0, horizon, dt, path_dt, workers)
                plot = PhasePlot(title=f"{key} {reading}: D={D:g}, alpha={alpha:g}, dbar={p.dbar:.4f}")
                for i, (s, tr) in enumerate(zip(seeds, trajs)):
                    path = adir / f"seed_{s:04d}.csv"
                    tr.to_csv(path)
                    written.append(path)
                    if i < plot_members:
                        plot.add(tr.first, tr.second, label=f"seed {s}")
                    rep = classify(p, tr, **thresholds)
                    header = ["campaign", "reading", *rep.csv_header()]
                    rows.append([key, reading, *rep.csv_row()])
                plot.add(det.first, det.second, label="deterministic", color="#1f77b4",
                         dashed=True, width=2.0)
                svg = cdir / f"{key}_{reading}_alpha_{alpha:g}.svg"
                plot.save(svg)
                written.append(svg)
        report = cdir / "report.csv"
        with open(report, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        written.append(report)
    return written
