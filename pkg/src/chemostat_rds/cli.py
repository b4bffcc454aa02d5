"""Command-line front end.

Subcommands: ``check``, ``simulate``, ``ensemble``, ``pullback``,
``convergence`` and ``figures``. Run ``chemostat-rds <cmd> --help`` for the
flags of each.

Parameters can come from a flat ``key = value`` file given with
``--config``; command-line flags override it. Recognised keys::

    s0, a, m, d, alpha          model constants
    s_init, x_init              initial state (S, x)
    horizon, dt, path_dt        time horizon, integrator step, Wiener grid step
    seeds                       "0-99" or "0,4,7"
    workers                     processes for ensembles
    burn_in                     OU warm-up length
    ext_tol, persist_floor, late_window   classification thresholds
    output_dir

The output directory is taken from ``--output-dir``, then the config file,
then ``$CHEMOSTAT_RDS_OUTPUT_DIR``, then the current directory.

Exit codes: 0 success, 2 invalid input, 3 numerical failure (pole guard or
non-finite state).
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import Verdict, classify, pullback_experiment, washout_geometry
from .campaigns import CAMPAIGNS, run_ensemble, run_figures
from .convergence import conjugation_gap_study, em_strong_convergence
from .brownian import generate
from .integrate import NumericalFailure, euler_maruyama, simulate_conjugated
from .model import BASE_CONSTANTS, ChemostatParams, extinction_condition
from .ou import DEFAULT_BURN_IN

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
OUTPUT_ENV = "CHEMOSTAT_RDS_OUTPUT_DIR"

_FLOAT_KEYS = {"s0", "a", "m", "d", "alpha", "s_init", "x_init", "horizon", "dt", "path_dt",
               "burn_in", "ext_tol", "persist_floor", "late_window"}
_INT_KEYS = {"workers"}
_STR_KEYS = {"seeds", "output_dir"}
CONFIG_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS

_DEFAULTS = dict(
    s0=BASE_CONSTANTS["S0"], a=BASE_CONSTANTS["a"], m=BASE_CONSTANTS["m"], alpha=0.0,
    s_init=2.5, x_init=5.0, horizon=100.0, dt=1e-2, path_dt=1e-4, workers=1,
    burn_in=DEFAULT_BURN_IN, ext_tol=1e-3, persist_floor=0.05,
)


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {no}: expected key = value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"config line {no}: unknown key {key!r}")
        try:
            if key in _FLOAT_KEYS:
                out[key] = float(val)
            elif key in _INT_KEYS:
                out[key] = int(val)
            else:
                out[key] = val
        except ValueError:
            raise ConfigError(f"config line {no}: bad value {val!r} for {key}") from None
    return out


def parse_seeds(spec) -> list[int]:
    if isinstance(spec, (list, tuple, range)):
        seeds = [int(s) for s in spec]
    else:
        seeds = []
        for tok in str(spec).replace(" ", "").split(","):
            if not tok:
                continue
            if "-" in tok[1:]:
                lo, hi = tok.split("-", 1)
                lo, hi = int(lo), int(hi)
                if hi < lo:
                    raise ConfigError(f"bad seed range {tok!r}")
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(tok))
    if not seeds:
        raise ConfigError("seed list is empty")
    if any(s < 0 for s in seeds):
        raise ConfigError("seeds must be non-negative")
    return seeds


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _pairs(text: str) -> list[tuple[float, float]]:
    out = []
    for chunk in text.split(";"):
        if chunk.strip():
            vals = _floats(chunk)
            if len(vals) != 2:
                raise ConfigError(f"expected 'sigma,kappa', got {chunk!r}")
            out.append((vals[0], vals[1]))
    if not out:
        raise ConfigError("no initial conditions given")
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win)."""
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg.update(parse_config(text))
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg.get("output_dir") is None:
        cfg["output_dir"] = os.environ.get(OUTPUT_ENV) or "."
    for key in ("horizon", "dt", "path_dt"):
        if not cfg[key] > 0:
            raise ConfigError(f"{key} must be positive, got {cfg[key]}")
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    return cfg


def _params(cfg: dict) -> ChemostatParams:
    if cfg.get("d") is None:
        raise ConfigError("dilution rate not set (use --d or 'd = ...' in the config)")
    return ChemostatParams(S0=cfg["s0"], a=cfg["a"], m=cfg["m"], D=cfg["d"], alpha=cfg["alpha"])


def _outdir(cfg: dict) -> Path:
    out = Path(cfg["output_dir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _thresholds(cfg: dict) -> dict:
    return dict(ext_tol=cfg["ext_tol"], persist_floor=cfg["persist_floor"],
                late_window=cfg.get("late_window"))


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ------------------------------------------------------------------ commands


def cmd_check(args, cfg) -> int:
    p = _params(cfg)
    ce = extinction_condition(p)
    print(f"dbar = {ce.dbar!r}")
    print(f"mu_s0 = {ce.mu_s0!r}")
    print(f"condition_ce = {'true' if ce.holds else 'false'}")
    return EXIT_OK


def cmd_simulate(args, cfg) -> int:
    p = _params(cfg)
    seed = parse_seeds(cfg.get("seeds", "0"))[0]
    v0 = (cfg["s_init"], cfg["x_init"])
    T, dt = cfg["horizon"], cfg["dt"]
    out = _outdir(cfg)
    if args.method == "em":
        path = generate(seed, 0.0, T, cfg["path_dt"])
        traj = euler_maruyama(p, path, v0, (0.0, T), dt_out=dt)
    else:
        burn = cfg["burn_in"]
        path = generate(seed, -burn, T, cfg["path_dt"])
        traj = simulate_conjugated(p, path, v0, (0.0, T), dt, burn_in=burn)
    target = out / f"trajectory_{args.method}_seed{seed:04d}.csv"
    traj.to_csv(target)
    rep = classify(p, traj, **_thresholds(cfg))
    print(rep.to_text())
    print(f"wrote {target}")
    return EXIT_OK


def cmd_ensemble(args, cfg) -> int:
    p = _params(cfg)
    seeds = parse_seeds(cfg.get("seeds", "0-99"))
    out = _outdir(cfg)
    trajs = run_ensemble(p, seeds, (cfg["s_init"], cfg["x_init"]), cfg["horizon"], cfg["dt"],
                         cfg["path_dt"], cfg["workers"])
    reports = []
    for s, tr in zip(seeds, trajs):
        if not args.no_trajectories:
            tr.to_csv(out / f"seed_{s:04d}.csv")
        reports.append(classify(p, tr, **_thresholds(cfg)))
    _write_rows(out / "report.csv", reports[0].csv_header(), [r.csv_row() for r in reports])
    counts = {v.value: sum(r.verdict == v for r in reports) for v in Verdict}
    print(f"dbar = {p.dbar!r} mu_s0 = {reports[0].mu_s0!r} condition_ce = "
          f"{'true' if reports[0].condition_ce else 'false'}")
    print(" ".join(f"{k}={n}" for k, n in counts.items()))
    print(f"wrote {out / 'report.csv'}")
    failures = sum(tr.failed_step is not None for tr in trajs)
    if failures:
        print(f"{failures} member(s) hit a numerical failure", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_pullback(args, cfg) -> int:
    p = _params(cfg)
    seeds = parse_seeds(cfg.get("seeds", "0-4"))
    t_list = _floats(args.t_list)
    u0_set = _pairs(args.u0)
    out = _outdir(cfg)
    rows = []
    for s in seeds:
        for res in pullback_experiment(p, s, u0_set, t_list, cfg["dt"], burn_in=cfg["burn_in"]):
            geo = washout_geometry(p, res)
            for row, g in zip(res.as_rows(), geo):
                rows.append([s, *(repr(float(v)) for v in row.values()), repr(g)])
    header = ["seed", "sigma0", "kappa0", "t", "sigma", "kappa", "distance", "washout_line_distance"]
    _write_rows(out / "pullback.csv", header, rows)
    print(f"wrote {out / 'pullback.csv'} ({len(rows)} rows)")
    return EXIT_OK


def cmd_convergence(args, cfg) -> int:
    p = _params(cfg)
    levels = _floats(args.levels) if args.levels else None
    conj_levels = _floats(args.conj_levels) if args.conj_levels else None
    for lv in (levels, conj_levels):
        if lv is not None and len(lv) < 2:
            raise ConfigError("need at least two refinement levels")
    out = _outdir(cfg)
    v0 = (cfg["s_init"], cfg["x_init"])
    kw = {} if levels is None else {"dts": levels}
    em = em_strong_convergence(p, v0, T=args.em_horizon, n_paths=args.n_paths,
                               seed=parse_seeds(cfg.get("seeds", "0"))[0], **kw)
    _write_rows(out / "convergence_em.csv", ["dt", "strong_error", "observed_order"],
                [[repr(float(v)) for v in r] for r in em.rows()])
    print(f"em fitted order = {em.order:.4f}")
    if not args.skip_conjugation:
        kw = {} if conj_levels is None else {"dts": conj_levels}
        cj = conjugation_gap_study(p, v0, T=args.conj_horizon,
                                   seeds=parse_seeds(args.conj_seeds), burn_in=cfg["burn_in"], **kw)
        _write_rows(out / "convergence_conjugation.csv", ["dt", "strong_error", "observed_order"],
                    [[repr(float(v)) for v in r] for r in cj.rows()])
        print("conjugation gap ratios = " + ", ".join(f"{r:.3f}" for r in cj.ratios))
    print(f"wrote convergence tables to {out}")
    return EXIT_OK


def cmd_figures(args, cfg) -> int:
    keys = args.campaign or list(CAMPAIGNS)
    bad = [k for k in keys if k not in CAMPAIGNS]
    if bad:
        raise ConfigError(f"unknown campaign {bad}; choose from {', '.join(CAMPAIGNS)}")
    seeds = parse_seeds(cfg.get("seeds", "0-9"))
    out = _outdir(cfg)
    files = run_figures(out, keys, seeds, (cfg["s_init"], cfg["x_init"]), cfg["horizon"],
                        cfg["dt"], cfg["path_dt"], cfg["workers"], thresholds=_thresholds(cfg))
    print(f"wrote {len(files)} files under {out}")
    return EXIT_OK


# ------------------------------------------------------------------- parser


def _common(sp: argparse.ArgumentParser, model=True, run=True) -> None:
    sp.add_argument("--config", help="flat key = value parameter file")
    sp.add_argument("--output-dir", dest="output_dir")
    if model:
        g = sp.add_argument_group("model")
        g.add_argument("--s0", type=float)
        g.add_argument("--a", type=float)
        g.add_argument("--m", type=float)
        g.add_argument("--d", type=float, help="dilution rate D")
        g.add_argument("--alpha", type=float, help="noise intensity")
    if run:
        g = sp.add_argument_group("run")
        g.add_argument("--s-init", dest="s_init", type=float)
        g.add_argument("--x-init", dest="x_init", type=float)
        g.add_argument("--horizon", type=float)
        g.add_argument("--dt", type=float)
        g.add_argument("--path-dt", dest="path_dt", type=float, help="Wiener grid step")
        g.add_argument("--seeds", help="e.g. 0-99 or 0,3,5")
        g.add_argument("--workers", type=int)
        g.add_argument("--burn-in", dest="burn_in", type=float)
        g.add_argument("--ext-tol", dest="ext_tol", type=float)
        g.add_argument("--persist-floor", dest="persist_floor", type=float)
        g.add_argument("--late-window", dest="late_window", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chemostat-rds", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check", help="print dbar, mu(S0) and the extinction condition")
    _common(sp, run=False)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("simulate", help="one trajectory to CSV")
    _common(sp)
    sp.add_argument("--method", choices=("em", "conjugated"), default="em")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("ensemble", help="seeded Euler-Maruyama ensemble with classification")
    _common(sp)
    sp.add_argument("--no-trajectories", action="store_true", help="only write report.csv")
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser("pullback", help="pullback runs on the random ODE")
    _common(sp)
    sp.add_argument("--t-list", default="5,10,20,40")
    sp.add_argument("--u0", default="1.5,5;0,0.5;0.5,2;3,1", help="'sigma,kappa;sigma,kappa;...'")
    sp.set_defaults(func=cmd_pullback)

    sp = sub.add_parser("convergence", help="EM self-convergence and conjugation gap tables")
    _common(sp)
    sp.add_argument("--levels", help="comma-separated EM steps")
    sp.add_argument("--n-paths", dest="n_paths", type=int, default=256)
    sp.add_argument("--em-horizon", dest="em_horizon", type=float, default=1.0)
    sp.add_argument("--conj-levels", dest="conj_levels", help="comma-separated steps for the gap study")
    sp.add_argument("--conj-horizon", dest="conj_horizon", type=float, default=5.0)
    sp.add_argument("--conj-seeds", dest="conj_seeds", default="0-9")
    sp.add_argument("--skip-conjugation", action="store_true")
    sp.set_defaults(func=cmd_convergence)

    sp = sub.add_parser("figures", help="phase-plane campaigns: CSVs, SVGs, reports")
    _common(sp, model=False)
    sp.add_argument("--campaign", action="append", choices=sorted(CAMPAIGNS),
                    help="repeatable; default all")
    sp.set_defaults(func=cmd_figures)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return args.func(args, cfg)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
