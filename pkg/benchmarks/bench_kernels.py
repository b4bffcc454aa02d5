"""Time the numba and numpy kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--members 100] [--steps 10000] [--repeat 3]

Both variants are imported by name, so the CHEMOSTAT_RDS_NUMBA flag does
not matter here. The first numba call (compilation or cache load) is done
before timing.
"""

import argparse
import time

import numpy as np

from chemostat_rds import _kernels as K


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--members", type=int, default=100)
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if K.numba is None:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    nb, n, dt = args.members, args.steps, 1e-2
    dw = rng.standard_normal((nb, n)) * np.sqrt(dt)
    s0, x0 = np.full(nb, 2.5), np.full(nb, 5.0)
    zs = np.cumsum(rng.standard_normal((nb, 2 * n + 1)) * np.sqrt(dt / 2), axis=1) * 0.1
    inc = dw[0].copy()
    sig0, kap0 = np.full(nb, 1.5), np.full(nb, 5.0)

    cases = {
        "ou": (lambda f: f(inc, dt, 0.0), K.ou_numpy, K.ou_numba),
        "euler_maruyama": (lambda f: f(1.0, 0.6, 3.0, 3.0, 0.5, dw, dt, s0, x0, 1e-12),
                           K.em_numpy, K.em_numba),
        "rk4_random": (lambda f: f(1.0, 0.6, 3.0, 3.125, 0.5, zs, dt, sig0, kap0, 1e-12),
                       K.rk4_numpy, K.rk4_numba),
    }
    print(f"members={nb} steps={n} repeat={args.repeat}")
    print(f"{'kernel':<16}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}  max|diff|")
    for name, (call, f_np, f_nb) in cases.items():
        call(f_nb)  # warm up
        t_np, out_np = best_of(lambda: call(f_np), args.repeat)
        t_nb, out_nb = best_of(lambda: call(f_nb), args.repeat)
        a = out_np[0] if isinstance(out_np, tuple) else out_np
        b = out_nb[0] if isinstance(out_nb, tuple) else out_nb
        diff = float(np.nanmax(np.abs(a - b)))
        print(f"{name:<16}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}  {diff:.1e}")


if __name__ == "__main__":
    main()
