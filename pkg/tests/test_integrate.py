import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from chemostat_rds import BASE_CONSTANTS, ChemostatParams
from chemostat_rds.brownian import GridError, WienerPath, generate
from chemostat_rds.integrate import (
    NumericalFailure,
    euler_maruyama,
    euler_maruyama_ensemble,
    read_trajectory_csv,
    rk4_random,
    simulate_conjugated,
    stage_values,
)
from chemostat_rds.model import deterministic_rhs, random_rhs_direct
from chemostat_rds.ou import ou_from_wiener


def _em_loop(p, dw, h, v0):
    # longhand Euler-Maruyama, the oracle for the batched kernels
    S, x = v0
    out = [(S, x)]
    for w in dw:
        u = p.m * S / (p.a + S)
        S, x = (S + ((p.S0 - S) * p.D - u * x) * h + p.alpha * (p.S0 - S) * w,
                max(0.0, x + x * (u - p.D) * h - p.alpha * x * w))
        out.append((S, x))
    return np.array(out)


def test_em_matches_loop(params):
    path = generate(3, 0, 2, 1e-3)
    tr = euler_maruyama(params, path, (2.5, 5.0), (0.0, 2.0), dt_out=1e-2)
    dw = np.diff(path.values[::10])
    np.testing.assert_allclose(tr.states, _em_loop(params, dw, 1e-2, (2.5, 5.0)), rtol=1e-12, atol=1e-14)
    assert tr.times[-1] == pytest.approx(2.0)
    assert tr.seed == 3


def test_em_on_negative_window(params):
    path = generate(1, -3, 1, 1e-2)
    tr = euler_maruyama(params, path, (2.5, 5.0), (-2.0, 0.0))
    i0 = path.index_of(-2.0)
    dw = path.increments[i0: i0 + 200]
    np.testing.assert_allclose(tr.states, _em_loop(params, dw, 1e-2, (2.5, 5.0)), rtol=1e-12)


def _ode_reference(p, v0, T, n_out):
    sol = solve_ivp(lambda t, v: deterministic_rhs(p, v), (0, T), v0,
                    method="DOP853", rtol=1e-12, atol=1e-13, t_eval=np.linspace(0, T, n_out))
    return sol.y.T


def test_alpha_zero_em_is_first_order():
    p = ChemostatParams(D=1.5, **BASE_CONSTANTS)
    ref = _ode_reference(p, (2.5, 5.0), 2.0, 3)[-1]
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        path = generate(0, 0, 2, h)
        errs.append(np.abs(euler_maruyama(p, path, (2.5, 5.0), (0.0, 2.0)).states[-1] - ref).max())
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios - 2) < 0.2)


def test_alpha_zero_conjugated_matches_ode():
    p = ChemostatParams(D=1.5, **BASE_CONSTANTS)
    path = generate(0, -20, 5, 1e-3)
    tr = simulate_conjugated(p, path, (2.5, 5.0), (0.0, 5.0), 1e-3)
    ref = _ode_reference(p, (2.5, 5.0), 5.0, len(tr.times))
    assert np.abs(tr.states - ref).max() < 1e-8


def test_rk4_random_against_solve_ivp(params):
    # step = 2 OU steps keeps every stage on the grid; the oracle interpolates z* linearly
    path = generate(4, -20, 3, 1e-3)
    ou = ou_from_wiener(path, 20.0)
    tr = rk4_random(params, ou, (1.0, 2.0), (0.0, 3.0), 2e-3)
    t_ou, z_ou = ou.times, ou.values
    sol = solve_ivp(lambda t, u: random_rhs_direct(params, u, np.interp(t, t_ou, z_ou)), (0, 3),
                    (1.0, 2.0), method="RK45", rtol=1e-10, atol=1e-12, t_eval=tr.times, max_step=1e-3)
    assert np.abs(tr.states - sol.y.T).max() < 1e-4
    np.testing.assert_array_equal(tr.z, ou.window(0.0, 3.0)[::2])


def test_stage_values_midpoints():
    path = generate(0, -20, 1, 0.01)
    ou = ou_from_wiener(path, 20.0)
    z = ou.window(0.0, 1.0)
    even = stage_values(ou, (0.0, 1.0), 0.02)
    np.testing.assert_array_equal(even, z)
    odd = stage_values(ou, (0.0, 0.9), 0.03)
    assert odd[0] == z[0] and odd[2] == z[3]
    assert odd[1] == pytest.approx(0.5 * (z[1] + z[2]))
    same = stage_values(ou, (0.0, 1.0), 0.01)
    np.testing.assert_allclose(same[1::2], 0.5 * (z[:-1] + z[1:]))
    with pytest.raises(GridError):
        stage_values(ou, (0.0, 1.0), 0.015)


def test_conjugated_tracks_em(params):
    path = generate(2, -20, 5, 1e-5)
    em = euler_maruyama(params, path, (2.5, 5.0), (0.0, 5.0), refinement=100)
    cj = simulate_conjugated(params, path, (2.5, 5.0), (0.0, 5.0), 1e-3)
    assert np.abs(em.states - cj.states).max() < 0.05
    assert cj.kind == "stochastic" and cj.z is not None


def test_csv_roundtrip_exact(tmp_path, params):
    path = generate(6, -20, 2, 1e-3)
    for tr in (euler_maruyama(params, path, (2.5, 5.0), (0.0, 2.0), dt_out=1e-2),
               rk4_random(params, ou_from_wiener(path), (0.3, 1.0), (0.0, 2.0), 1e-2)):
        f = tmp_path / f"{tr.kind}.csv"
        tr.to_csv(f)
        back = read_trajectory_csv(f)
        np.testing.assert_array_equal(back.times, tr.times)
        np.testing.assert_array_equal(back.states, tr.states)
        assert back.params == tr.params and back.kind == tr.kind
        assert back.scheme == tr.scheme and back.clamp_events == tr.clamp_events


def _kick_path(dt, n, kick_at, kick):
    vals = np.zeros(n + 1)
    vals[kick_at + 1:] = kick
    return WienerPath(dt=dt, seed=None, root=vals, root_n_lo=0)


def test_pole_overshoot_raises():
    p = ChemostatParams(D=1.0, alpha=1.0, **BASE_CONSTANTS)
    path = _kick_path(0.01, 100, 10, 5.0)  # with S near 4, one increment of +5 sends S below -a
    with pytest.raises(NumericalFailure) as exc:
        euler_maruyama(p, path, (4.0, 0.1), (0.0, 1.0))
    assert exc.value.step == 11
    ens = euler_maruyama_ensemble(p, [path, _kick_path(0.01, 100, 10, 0.0)], (4.0, 0.1), (0.0, 1.0))
    assert ens[0].failed_step == 11 and np.isnan(ens[0].states[12:]).all()
    assert ens[1].failed_step is None


def test_clamps_counted():
    p = ChemostatParams(D=1.0, alpha=1.0, **BASE_CONSTANTS)
    path = _kick_path(0.01, 100, 10, 1.5)  # x * (1 - 1.5) < 0: clamped once
    tr = euler_maruyama(p, path, (0.5, 1.0), (0.0, 1.0))
    assert tr.clamp_events >= 1
    assert (tr.states[:, 1] >= 0).all()
    assert (tr.states[12:, 1] == 0).all()


def test_grid_errors(params):
    path = generate(0, 0, 1, 0.01)
    with pytest.raises(GridError):
        euler_maruyama(params, path, (2.5, 5), (0.0, 1.0), dt_out=0.015)
    with pytest.raises(GridError):
        euler_maruyama(params, path, (2.5, 5), (0.0, 2.0))
    with pytest.raises(GridError):
        euler_maruyama(params, path, (2.5, 5), (0.0, 1.0), refinement=3)
    with pytest.raises(ValueError):
        euler_maruyama(params, path, (2.5, -1), (0.0, 1.0))
    with pytest.raises(GridError):
        euler_maruyama_ensemble(params, [path, generate(1, 0, 1, 0.02)], (2.5, 5), (0.0, 1.0))


def test_ensemble_equals_single_runs(params):
    paths = [generate(s, 0, 1, 1e-3) for s in range(4)]
    ens = euler_maruyama_ensemble(params, iter(paths), (2.5, 5.0), (0.0, 1.0), refinement=10)
    for p_, tr in zip(paths, ens):
        one = euler_maruyama(params, p_, (2.5, 5.0), (0.0, 1.0), refinement=10)
        np.testing.assert_array_equal(one.states, tr.states)
        assert tr.seed == p_.seed


def test_x_zero_stays_zero(params):
    tr = euler_maruyama(params, generate(0, 0, 5, 1e-2), (2.5, 0.0), (0.0, 5.0))
    assert (tr.states[:, 1] == 0).all()
