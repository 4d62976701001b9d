import numpy as np
import pytest

from weaktraj.classical import (PotentialParams, default_potential,
                                ermakov_invariant, ermakov_reconstruct,
                                ermakov_solve, fundamental_zeros,
                                integrate_trajectory, make_grid, rk4_on_grid)
from weaktraj.errors import RangeError


def test_make_grid_endpoints_exact():
    g = make_grid(0.0, 3.65, 1e-3)
    assert g[0] == 0.0
    assert g[-1] == 3.65
    assert np.all(np.diff(g) > 0)


def test_rk4_harmonic_oscillator():
    grid = make_grid(0.0, 10.0, 1e-2)
    ys = rk4_on_grid(lambda t, y: np.array([y[1], -y[0]]), grid,
                     np.array([1.0, 0.0]), 0, 1e-3)
    assert np.max(np.abs(ys[:, 0] - np.cos(grid))) < 1e-10


def test_rk4_backward_anchor():
    grid = make_grid(0.0, 5.0, 1e-2)
    fwd = rk4_on_grid(lambda t, y: np.array([y[1], -y[0]]), grid,
                      np.array([1.0, 0.0]), 0, 1e-3)
    back = rk4_on_grid(lambda t, y: np.array([y[1], -y[0]]), grid,
                       fwd[-1], grid.size - 1, 1e-3)
    assert np.max(np.abs(back - fwd)) < 1e-9


def test_potential_modulation():
    p = PotentialParams.isotropic(xi=2.0, ups=0.6, omega=1.5)
    # at t = 0 the modulation subtracts fully; a quarter period later it adds
    assert p.v(0.0, 0) == pytest.approx(2.0 - 0.6)
    t_quarter = np.pi / (2.0 * 1.5)
    assert p.v(t_quarter, 0) == pytest.approx(2.0 + 0.6)


def test_calibrated_zero_structure(params):
    # the x fundamental solution vanishes twice before the return time,
    # the y one exactly once, and both vanish at the return time itself
    zx = fundamental_zeros(params, 0, 2.8401)
    zy = fundamental_zeros(params, 1, 2.8401)
    assert len(zx) == 2 and len(zy) == 1
    assert zx[-1] == pytest.approx(2.84, abs=1e-7)
    assert zy[-1] == pytest.approx(2.84, abs=1e-7)


def test_simultaneous_return(params):
    grid = make_grid(0.0, 2.84, 1e-3)
    for p0 in [(17.0, 7.0), (-7.0, 15.0), (0.0, 15.0)]:
        rec = integrate_trajectory(np.zeros(2), np.array(p0), params, grid)
        assert np.linalg.norm(rec.q[-1]) < 1e-6


def test_stability_determinant(params, grid_short):
    rec = integrate_trajectory(np.zeros(2), np.array([17.0, 7.0]), params,
                               grid_short)
    s = rec.stability
    det = s[:, :, 0, 0] * s[:, :, 1, 1] - s[:, :, 0, 1] * s[:, :, 1, 0]
    assert np.max(np.abs(det - 1.0)) < 1e-8


def test_backward_trajectory_retraces(params, grid_short):
    fwd = integrate_trajectory(np.zeros(2), np.array([17.0, 7.0]), params,
                               grid_short)
    back = integrate_trajectory(fwd.q[-1], fwd.p[-1], params, grid_short,
                                anchor=grid_short.size - 1)
    assert np.max(np.abs(back.q - fwd.q)) < 1e-9
    assert np.max(np.abs(back.p - fwd.p)) < 1e-8


def test_index_of(params, grid_short):
    rec = integrate_trajectory(np.zeros(2), np.array([1.0, 0.0]), params,
                               grid_short)
    assert rec.index_of(0.5) == 500
    with pytest.raises(RangeError):
        rec.index_of(0.50037)


def test_ermakov_invariant_and_reconstruction(params, grid_short):
    rec = integrate_trajectory(np.zeros(2), np.array([17.0, 7.0]), params,
                               grid_short)
    for axis in range(2):
        sol = ermakov_solve(params, axis, 1.0, 0.0, grid_short)
        x = rec.q[:, axis]
        dx = rec.p[:, axis] / params.m
        inv = ermakov_invariant(sol, x, dx)
        assert (inv.max() - inv.min()) / inv.mean() < 1e-8
        rebuilt = ermakov_reconstruct(sol, x[0], dx[0])
        assert np.max(np.abs(rebuilt - x)) < 1e-6 * np.max(np.abs(x))


def test_trajectory_csv_roundtrip(params, grid_short, tmp_path):
    rec = integrate_trajectory(np.zeros(2), np.array([17.0, 7.0]), params,
                               grid_short)
    path = tmp_path / "traj.csv"
    rec.write_csv(path)
    rows = np.genfromtxt(path, delimiter=",", names=True)
    assert rows.dtype.names[:6] == ("t", "qx", "qy", "px", "py", "S")
    assert rows["qx"][-1] == pytest.approx(rec.q[-1, 0], abs=1e-12)


def test_default_potential_cached():
    assert default_potential() is default_potential()
