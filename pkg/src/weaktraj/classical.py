"""Classical dynamics of the 2D time-dependent linear oscillator.

The Hamiltonian is H = (Px^2 + Py^2)/(2m) + m Vx(t) x^2 + m Vy(t) y^2 with
V_i(t) = xi_i - ups_i cos(2 omega_i t), so each axis obeys the linear
equation of motion  x'' + 2 V_i(t) x = 0.

Provides trajectory integration with per-axis stability (fundamental)
matrices and classical action, Ermakov-Pinney solutions of the associated
nonlinear equation, and the frequency calibration that places the common
return-to-origin time of all origin-launched trajectories at a requested
instant.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import brentq

from .errors import CalibrationError, RangeError, RefinementError, SingularityError

__all__ = [
    "PotentialParams",
    "TrajectoryRecord",
    "ErmakovSolution",
    "make_grid",
    "integrate_trajectory",
    "ermakov_solve",
    "ermakov_invariant",
    "calibrate_return_time",
    "default_potential",
]

SYMPLECTIC_TOL = 1e-8
DEFAULT_SUBSTEP = 2.5e-4


@dataclass(frozen=True)
class PotentialParams:
    """Constants of V_i(t) = xi_i - ups_i cos(2 omega_i t) plus the mass."""

    xi_x: float
    xi_y: float
    ups_x: float
    ups_y: float
    omega_x: float
    omega_y: float
    m: float = 1.0

    def __post_init__(self):
        if self.m <= 0.0:
            raise ValueError("mass must be positive")

    def v(self, t, axis: int):
        """V_axis(t); t may be an array."""
        xi = (self.xi_x, self.xi_y)[axis]
        ups = (self.ups_x, self.ups_y)[axis]
        omega = (self.omega_x, self.omega_y)[axis]
        return xi - ups * np.cos(2.0 * omega * t)

    def v_both(self, t):
        return np.array([self.v(t, 0), self.v(t, 1)])

    @staticmethod
    def isotropic(xi: float, ups: float, omega: float, m: float = 1.0) -> "PotentialParams":
        return PotentialParams(xi, xi, ups, ups, omega, omega, m)


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled classical trajectory with stability matrices and action.

    times: (n,) strictly increasing sample grid.
    q, p: (n, 2) phase-space coordinates.
    action: (n, 2) per-axis classical action, zero at times[0]; the total
        action is action.sum(axis=1).
    stability: (n, 2, 2, 2) per-axis 2x2 matrices d(q,p)_t / d(q,p)_anchor.
    anchor: index of the sample where the initial data was imposed (0 for
        forward trajectories, n-1 for backward-constructed guides).
    """

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    action: np.ndarray
    stability: np.ndarray
    anchor: int
    params: PotentialParams

    @property
    def total_action(self) -> np.ndarray:
        return self.action.sum(axis=1)

    def index_of(self, t: float) -> int:
        """Index of an exact grid time (within 1e-9)."""
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9:
            raise RangeError(f"t={t} is not a grid sample")
        return i

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "qx", "qy", "px", "py", "S",
                        "mx11", "mx12", "mx21", "mx22",
                        "my11", "my12", "my21", "my22"])
            s_tot = self.total_action
            for i, t in enumerate(self.times):
                row = [t, self.q[i, 0], self.q[i, 1], self.p[i, 0], self.p[i, 1], s_tot[i]]
                row += list(self.stability[i, 0].ravel()) + list(self.stability[i, 1].ravel())
                w.writerow([f"{v:.17g}" for v in row])


@dataclass(frozen=True)
class ErmakovSolution:
    """Solution of rho'' + 2 V(t) rho = 1/rho^3 with phase phi' = 1/rho^2."""

    times: np.ndarray
    rho: np.ndarray
    drho: np.ndarray
    phi: np.ndarray
    axis: int
    params: PotentialParams


def make_grid(t0: float, t1: float, step: float = 1e-3) -> np.ndarray:
    """Uniform grid from t0 to t1 inclusive; the step is adjusted down so the
    endpoints are exact samples."""
    if t1 <= t0:
        raise ValueError("t1 must exceed t0")
    n = int(np.ceil((t1 - t0) / step - 1e-12))
    return t0 + (t1 - t0) * np.arange(n + 1) / n


def _rk4_piece(f, t0: float, t1: float, y: np.ndarray, h_max: float) -> np.ndarray:
    """Classic RK4 from t0 to t1 (either direction) with |h| <= h_max."""
    n = max(1, int(np.ceil(abs(t1 - t0) / h_max - 1e-12)))
    h = (t1 - t0) / n
    t = t0
    for _ in range(n):
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return y


def rk4_on_grid(f, t_grid: np.ndarray, y0: np.ndarray, anchor: int = 0,
                h_max: float = DEFAULT_SUBSTEP) -> np.ndarray:
    """Integrate y' = f(t, y) on the grid, imposing y0 at index ``anchor`` and
    filling both directions. Returns (n, len(y0))."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("t_grid must be strictly increasing")
    n = t_grid.size
    out = np.empty((n, np.size(y0)), dtype=np.asarray(y0).dtype)
    out[anchor] = y0
    y = np.array(y0)
    for i in range(anchor, n - 1):
        y = _rk4_piece(f, t_grid[i], t_grid[i + 1], y, h_max)
        out[i + 1] = y
    y = np.array(y0)
    for i in range(anchor, 0, -1):
        y = _rk4_piece(f, t_grid[i], t_grid[i - 1], y, h_max)
        out[i - 1] = y
    return out


def _trajectory_rhs(params: PotentialParams):
    m = params.m

    def f(t, y):
        # y = per axis [x, p, m11, m12, m21, m22], axes stacked -> length 12
        y = y.reshape(2, 6)
        v = np.array([params.v(t, 0), params.v(t, 1)])
        dy = np.empty_like(y)
        dy[:, 0] = y[:, 1] / m
        dy[:, 1] = -2.0 * m * v * y[:, 0]
        # columns of the fundamental matrix obey the same linear equation
        dy[:, 2] = y[:, 4] / m
        dy[:, 3] = y[:, 5] / m
        dy[:, 4] = -2.0 * m * v * y[:, 2]
        dy[:, 5] = -2.0 * m * v * y[:, 3]
        return dy.reshape(-1)

    return f


def integrate_trajectory(q0, p0, params: PotentialParams, t_grid,
                         anchor: int = 0,
                         h_max: float = DEFAULT_SUBSTEP) -> TrajectoryRecord:
    """Classical trajectory with initial data (q0, p0) at t_grid[anchor].

    The per-axis stability matrix is integrated simultaneously from its two
    fundamental solutions; the action is accumulated by Simpson's rule on the
    sample grid. Raises RefinementError if symplecticity degrades beyond
    1e-8 (step too coarse)."""
    t_grid = np.asarray(t_grid, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    y0 = np.zeros((2, 6))
    y0[:, 0] = q0
    y0[:, 1] = p0
    y0[:, 2] = 1.0
    y0[:, 5] = 1.0
    ys = rk4_on_grid(_trajectory_rhs(params), t_grid, y0.reshape(-1), anchor, h_max)
    ys = ys.reshape(-1, 2, 6)
    q = ys[:, :, 0]
    p = ys[:, :, 1]
    stability = ys[:, :, 2:].reshape(-1, 2, 2, 2)
    det = (stability[:, :, 0, 0] * stability[:, :, 1, 1]
           - stability[:, :, 0, 1] * stability[:, :, 1, 0])
    worst = float(np.max(np.abs(det - 1.0)))
    if worst > SYMPLECTIC_TOL:
        raise RefinementError(
            f"stability determinant deviates by {worst:.3e} > {SYMPLECTIC_TOL}; "
            "reduce the integration step")
    m = params.m
    v = np.stack([params.v(t_grid, 0), params.v(t_grid, 1)], axis=1)
    lagrangian = p**2 / (2.0 * m) - m * v * q**2
    action = cumulative_simpson(lagrangian, x=t_grid, axis=0, initial=0.0)
    return TrajectoryRecord(times=t_grid, q=q, p=p, action=action,
                            stability=stability, anchor=anchor, params=params)


def _ermakov_rhs(params: PotentialParams, axis: int):
    def f(t, y):
        rho, drho, _phi = y
        if rho <= 0.0:
            raise SingularityError("Ermakov solution reached rho <= 0")
        v = params.v(t, axis)
        return np.array([drho, -2.0 * v * rho + rho**-3, rho**-2])

    return f


def ermakov_solve(params: PotentialParams, axis: int, rho0: float, drho0: float,
                  t_grid, h_max: float = DEFAULT_SUBSTEP) -> ErmakovSolution:
    """Solve the Ermakov-Pinney equation on the grid with rho(t0) = rho0,
    rho'(t0) = drho0 and phi(t0) = 0."""
    if rho0 <= 0.0:
        raise SingularityError("rho0 must be positive")
    t_grid = np.asarray(t_grid, dtype=float)
    ys = rk4_on_grid(_ermakov_rhs(params, axis), t_grid,
                     np.array([rho0, drho0, 0.0]), 0, h_max)
    if np.any(ys[:, 0] <= 0.0):
        raise SingularityError("Ermakov solution crossed rho = 0")
    return ErmakovSolution(times=t_grid, rho=ys[:, 0], drho=ys[:, 1],
                           phi=ys[:, 2], axis=axis, params=params)


def ermakov_invariant(sol: ErmakovSolution, x: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """Ermakov-Lewis invariant (1/2)[(rho x' - rho' x)^2 + (x/rho)^2] along a
    trajectory sampled on the same grid as the Pinney solution."""
    return 0.5 * ((sol.rho * dx - sol.drho * x) ** 2 + (x / sol.rho) ** 2)


def ermakov_reconstruct(sol: ErmakovSolution, x0: float, dx0: float) -> np.ndarray:
    """Rebuild the linear-oscillator solution x(t) = rho (A cos phi + B sin phi)
    from initial data at the grid start (where phi = 0)."""
    a = x0 / sol.rho[0]
    b = sol.rho[0] * dx0 - sol.drho[0] * x0
    return sol.rho * (a * np.cos(sol.phi) + b * np.sin(sol.phi))


def _fundamental_zero_value(omega: float, r_xi: float, r_ups: float,
                            t_target: float, m: float,
                            h_max: float) -> tuple[float, np.ndarray]:
    """Z(t_target) for the fundamental solution Z(0)=0, Z'(0)=1 of
    x'' + 2 V(t) x = 0 with V = omega^2 (r_xi - r_ups cos(2 omega t)),
    plus the sampled Z series used to verify the zero is the first one."""
    params = PotentialParams.isotropic(r_xi * omega**2, r_ups * omega**2, omega, m)
    grid = make_grid(0.0, t_target, 1e-3)

    def f(t, y):
        v = params.v(t, 0)
        return np.array([y[1] / m, -2.0 * m * v * y[0]])

    ys = rk4_on_grid(f, grid, np.array([0.0, 1.0]), 0, h_max)
    return float(ys[-1, 0]), ys[:, 0]


def _interior_zero_count(z_series: np.ndarray) -> int:
    """Sign changes of Z strictly inside (0, t_target)."""
    z = z_series[1:-1]
    return int(np.sum(np.sign(z[1:]) * np.sign(z[:-1]) < 0.0))


def calibrate_return_time(template: PotentialParams, t_target: float,
                          zero_index: tuple = (1, 1),
                          h_max: float = DEFAULT_SUBSTEP) -> PotentialParams:
    """Rescale the frequencies so that the fundamental solution Z of each axis
    has its zero_index-th zero (counted from t=0, excluding t=0) exactly at
    t_target.

    The ratios xi/omega^2 and ups/omega^2 of the template are preserved; only
    omega is scanned. By linearity every trajectory launched from the origin
    then returns to the origin at t_target. An axis with zero_index > 1
    additionally brings every origin-launched trajectory back through that
    axis' zero at each earlier zero of Z."""
    if t_target <= 0.0:
        raise CalibrationError("t_target must be positive")
    new = {}
    for axis, (xi, ups, omega) in enumerate([
            (template.xi_x, template.ups_x, template.omega_x),
            (template.xi_y, template.ups_y, template.omega_y)]):
        n_zero = int(zero_index[axis])
        if n_zero < 1:
            raise CalibrationError("zero_index entries must be >= 1")
        r_xi = xi / omega**2
        r_ups = ups / omega**2
        if r_xi <= 0.0:
            raise CalibrationError("xi/omega^2 must be positive for a return time")
        guess = n_zero * np.pi / (np.sqrt(2.0 * r_xi) * t_target)

        def f(w):
            return _fundamental_zero_value(w, r_xi, r_ups, t_target,
                                           template.m, h_max)[0]

        # bracket the sign change of Z(t_target) nearest the harmonic guess,
        # keeping only brackets with the right number of interior zeros
        scan = guess * np.linspace(0.75, 1.25, 21)
        vals = [f(w) for w in scan]
        bracket = None
        for i in range(len(scan) - 1):
            if vals[i] * vals[i + 1] <= 0.0:
                _, zs = _fundamental_zero_value(scan[i], r_xi, r_ups, t_target,
                                                template.m, h_max)
                if _interior_zero_count(zs) == n_zero - 1:
                    bracket = (scan[i], scan[i + 1])
                    break
        if bracket is None:
            report = ", ".join(f"omega={w:.4f}:Z={v:.3e}" for w, v in zip(scan, vals))
            raise CalibrationError(f"no sign change of Z(t_target) in scan: {report}")
        w_star = brentq(f, bracket[0], bracket[1], xtol=1e-13, rtol=1e-15)
        z_end, z_series = _fundamental_zero_value(w_star, r_xi, r_ups, t_target,
                                                 template.m, h_max)
        if abs(z_end) > 1e-8:
            raise CalibrationError(f"calibration residual |Z(t_target)|={abs(z_end):.3e}")
        if _interior_zero_count(z_series) != n_zero - 1:
            raise CalibrationError(
                f"Z has {_interior_zero_count(z_series) + 1} zeros up to t_target, "
                f"requested zero_index {n_zero}")
        suffix = "x" if axis == 0 else "y"
        new[f"xi_{suffix}"] = r_xi * w_star**2
        new[f"ups_{suffix}"] = r_ups * w_star**2
        new[f"omega_{suffix}"] = w_star
    return replace(template, **new)


def fundamental_zeros(params: PotentialParams, axis: int, t_max: float,
                      h_max: float = DEFAULT_SUBSTEP) -> np.ndarray:
    """Zeros of the fundamental solution Z (Z(0)=0, Z'(0)=1) in (0, t_max],
    located by bisection on the sampled sign changes."""
    grid = make_grid(0.0, t_max, 1e-3)

    def f(t, y):
        return np.array([y[1] / params.m, -2.0 * params.m * params.v(t, axis) * y[0]])

    ys = rk4_on_grid(f, grid, np.array([0.0, 1.0]), 0, h_max)
    z = ys[:, 0]
    zeros = []
    for i in range(1, z.size - 1):
        if z[i] == 0.0:
            zeros.append(grid[i])
        elif z[i] * z[i + 1] < 0.0:
            # linear interpolation is ample at this grid resolution
            zeros.append(grid[i] - z[i] * (grid[i + 1] - grid[i]) / (z[i + 1] - z[i]))
    if abs(z[-1]) < 1e-8:
        zeros.append(grid[-1])
    return np.array(zeros)


@functools.lru_cache(maxsize=8)
def default_potential(t_return: float = 2.84, xi_ratio: float = 1.0,
                      ups_ratio: float = 0.3, m: float = 1.0,
                      zero_index: tuple = (2, 1)) -> PotentialParams:
    """Potential with xi/omega^2 = xi_ratio, ups/omega^2 = ups_ratio per axis
    and omega calibrated so origin-launched trajectories return at t_return.

    The x frequency is tuned so t_return is the second zero of the x
    fundamental solution: trajectories sharing a y momentum then cross once
    before the common return, which is what makes the backward probability
    flow hop between guiding centers."""
    template = PotentialParams.isotropic(xi_ratio, ups_ratio, 1.0, m)
    return calibrate_return_time(template, t_return, zero_index=zero_index)
