"""Velocity field, momentum weak values and backward 'average trajectories'.

The velocity field is the probability current divided by the density,
v = (1/m) Im[grad psi / psi], evaluated from the analytic branch gradients
(never from grid differentiation: interference regions are exactly where
numerical phase unwrapping fails). The momentum weak value postselected on
position is -i grad psi / psi: real part m v, imaginary part the log-density
gradient -grad rho / (2 rho).

Average trajectories are streamlines of v integrated backward in time from a
chosen final position, with adaptive step halving near nodes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NodeProximityError
from .propagation import Superposition, value_and_gradient

__all__ = [
    "AverageTrajectory",
    "velocity",
    "weak_momentum_value",
    "integrate_average_trajectory",
    "fig2b_family",
]

NODE_FLOOR = 1e-14
REFINE_FLOOR = 1e-6


@dataclass(frozen=True)
class AverageTrajectory:
    """Backward-integrated streamline. times descend from t_f; aborted is set
    when the integration hit an unresolvable node before reaching t_end."""

    times: np.ndarray
    positions: np.ndarray
    nearest_branch: tuple
    density: np.ndarray
    aborted: bool

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "nearest_branch", "psi_sq", "abort_flag"])
            flag = int(self.aborted)
            for i, t in enumerate(self.times):
                w.writerow([f"{t:.17g}", f"{self.positions[i, 0]:.17g}",
                            f"{self.positions[i, 1]:.17g}",
                            self.nearest_branch[i],
                            f"{self.density[i]:.17g}", flag])


def _local_peak(psi: Superposition, t: float, states=None) -> float:
    """Squared peak amplitude of the dominant branch at time t."""
    if states is None:
        states = [b.state_at(t) for b in psi.branches]
    return max(abs(b.coefficient) ** 2 * s.peak_amplitude() ** 2
               for b, s in zip(psi.branches, states))


def _field(psi: Superposition, r, t: float, states=None):
    """(velocity, density, total amplitude) at (r, t)."""
    val, grad = value_and_gradient(psi, r, t, states=states)
    dens = abs(val) ** 2
    if dens == 0.0:
        raise NodeProximityError("wavefunction vanishes at the probe point", 0.0)
    m = psi.branches[0].params.m
    v = np.imag(grad / val) / m
    return v, dens, val


def velocity(psi: Superposition, r, t: float,
             node_floor: float = NODE_FLOOR) -> np.ndarray:
    """Bohmian velocity v = (1/m) Im[grad psi / psi] at (r, t)."""
    r = np.asarray(r, dtype=float)
    v, dens, _ = _field(psi, r, t)
    if dens < node_floor * _local_peak(psi, t):
        raise NodeProximityError(
            f"density {dens:.3e} below node floor", dens)
    return v


def weak_momentum_value(psi: Superposition, r, t: float,
                        node_floor: float = NODE_FLOOR) -> np.ndarray:
    """Complex momentum weak value -i grad psi / psi postselected at r."""
    r = np.asarray(r, dtype=float)
    val, grad = value_and_gradient(psi, r, t)
    dens = abs(val) ** 2
    if dens < node_floor * _local_peak(psi, t):
        raise NodeProximityError(
            f"density {dens:.3e} below node floor", dens)
    return -1j * grad / val


def _nearest_branch(psi: Superposition, r, t: float, states=None) -> str:
    from .gaussians import evaluate
    if states is None:
        states = [b.state_at(t) for b in psi.branches]
    amps = [abs(b.coefficient * evaluate(s, r))
            for b, s in zip(psi.branches, states)]
    return psi.branches[int(np.argmax(amps))].label


def integrate_average_trajectory(psi: Superposition, r_f, t_f: float,
                                 t_end: float, step: float = 1e-3,
                                 max_halvings: int = 20) -> AverageTrajectory:
    """RK4 backward integration of dr/dt = v(r, t) from (r_f, t_f) to t_end.

    The step is halved while the local density is below REFINE_FLOOR of the
    dominant branch peak; below NODE_FLOOR after max_halvings the trajectory
    aborts and the partial result is returned with the abort flag set."""
    if t_end >= t_f:
        raise ValueError("t_end must precede t_f for backward integration")
    r = np.asarray(r_f, dtype=float)
    t = float(t_f)
    times = [t]
    positions = [r.copy()]
    labels = [_nearest_branch(psi, r, t)]
    _, dens0, _ = _field(psi, r, t)
    density = [dens0]
    aborted = False
    while t > t_end + 1e-12:
        h = -min(step, t - t_end)
        halvings = 0
        while True:
            try:
                v1, dens, _ = _field(psi, r, t)
                peak = _local_peak(psi, t)
                if dens < NODE_FLOOR * peak:
                    raise NodeProximityError("node reached", dens)
                if dens < REFINE_FLOOR * peak and halvings < max_halvings:
                    h *= 0.5
                    halvings += 1
                    continue
                v2, _, _ = _field(psi, r + 0.5 * h * v1, t + 0.5 * h)
                v3, _, _ = _field(psi, r + 0.5 * h * v2, t + 0.5 * h)
                v4, _, _ = _field(psi, r + h * v3, t + h)
                break
            except NodeProximityError:
                if halvings >= max_halvings:
                    aborted = True
                    break
                h *= 0.5
                halvings += 1
        if aborted:
            break
        r = r + (h / 6.0) * (v1 + 2.0 * v2 + 2.0 * v3 + v4)
        t = t + h
        _, dens, _ = _field(psi, r, t)
        times.append(t)
        positions.append(r.copy())
        labels.append(_nearest_branch(psi, r, t))
        density.append(dens)
    return AverageTrajectory(times=np.array(times),
                             positions=np.array(positions),
                             nearest_branch=tuple(labels),
                             density=np.array(density), aborted=aborted)


def fig2b_family(psi: Superposition, branch_index: int = 0, t_f: float = None,
                 offset: float = 0.05, step: float = 1e-3) -> list:
    """The 3x3 family of backward trajectories with final positions on and
    around the chosen branch center at t_f."""
    branch = psi.branches[branch_index]
    if t_f is None:
        t_f = float(branch.times[-1])
    center = branch.state_at(t_f).q
    t_end = float(branch.times[0])
    out = []
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            r_f = center + offset * np.array([di, dj], dtype=float)
            out.append(integrate_average_trajectory(psi, r_f, t_f, t_end,
                                                    step=step))
    return out


def dwell_sequence(traj: AverageTrajectory, min_dwell: float = 0.05) -> list:
    """Forward-time sequence of visited branch labels, ignoring visits
    shorter than min_dwell (label chatter where branch amplitudes tie)."""
    order = np.argsort(traj.times)
    times = traj.times[order]
    labels = [traj.nearest_branch[i] for i in order]
    runs = []  # (label, duration)
    start = times[0]
    for i in range(1, len(labels)):
        if labels[i] != labels[i - 1]:
            runs.append((labels[i - 1], times[i] - start))
            start = times[i]
    runs.append((labels[-1], times[-1] - start))
    seq = []
    for label, dur in runs:
        if dur >= min_dwell:
            if not seq or seq[-1] != label:
                seq.append(label)
    return seq
