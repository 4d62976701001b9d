"""Thawed-Gaussian propagation of wavepacket branches and superpositions.

For the quadratic Hamiltonian the Gaussian ansatz is closed under the exact
evolution: the center follows the guiding classical trajectory, the complex
width exponent per axis is alpha(t) = -i P(t) / (2 Q(t)) where (Q, P) solve
the linearized (classical) equations with Q(t_a) = 1, P(t_a) = 2 i alpha(t_a),
and the log-prefactor accumulates i S_cl - (1/2) log Q per axis. (Q, P) are
assembled from the guide's stability matrix, so the width never blows through
caustics: |Q|^2 = M11^2 + 4 alpha_a^2 M12^2 > 0 for a real anchor width.

Branches can be anchored at the initial time (forward preparation) or at the
final time (backward-constructed postselection states); both directions use
the same machinery.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .classical import PotentialParams, TrajectoryRecord, integrate_trajectory
from .errors import InvalidStateError, RangeError
from .gaussians import ComplexGaussian, evaluate
from . import gaussians

__all__ = [
    "Branch",
    "Superposition",
    "propagate_forward",
    "propagate_superposition",
    "backward_postselected",
    "evaluate_superposition",
    "roman",
    "write_snapshot_csv",
]

_ROMAN = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX"]


def roman(j: int) -> str:
    return _ROMAN[j] if j < len(_ROMAN) else str(j + 1)


def _quad_interp(times: np.ndarray, series: np.ndarray, t: float):
    """Three-point Lagrange interpolation on a uniform grid; exact at samples."""
    n = times.size
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise RangeError(f"t={t} outside grid [{times[0]}, {times[-1]}]")
    i = int(np.argmin(np.abs(times - t)))
    if abs(times[i] - t) < 1e-13:
        return series[i]
    i = min(max(i, 1), n - 2)
    t0, t1, t2 = times[i - 1], times[i], times[i + 1]
    l0 = (t - t1) * (t - t2) / ((t0 - t1) * (t0 - t2))
    l1 = (t - t0) * (t - t2) / ((t1 - t0) * (t1 - t2))
    l2 = (t - t0) * (t - t1) / ((t2 - t0) * (t2 - t1))
    return l0 * series[i - 1] + l1 * series[i] + l2 * series[i + 1]


@dataclass(frozen=True)
class Branch:
    """One propagated Gaussian branch.

    guide: the classical guiding trajectory (carries the grid and stability).
    anchor_state: the exact Gaussian at the anchor sample (real widths).
    coefficient: the branch amplitude c_j within a superposition.
    label: display name (Roman numeral by branch index).
    """

    guide: TrajectoryRecord
    anchor_state: ComplexGaussian
    coefficient: complex = 1.0
    label: str = "I"
    # derived sampled series, filled in __post_init__
    alpha: np.ndarray = field(init=False, repr=False)
    log_q: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a0 = self.anchor_state.alpha
        if np.any(np.abs(a0.imag) > 1e-12):
            raise InvalidStateError("anchor width must be real")
        m = self.guide.stability  # (n, 2, 2, 2)
        two_ia = 2j * a0.real  # (2,)
        q_fund = m[:, :, 0, 0] + two_ia * m[:, :, 0, 1]
        p_fund = m[:, :, 1, 0] + two_ia * m[:, :, 1, 1]
        alpha = -0.5j * p_fund / q_fund
        if np.any(alpha.real <= 0.0):
            raise InvalidStateError("width exponent lost positivity")
        # branch-cut-free log Q accumulated from the anchor
        ratios = q_fund[1:] / q_fund[:-1]
        steps = np.log(ratios)
        log_q = np.zeros_like(q_fund)
        log_q[1:] = np.cumsum(steps, axis=0)
        log_q = log_q - log_q[self.guide.anchor]
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "log_q", log_q)

    @property
    def times(self) -> np.ndarray:
        return self.guide.times

    @property
    def params(self) -> PotentialParams:
        return self.guide.params

    def _axis_phase(self, t: float, axis: int) -> complex:
        g = self.guide
        ds = (_quad_interp(g.times, g.action[:, axis], t)
              - g.action[g.anchor, axis])
        dlq = _quad_interp(g.times, self.log_q[:, axis], t)
        return (self.anchor_state.phase / self.anchor_state.dim
                + 1j * ds - 0.5 * dlq)

    def state_at(self, t: float) -> ComplexGaussian:
        """The exact propagated Gaussian at time t (normalized)."""
        g = self.guide
        q = _quad_interp(g.times, g.q, t)
        p = _quad_interp(g.times, g.p, t)
        alpha = _quad_interp(g.times, self.alpha, t)
        phase = sum(self._axis_phase(t, ax) for ax in range(2))
        return ComplexGaussian(q=q, p=p, alpha=alpha, phase=phase)

    def axis_state(self, t: float, axis: int) -> ComplexGaussian:
        """1D factor of the separable state along one axis."""
        g = self.guide
        q = _quad_interp(g.times, g.q[:, axis], t)
        p = _quad_interp(g.times, g.p[:, axis], t)
        alpha = _quad_interp(g.times, self.alpha[:, axis], t)
        return ComplexGaussian(q=[q], p=[p], alpha=[alpha],
                               phase=self._axis_phase(t, axis))


@dataclass(frozen=True)
class Superposition:
    """Ordered list of branches with their complex coefficients."""

    branches: tuple

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches:
            raise ValueError("a superposition needs at least one branch")

    @property
    def times(self) -> np.ndarray:
        return self.branches[0].times

    def coefficients(self) -> np.ndarray:
        return np.array([b.coefficient for b in self.branches], dtype=complex)


def propagate_forward(initial: ComplexGaussian, params: PotentialParams,
                      t_grid, coefficient: complex = 1.0,
                      label: str = "I") -> Branch:
    """Propagate an initial real-width Gaussian forward along its guide."""
    guide = integrate_trajectory(initial.q, initial.p, params, t_grid, anchor=0)
    return Branch(guide=guide, anchor_state=initial,
                  coefficient=coefficient, label=label)


def propagate_superposition(initials, r0, delta: float, params: PotentialParams,
                            t_grid) -> Superposition:
    """Propagate a superposition of branches sharing center r0 and width delta.

    initials: sequence of (c_j, p_j) pairs. Each branch is individually
    normalized; the coefficients are kept as configured."""
    initials = list(initials)
    if not initials:
        raise ValueError("at least one branch required")
    branches = []
    for j, (c, p) in enumerate(initials):
        state = gaussians.isotropic_gaussian(r0, p, delta)
        branches.append(propagate_forward(state, params, t_grid,
                                          coefficient=complex(c), label=roman(j)))
    return Superposition(branches=tuple(branches))


def backward_postselected(chi: ComplexGaussian, params: PotentialParams,
                          t_grid, label: str = "f") -> Branch:
    """Branch whose state at the final grid time equals chi exactly.

    The guide is the classical trajectory with boundary data (chi.q, chi.p)
    at t_f integrated backward; width and prefactor are anchored at t_f."""
    t_grid = np.asarray(t_grid, dtype=float)
    guide = integrate_trajectory(chi.q, chi.p, params, t_grid,
                                 anchor=t_grid.size - 1)
    return Branch(guide=guide, anchor_state=chi, coefficient=1.0, label=label)


def evaluate_superposition(psi: Superposition, r, t: float):
    """Total amplitude sum_j c_j psi_j(r, t)."""
    total = None
    for b in psi.branches:
        val = b.coefficient * evaluate(b.state_at(t), r)
        total = val if total is None else total + val
    return total


def value_and_gradient(psi: Superposition, r, t: float,
                       states=None):
    """(psi, grad psi) at r from the analytic branch gradients.

    states: optional pre-computed list of branch states at t (perf hook for
    trajectory integration loops)."""
    r = np.asarray(r, dtype=float)
    if states is None:
        states = [b.state_at(t) for b in psi.branches]
    total = 0.0 + 0.0j
    grad = np.zeros(r.shape, dtype=complex)
    for b, s in zip(psi.branches, states):
        val = b.coefficient * evaluate(s, r)
        total = total + val
        grad = grad + val * (-2.0 * s.alpha * (r - s.q) + 1j * s.p)
    return total, grad


def write_snapshot_csv(path, psi: Superposition, t: float,
                       xs: np.ndarray, ys: np.ndarray) -> None:
    """Sample the superposition on a rectangular mesh and write
    (x, y, Re psi, Im psi, |psi|^2) rows."""
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([xx, yy], axis=-1)
    vals = evaluate_superposition(psi, pts, t)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "re_psi", "im_psi", "psi_sq"])
        for i in range(xs.size):
            for j in range(ys.size):
                v = vals[i, j]
                w.writerow([f"{xs[i]:.17g}", f"{ys[j]:.17g}",
                            f"{v.real:.17g}", f"{v.imag:.17g}",
                            f"{abs(v)**2:.17g}"])
