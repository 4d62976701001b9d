import numpy as np
import pytest

from weaktraj.bohmian import (AverageTrajectory, dwell_sequence,
                              integrate_average_trajectory, velocity,
                              weak_momentum_value)
from weaktraj.errors import NodeProximityError
from weaktraj.gaussians import isotropic_gaussian
from weaktraj.propagation import Superposition, propagate_forward


@pytest.fixture(scope="module")
def single(params, grid_short):
    initial = isotropic_gaussian([0.0, 0.0], [17.0, 7.0], 1.3)
    branch = propagate_forward(initial, params, grid_short)
    return Superposition(branches=(branch,))


def test_velocity_at_center_is_classical(single):
    b = single.branches[0]
    for t in (0.2, 0.6, 1.0):
        s = b.state_at(t)
        v = velocity(single, s.q, t)
        assert np.allclose(v, s.p / b.params.m, atol=1e-10)


def test_weak_momentum_real_part_at_center(single):
    b = single.branches[0]
    s = b.state_at(0.5)
    pw = weak_momentum_value(single, s.q, 0.5)
    assert np.allclose(pw.real, s.p, atol=1e-10)


def test_velocity_node_floor(single):
    with pytest.raises(NodeProximityError):
        velocity(single, np.array([200.0, 200.0]), 0.5)


def test_single_branch_streamline_follows_guide(single):
    # for one Gaussian the center streamline is the classical trajectory
    b = single.branches[0]
    r_f = b.state_at(1.0).q
    traj = integrate_average_trajectory(single, r_f, 1.0, 0.0)
    assert not traj.aborted
    for i in (0, len(traj.times) // 2, -1):
        t = traj.times[i]
        assert np.linalg.norm(traj.positions[i] - b.state_at(t).q) < 1e-6


def test_backward_reaches_t_end(single):
    b = single.branches[0]
    traj = integrate_average_trajectory(single, b.state_at(1.0).q, 1.0, 0.3)
    assert traj.times.min() == pytest.approx(0.3, abs=1e-9)


def test_dwell_sequence_filters_chatter():
    times = np.linspace(0.0, 1.0, 101)[::-1]  # backward ordering
    labels = ["II"] * 101
    # a 2-sample blip of "I" in the middle must be ignored
    labels[40] = "I"
    labels[41] = "I"
    traj = AverageTrajectory(times=times,
                             positions=np.zeros((101, 2)),
                             nearest_branch=tuple(labels),
                             density=np.ones(101), aborted=False)
    assert dwell_sequence(traj, min_dwell=0.05) == ["II"]


def test_csv_columns(single, tmp_path):
    b = single.branches[0]
    traj = integrate_average_trajectory(single, b.state_at(1.0).q, 1.0, 0.8)
    path = tmp_path / "avg.csv"
    traj.write_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "t,x,y,nearest_branch,psi_sq,abort_flag"
