import numpy as np
import pytest

from weaktraj.errors import (BranchSeparationError, NoWeakValueError,
                             SequencingError)
from weaktraj.gaussians import ComplexGaussian, isotropic_gaussian, normalize
from weaktraj.propagation import backward_postselected, propagate_forward
from weaktraj.weak import (Meter, interaction_time, pointer_readout,
                           postselection_overlap, sequence_amplitude,
                           simulate_shots, weak_value_expansion_check,
                           weak_trajectory, weak_value_position)


def _retrace(state_source, t_f, params, grid):
    """Real-width postselection with the source's center and momentum at t_f
    (the guide then retraces the source's classical trajectory exactly)."""
    s = state_source.state_at(t_f)
    anchor = normalize(ComplexGaussian(q=s.q, p=s.p, alpha=np.abs(s.alpha),
                                       phase=0.0))
    return backward_postselected(anchor, params, grid)


@pytest.fixture(scope="module")
def branch(params, grid_short):
    initial = isotropic_gaussian([0.0, 0.0], [17.0, 7.0], 1.3)
    return propagate_forward(initial, params, grid_short)


@pytest.fixture(scope="module")
def chi_retrace(params, grid_short, branch):
    """Backward-constructed copy of the branch itself (retracing)."""
    return _retrace(branch, 1.0, params, grid_short)


def test_meter_validation():
    with pytest.raises(ValueError):
        Meter(id="bad", r0=[0.0, 0.0], delta=-1.0)
    with pytest.raises(ValueError):
        Meter(id="bad", r0=[0.0, 0.0], g=-0.1)
    m = Meter(id="ok", r0=[1.0, 2.0], delta=0.1)
    assert m.interaction_radius == pytest.approx(0.4)


def test_interaction_time_on_and_off_path(branch):
    q_half = branch.state_at(0.5).q
    meter_on = Meter(id="on", r0=q_half)
    times = interaction_time(branch, meter_on)
    assert len(times) >= 1
    assert min(abs(t - 0.5) for t in times) < 1e-3
    meter_off = Meter(id="off", r0=q_half + np.array([50.0, 0.0]))
    assert interaction_time(branch, meter_off) == []


def test_retracing_weak_value_is_classical(branch, chi_retrace):
    for t in (0.3, 0.62, 0.9):
        wv = weak_value_position(branch, chi_retrace, t)
        assert np.allclose(wv.real, branch.state_at(t).q, atol=1e-10)
        assert np.max(np.abs(wv.imag)) < 1e-10


def test_weak_value_rescaling_invariance(psi_short, params, grid_short):
    import dataclasses
    from weaktraj.propagation import Superposition
    chi = _retrace(psi_short.branches[0], 1.0, params, grid_short)
    at = psi_short.branches[0].state_at(0.8).q
    base = weak_value_position(psi_short, chi, 0.8, at=at)
    scaled = Superposition(branches=tuple(
        dataclasses.replace(b, coefficient=b.coefficient * (0.2 - 0.9j))
        for b in psi_short.branches))
    wv = weak_value_position(scaled, chi, 0.8, at=at)
    assert np.max(np.abs(wv - base)) < 1e-12 * np.max(np.abs(base))


def test_branch_separation_error(psi_short, params, grid_short):
    # near t = 0 all branches still overlap: a meter there must be rejected
    chi = _retrace(psi_short.branches[0], 1.0, params, grid_short)
    with pytest.raises(BranchSeparationError):
        weak_value_position(psi_short, chi, 0.01,
                            at=psi_short.branches[0].state_at(0.01).q)


def test_no_weak_value_error(params, grid_short, branch):
    # postselection with no overlap on the branch
    far = isotropic_gaussian([300.0, 300.0], [0.0, 0.0], 0.5)
    chi = backward_postselected(far, params, grid_short)
    with pytest.raises(NoWeakValueError):
        weak_value_position(branch, chi, 0.5)


def test_weak_trajectory_statuses(psi_short, params, grid_short):
    chi = _retrace(psi_short.branches[0], 1.0, params, grid_short)
    q_I = psi_short.branches[0].state_at(0.8).q
    q_II = psi_short.branches[1].state_at(0.8).q
    meters = [Meter(id="on_I", r0=q_I),
              Meter(id="on_II", r0=q_II),
              Meter(id="nowhere", r0=[80.0, 80.0])]
    wt = weak_trajectory(psi_short, chi, meters)
    silent = dict(wt.silent)
    assert silent["nowhere"] == "never-in-range"
    assert silent["on_II"] == "no-chi-support"
    (sample,) = wt.samples
    assert sample.meter == "on_I"
    assert np.allclose(sample.value.real, q_I, atol=1e-6)


def test_duplicate_meter_ids_rejected(psi_short, params, grid_short):
    chi = _retrace(psi_short.branches[0], 1.0, params, grid_short)
    meters = [Meter(id="dup", r0=[1.0, 1.0]), Meter(id="dup", r0=[2.0, 2.0])]
    with pytest.raises(ValueError):
        weak_trajectory(psi_short, chi, meters)


def test_pointer_readout_signs():
    meter = Meter(id="m", r0=[0.0, 0.0], delta=0.2, g=0.01)
    wv = np.array([3.0 + 2.0j, -1.0 - 4.0j])
    ro = pointer_readout(meter, wv)
    assert np.allclose(ro.momentum_shift, [-0.03, 0.01])
    assert np.allclose(ro.position_shift,
                       0.5 * 0.01 * 0.2**2 * np.array([2.0, -4.0]))


def test_simulate_shots_deterministic_and_unbiased():
    meter = Meter(id="m", r0=[0.0, 0.0], delta=0.2, g=0.01)
    ro = pointer_readout(meter, np.array([5.0 + 0j, -2.0 + 0j]))
    a = simulate_shots(ro, 4000, seed=7)
    b = simulate_shots(ro, 4000, seed=7)
    assert np.array_equal(a["mean_momentum_shift"], b["mean_momentum_shift"])
    pull = np.abs(a["mean_momentum_shift"] - ro.momentum_shift)
    assert np.all(pull < 5.0 * a["standard_error"])


def test_structural_check(branch, chi_retrace):
    report = weak_value_expansion_check(branch, chi_retrace, 0.5)
    assert report is not None


def test_sequence_amplitude_window_overlap(branch, chi_retrace):
    q1 = branch.state_at(0.5).q
    q2 = branch.state_at(0.5005).q
    meters = [Meter(id="a", r0=q1, tau=0.01), Meter(id="b", r0=q2, tau=0.01)]
    with pytest.raises(SequencingError):
        sequence_amplitude(branch, chi_retrace, meters)


def test_postselection_overlap_norm(psi_short):
    # <psi|psi> is the (conserved) norm of the superposition
    n0 = postselection_overlap(psi_short, psi_short, 0.0).real
    n1 = postselection_overlap(psi_short, psi_short, 1.0).real
    assert n1 == pytest.approx(n0, abs=1e-11)
