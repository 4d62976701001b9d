import numpy as np
import pytest

from weaktraj.errors import RangeError
from weaktraj.gaussians import evaluate, isotropic_gaussian, norm_squared
from weaktraj.propagation import (backward_postselected, evaluate_superposition,
                                  propagate_forward, roman,
                                  value_and_gradient)


def test_roman_labels():
    assert [roman(j) for j in range(4)] == ["I", "II", "III", "IV"]


def test_initial_state_preserved(params, grid_short):
    initial = isotropic_gaussian([0.0, 0.0], [17.0, 7.0], 1.3)
    branch = propagate_forward(initial, params, grid_short)
    s0 = branch.state_at(0.0)
    r = np.array([0.3, -0.2])
    assert evaluate(s0, r) == pytest.approx(evaluate(initial, r), abs=1e-12)


def test_guide_consistency(psi_short):
    # the state's center and momentum follow the classical guide exactly
    b = psi_short.branches[0]
    for i in (0, 350, 999):
        t = b.times[i]
        s = b.state_at(t)
        assert np.allclose(s.q, b.guide.q[i], atol=1e-12)
        assert np.allclose(s.p, b.guide.p[i], atol=1e-12)


def test_norm_conserved_along_branch(psi_short):
    b = psi_short.branches[0]
    for t in (0.0, 0.33, 0.77, 1.0):
        assert norm_squared(b.state_at(t)) == pytest.approx(1.0, abs=1e-11)


def test_time_outside_grid_rejected(psi_short):
    with pytest.raises(RangeError):
        psi_short.branches[0].state_at(1.5)


def test_backward_postselected_hits_anchor(params, grid_short):
    chi_f = isotropic_gaussian([2.0, 1.0], [-1.0, 4.0], 0.8)
    branch = backward_postselected(chi_f, params, grid_short)
    s = branch.state_at(1.0)
    r = np.array([2.1, 0.7])
    assert evaluate(s, r) == pytest.approx(evaluate(chi_f, r), abs=1e-10)
    # and the guide really ends where the postselection sits
    assert np.allclose(branch.guide.q[-1], chi_f.q, atol=1e-12)


def test_superposition_linearity(psi_short):
    r = np.array([1.0, 2.0])
    t = 0.5
    manual = sum(b.coefficient * evaluate(b.state_at(t), r)
                 for b in psi_short.branches)
    assert evaluate_superposition(psi_short, r, t) == pytest.approx(manual)


def test_value_and_gradient_matches_finite_difference(psi_short):
    r = np.array([0.8, 1.9])
    t = 0.4
    val, grad = value_and_gradient(psi_short, r, t)
    h = 1e-6
    for axis in range(2):
        e = np.zeros(2)
        e[axis] = h
        fd = (evaluate_superposition(psi_short, r + e, t)
              - evaluate_superposition(psi_short, r - e, t)) / (2.0 * h)
        assert grad[axis] == pytest.approx(fd, rel=1e-7)


def test_width_stays_positive(psi_short):
    for b in psi_short.branches:
        for t in (0.0, 0.5, 1.0):
            assert np.all(b.state_at(t).alpha.real > 0.0)
