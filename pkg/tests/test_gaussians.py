import numpy as np
import pytest

from weaktraj.gaussians import (ComplexGaussian, evaluate, isotropic_gaussian,
                                moment_r, norm_squared, normalize, overlap)


DELTA = 0.7


@pytest.fixture
def state():
    return isotropic_gaussian([1.0, -2.0], [3.0, 0.5], DELTA)


def test_normalized(state):
    assert norm_squared(state) == pytest.approx(1.0, abs=1e-14)


def test_peak_value(state):
    # normalized 2D isotropic Gaussian peaks at sqrt(2 / (pi delta^2))
    peak = abs(evaluate(state, state.q))
    assert peak == pytest.approx(np.sqrt(2.0 / (np.pi * DELTA**2)), rel=1e-12)


def test_width_convention(state):
    # amplitude falls to 1/e of the peak one width away from the center
    peak = abs(evaluate(state, state.q))
    off = abs(evaluate(state, state.q + np.array([DELTA, 0.0])))
    assert off / peak == pytest.approx(np.exp(-1.0), rel=1e-12)


def test_momentum_phase(state):
    # the plane-wave factor advances by exp(i p . dr)
    a = evaluate(state, state.q)
    dr = np.array([0.1, 0.0])
    b = evaluate(state, state.q + dr)
    assert np.angle(b / a) == pytest.approx(state.p @ dr, abs=1e-12)


def test_overlap_self_and_hermiticity(state):
    other = isotropic_gaussian([1.2, -1.7], [2.0, 1.0], 0.9)
    assert overlap(state, state) == pytest.approx(1.0, abs=1e-14)
    assert overlap(state, other) == pytest.approx(np.conj(overlap(other, state)))


def test_overlap_against_quadrature(state):
    other = isotropic_gaussian([1.4, -2.2], [1.0, -0.5], 0.55)
    xs = np.linspace(-4.0, 6.0, 801)
    ys = np.linspace(-7.0, 3.0, 801)
    pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    dv = (xs[1] - xs[0]) * (ys[1] - ys[0])
    num = np.sum(np.conj(evaluate(state, pts)) * evaluate(other, pts)) * dv
    assert overlap(state, other) == pytest.approx(num, abs=1e-8)


def test_moment_r_diagonal(state):
    assert moment_r(state, state) == pytest.approx(state.q, abs=1e-13)


def test_moment_r_two_packets():
    # for two real Gaussians of equal width the position matrix element
    # centers on the midpoint of the two packets
    a = isotropic_gaussian([0.0, 0.0], [0.0, 0.0], 1.0)
    b = isotropic_gaussian([2.0, -1.0], [0.0, 0.0], 1.0)
    m = moment_r(a, b) / overlap(a, b)
    assert np.allclose(m, [1.0, -0.5], atol=1e-12)


def test_normalize():
    raw = ComplexGaussian(q=np.array([0.0, 0.0]), p=np.array([1.0, 0.0]),
                          alpha=np.array([2.0 + 0.5j, 1.0 + 0.0j]),
                          phase=0.3 + 0.2j)
    state = normalize(raw)
    assert norm_squared(state) == pytest.approx(1.0, abs=1e-13)


def test_invalid_width_rejected():
    from weaktraj.errors import InvalidStateError
    with pytest.raises((InvalidStateError, ValueError)):
        ComplexGaussian(q=np.zeros(2), p=np.zeros(2),
                        alpha=np.array([-1.0 + 0j, 1.0 + 0j]), phase=0.0)
