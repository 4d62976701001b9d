"""Exact calculus for separable complex Gaussian wavepackets.

A state is

    psi(r) = exp(phase) * exp(-sum_i alpha_i (r_i - q_i)^2) * exp(i p.(r - q))

with per-axis complex width exponents alpha_i (Re alpha_i > 0) and a complex
log-prefactor ``phase`` that absorbs normalization, accumulated action and
the stability prefactor of the propagated form. Everything here is a closed
form: evaluation, overlaps, first moments and normalization. The functions
work in any dimension (the 1D reduction is used by the coupled meter oracle;
the physics scenarios are 2D).

For a real isotropic width the state reduces to the standard normalized
wavepacket (2/(pi delta^2))^(1/2) exp(-(r-q)^2/delta^2) exp(i p.(r-q))
with alpha = 1/delta^2 per axis.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidStateError

__all__ = [
    "ComplexGaussian",
    "isotropic_gaussian",
    "evaluate",
    "overlap",
    "moment_r",
    "norm_squared",
    "normalize",
]


@dataclass(frozen=True)
class ComplexGaussian:
    """Immutable separable complex Gaussian wavepacket.

    q, p: real center and mean momentum, shape (d,).
    alpha: complex per-axis width exponents, shape (d,), Re alpha > 0.
    phase: complex log-prefactor (the amplitude at r = q is exp(phase)).
    """

    q: np.ndarray
    p: np.ndarray
    alpha: np.ndarray
    phase: complex

    def __post_init__(self):
        object.__setattr__(self, "q", np.atleast_1d(np.asarray(self.q, dtype=float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))
        object.__setattr__(self, "alpha", np.atleast_1d(np.asarray(self.alpha, dtype=complex)))
        object.__setattr__(self, "phase", complex(self.phase))
        if not (self.q.shape == self.p.shape == self.alpha.shape):
            raise ValueError("q, p and alpha must share one shape")
        if np.any(self.alpha.real <= 0.0):
            raise InvalidStateError(f"Re(alpha) must be positive, got {self.alpha}")

    @property
    def dim(self) -> int:
        return self.q.size

    def peak_amplitude(self) -> float:
        """|psi| at the center."""
        return float(np.exp(self.phase.real))


def isotropic_gaussian(q, p, delta: float, dim: int = 2) -> ComplexGaussian:
    """Normalized real-width Gaussian: width parameter delta, alpha = 1/delta^2.

    In 2D this is exactly (2/(pi delta^2))^(1/2) e^{-(r-q)^2/delta^2} e^{ip.(r-q)}.
    """
    alpha = np.full(dim, 1.0 / delta**2, dtype=complex)
    # per-axis 1D normalizer (2 alpha / pi)^(1/4)
    phase = 0.25 * dim * np.log(2.0 / (np.pi * delta**2))
    return ComplexGaussian(q=np.asarray(q, float), p=np.asarray(p, float),
                           alpha=alpha, phase=complex(phase))


def evaluate(state: ComplexGaussian, r) -> np.ndarray:
    """Amplitude psi(r). r has shape (..., d); returns shape (...)."""
    r = np.asarray(r, dtype=float)
    dr = r - state.q
    quad = np.sum(state.alpha * dr * dr, axis=-1)
    lin = np.sum(state.p * dr, axis=-1)
    return np.exp(state.phase - quad + 1j * lin)


def _axis_coefficients(bra: ComplexGaussian, ket: ComplexGaussian):
    """Per-axis quadratic/linear/constant coefficients of conj(bra)*ket.

    conj(bra)(x) ket(x) = exp(-A x^2 + B x + C) per axis (phases excluded).
    """
    a1 = np.conj(bra.alpha)
    a2 = ket.alpha
    A = a1 + a2
    if np.any(A.real <= 0.0):
        raise InvalidStateError("combined quadratic form not positive definite")
    B = 2.0 * a1 * bra.q + 2.0 * a2 * ket.q - 1j * bra.p + 1j * ket.p
    C = (-a1 * bra.q**2 - a2 * ket.q**2
         + 1j * bra.p * bra.q - 1j * ket.p * ket.q)
    return A, B, C


def overlap(bra: ComplexGaussian, ket: ComplexGaussian) -> complex:
    """Exact <bra|ket> (bra conjugated) over all of space."""
    A, B, C = _axis_coefficients(bra, ket)
    log_axis = 0.5 * (np.log(np.pi) - np.log(A)) + B * B / (4.0 * A) + C
    return complex(np.exp(np.conj(bra.phase) + ket.phase + np.sum(log_axis)))


def moment_r(bra: ComplexGaussian, ket: ComplexGaussian) -> np.ndarray:
    """Exact <bra|r|ket> as a complex d-vector.

    Per axis the first moment is the overlap times the stationary point
    B/(2A) of the combined complex quadratic form.
    """
    A, B, _ = _axis_coefficients(bra, ket)
    return overlap(bra, ket) * B / (2.0 * A)


def norm_squared(state: ComplexGaussian) -> float:
    return overlap(state, state).real


def normalize(state: ComplexGaussian) -> ComplexGaussian:
    """Return the state rescaled to unit norm. Only the phase changes."""
    n2 = norm_squared(state)
    return replace(state, phase=state.phase - 0.5 * np.log(n2))
