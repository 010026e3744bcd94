"""Two-qubit density-matrix machinery for the spin-correlation observable.

Basis order is |++>, |+->, |-+>, |--> with particle 1 the left tensor
factor. The basis and tensor-order conventions cancel in every observable
quantity; they are fixed here so matrix elements are testable.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, InvalidState
from .models import SingletModel, SpinModel, WernerModel

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_PAULI = np.stack([PAULI_X, PAULI_Y, PAULI_Z])

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_TOL = 1e-10


def spin_projection(axis: np.ndarray) -> np.ndarray:
    """Single-qubit operator axis . sigma for a unit quantization axis."""
    axis = np.asarray(axis, dtype=float)
    return np.tensordot(axis, _PAULI, axes=(0, 0))


def singlet_state() -> np.ndarray:
    """Density matrix |Psi-><Psi-| of the pair singlet (|+-> - |-+>)/sqrt(2)."""
    psi = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)
    return np.outer(psi, psi.conj())


def werner_state(gamma: float) -> np.ndarray:
    """Werner mixture (1 - gamma) I/4 + gamma |Psi-><Psi-|, gamma in [0, 1]."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"Werner gamma must be in [0, 1], got {gamma}")
    return (1.0 - gamma) * np.eye(4, dtype=complex) / 4.0 + gamma * singlet_state()


def correlation_operator(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Joint observable (q1 . sigma) tensor (q2 . sigma); eigenvalues +-1."""
    return np.kron(spin_projection(q1), spin_projection(q2))


def validate_density_matrix(rho: np.ndarray) -> None:
    """Raise InvalidState unless rho is Hermitian, unit-trace and PSD within tolerance."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise InvalidState(f"expected a 4x4 matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
        raise InvalidState("density matrix is not Hermitian within 1e-12")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise InvalidState("density matrix trace differs from 1 beyond 1e-12")
    if np.min(np.linalg.eigvalsh(rho)) < -EIGENVALUE_TOL:
        raise InvalidState("density matrix has an eigenvalue below -1e-10")


def expectation(rho: np.ndarray, q1: np.ndarray, q2: np.ndarray) -> float:
    """Tr(rho (q1.sigma x q2.sigma)); the quantum correlation of the two outcomes."""
    validate_density_matrix(rho)
    value = np.trace(np.asarray(rho) @ correlation_operator(q1, q2))
    # The trace of a Hermitian product; the imaginary part is numerical noise.
    return float(value.real)


def singlet_correlation(theta_deg):
    """Closed form -cos(theta) for the pure singlet."""
    return -np.cos(np.radians(theta_deg))


def werner_correlation(gamma: float, theta_deg):
    """Closed form -gamma cos(theta) for the Werner mixture."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"Werner gamma must be in [0, 1], got {gamma}")
    return -gamma * np.cos(np.radians(theta_deg))


def analytic_correlation(model: SpinModel, theta_deg):
    """Closed-form E(theta) for the quantum models (Singlet == Werner(1))."""
    if isinstance(model, SingletModel):
        return singlet_correlation(theta_deg)
    if isinstance(model, WernerModel):
        return werner_correlation(model.gamma, theta_deg)
    raise DomainError(f"no closed-form quantum correlation for model {model.name!r}")
