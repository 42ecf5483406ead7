"""Small-dimension complex linear algebra for qubits and qubit pairs.

Operators are plain ``numpy`` arrays (2x2 or 4x4, complex). Bloch vectors are
real arrays of shape ``(3,)``. The Pauli convention is

    sigma_1 = [[0, 1], [1, 0]]
    sigma_2 = [[0, -i], [i, 0]]
    sigma_3 = [[1, 0], [0, -1]]

so that ``c0 * I + v . sigma`` has lower-left entry ``v_x + i v_y``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# absolute tolerances: validity checks vs. algebraic round-trips
ATOL_VALID = 1e-10
ATOL_ALGEBRA = 1e-12

SIGMA0 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])


def as_operator(op) -> np.ndarray:
    arr = np.asarray(op, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def hermiticity_residual(op) -> float:
    op = as_operator(op)
    return float(np.max(np.abs(op - op.conj().T)))


def is_hermitian(op, atol: float = ATOL_VALID) -> bool:
    return hermiticity_residual(op) <= atol


def bloch_decompose(op) -> tuple[float, np.ndarray]:
    """Split a Hermitian 2x2 operator into ``c0 * I + v . sigma``.

    A density matrix ``(I + s . sigma) / 2`` gives ``c0 = 1/2`` and ``v = s / 2``.

    Raises
    ------
    DomainError
        If ``op`` is not 2x2 or not Hermitian within ``ATOL_VALID``.
    """
    op = as_operator(op)
    if op.shape != (2, 2):
        raise DomainError(f"bloch_decompose needs a 2x2 operator, got {op.shape}")
    if not is_hermitian(op):
        raise DomainError(
            f"operator is not Hermitian (residual {hermiticity_residual(op):.3g})"
        )
    c0 = float(np.trace(op).real) / 2
    v = np.array([np.trace(op @ p).real / 2 for p in PAULI])
    return c0, v


def op_from_bloch(c0: float, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return c0 * SIGMA0 + np.tensordot(v, PAULI, axes=1)


def density_from_bloch(s) -> np.ndarray:
    """Qubit density matrix ``(I + s . sigma) / 2``."""
    return op_from_bloch(0.5, 0.5 * np.asarray(s, dtype=float))


def bloch_of_density(rho) -> np.ndarray:
    c0, v = bloch_decompose(rho)
    return 2 * v


def tensor(a, b) -> np.ndarray:
    return np.kron(as_operator(a), as_operator(b))


def expectation(rho, op) -> float:
    """``tr[rho op]`` as a real number."""
    rho = as_operator(rho)
    op = as_operator(op)
    if rho.shape != op.shape:
        raise DomainError(f"dimension mismatch: state {rho.shape} vs operator {op.shape}")
    return float(np.einsum("ij,ji->", rho, op).real)


def projector(vec) -> np.ndarray:
    """Outer product ``|v><v|`` for a (possibly unnormalized) vector."""
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


@dataclass(frozen=True)
class DensityReport:
    hermitian: bool
    trace_one: bool
    psd: bool
    hermiticity_residual: float
    trace_residual: float
    min_eigenvalue: float

    @property
    def valid(self) -> bool:
        return self.hermitian and self.trace_one and self.psd

    def failures(self) -> list[str]:
        out = []
        if not self.hermitian:
            out.append(f"not Hermitian (residual {self.hermiticity_residual:.3g})")
        if not self.trace_one:
            out.append(f"trace != 1 (off by {self.trace_residual:.3g})")
        if not self.psd:
            out.append(f"not PSD (min eigenvalue {self.min_eigenvalue:.3g})")
        return out


def validate_density(op, atol: float = ATOL_VALID) -> DensityReport:
    """Check Hermiticity, unit trace and positivity; never raises on bad input."""
    op = as_operator(op)
    herm = hermiticity_residual(op)
    tr_res = abs(complex(np.trace(op)) - 1.0)
    # eigenvalues of the Hermitian part, so PSD is judged even when Hermiticity fails
    min_eig = float(np.linalg.eigvalsh((op + op.conj().T) / 2).min())
    return DensityReport(
        hermitian=herm <= atol,
        trace_one=tr_res <= atol,
        psd=min_eig >= -atol,
        hermiticity_residual=herm,
        trace_residual=tr_res,
        min_eigenvalue=min_eig,
    )


@dataclass(frozen=True)
class PureQubit:
    """One-photon polarization state ``mu |1>_x|0>_y + nu |0>_x|1>_y``."""

    mu: complex
    nu: complex

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.mu, self.nu], dtype=complex)

    @property
    def norm_residual(self) -> float:
        return abs(abs(self.mu) ** 2 + abs(self.nu) ** 2 - 1.0)

    def density(self) -> np.ndarray:
        return projector(self.vector)


# -- two-qubit states -------------------------------------------------------

def singlet() -> np.ndarray:
    psi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return projector(psi)


def werner(eta: float) -> np.ndarray:
    """``eta * singlet + (1 - eta) * I/4``."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"Werner weight must lie in [0, 1], got {eta}")
    return eta * singlet() + (1 - eta) * np.eye(4, dtype=complex) / 4


def product_state(s_a, s_b) -> np.ndarray:
    return np.kron(density_from_bloch(s_a), density_from_bloch(s_b))


def pure_two_qubit(amplitudes) -> np.ndarray:
    psi = np.asarray(amplitudes, dtype=complex)
    if psi.shape != (4,):
        raise DomainError(f"two-qubit amplitudes need 4 entries, got {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > ATOL_VALID:
        raise DomainError(f"amplitudes are not normalized (norm {norm:.12g})")
    return projector(psi)


def reduced_a(rho) -> np.ndarray:
    return np.einsum("ikjk->ij", as_operator(rho).reshape(2, 2, 2, 2))


def reduced_b(rho) -> np.ndarray:
    return np.einsum("kikj->ij", as_operator(rho).reshape(2, 2, 2, 2))


# -- random generators (tests, self-check) ----------------------------------

def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_bloch(rng: np.random.Generator) -> np.ndarray:
    """Uniform point in the Bloch ball."""
    return random_unit_vector(rng) * rng.random() ** (1 / 3)


def random_density(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Random full-rank density matrix (Ginibre ensemble)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


def random_separable(rng: np.random.Generator, n_terms: int = 100) -> np.ndarray:
    """Convex mixture of ``n_terms`` random product states."""
    w = rng.random(n_terms)
    w /= w.sum()
    rho = np.zeros((4, 4), dtype=complex)
    for wi in w:
        rho += wi * product_state(random_bloch(rng), random_bloch(rng))
    return rho
