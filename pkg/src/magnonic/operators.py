"""Truncated qubit x magnon x magnon Hilbert space and its elementary operators.

Subsystem order is fixed to (qubit, magnon 1, magnon 2). The qubit basis is
ordered (g, e), so ``sigma_z = diag(-1, +1)`` and the composite index of
``|g, 0, 0>`` is 0. Operators are plain dense ``complex128`` arrays marked
read-only so they can be shared freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError

QUBIT_DIM = 2

_QUBIT_MATRICES = {
    # basis order (g, e)
    "sigma_minus": np.array([[0, 1], [0, 0]], dtype=complex),
    "sigma_plus": np.array([[0, 0], [1, 0]], dtype=complex),
    "sigma_z": np.array([[-1, 0], [0, 1]], dtype=complex),
    "sigma_x": np.array([[0, 1], [1, 0]], dtype=complex),
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpaceLayout:
    """Layout of the truncated space: one qubit and two magnon modes.

    Parameters
    ----------
    fock_cutoff : int
        Number of Fock levels ``N`` kept per magnon mode (levels ``0..N-1``).
    """

    fock_cutoff: int
    qubit_dim: int = field(default=QUBIT_DIM, init=False)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.qubit_dim, self.fock_cutoff, self.fock_cutoff)

    @property
    def dim(self) -> int:
        return self.qubit_dim * self.fock_cutoff**2

    @property
    def magnon_dim(self) -> int:
        return self.fock_cutoff**2

    def identity(self) -> np.ndarray:
        return _frozen(np.eye(self.dim, dtype=complex))

    def embed(self, qubit=None, mode1=None, mode2=None) -> np.ndarray:
        """Tensor-embed local factors; ``None`` stands for the identity."""
        n = self.fock_cutoff
        factors = [
            np.eye(self.qubit_dim) if qubit is None else np.asarray(qubit),
            np.eye(n) if mode1 is None else np.asarray(mode1),
            np.eye(n) if mode2 is None else np.asarray(mode2),
        ]
        out = np.kron(np.kron(factors[0], factors[1]), factors[2]).astype(complex)
        return _frozen(out)

    def basis_index(self, qubit: int, n1: int, n2: int) -> int:
        """Composite index of ``|qubit, n1, n2>`` (qubit 0 = g, 1 = e)."""
        n = self.fock_cutoff
        if not (0 <= qubit < 2 and 0 <= n1 < n and 0 <= n2 < n):
            raise InvalidArgumentError(f"basis label {(qubit, n1, n2)} outside layout")
        return (qubit * n + n1) * n + n2

    def basis_ket(self, qubit: int, n1: int, n2: int) -> np.ndarray:
        ket = np.zeros(self.dim, dtype=complex)
        ket[self.basis_index(qubit, n1, n2)] = 1.0
        return ket

    def check_operator(self, op: np.ndarray, name: str = "operator") -> None:
        if np.shape(op) != (self.dim, self.dim):
            raise InvalidArgumentError(
                f"{name} has shape {np.shape(op)}, layout needs {(self.dim, self.dim)}"
            )


def make_layout(fock_cutoff: int) -> SpaceLayout:
    if int(fock_cutoff) != fock_cutoff or fock_cutoff < 2:
        raise InvalidArgumentError(f"fock_cutoff must be an integer >= 2, got {fock_cutoff!r}")
    return SpaceLayout(int(fock_cutoff))


def lowering_matrix(n: int) -> np.ndarray:
    """Single-mode truncated lowering operator, ``<k-1|a|k> = sqrt(k)``."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def annihilation(layout: SpaceLayout, mode_index: int) -> np.ndarray:
    a = lowering_matrix(layout.fock_cutoff)
    if mode_index == 1:
        return layout.embed(mode1=a)
    if mode_index == 2:
        return layout.embed(mode2=a)
    raise InvalidArgumentError(f"mode_index must be 1 or 2, got {mode_index!r}")


def creation(layout: SpaceLayout, mode_index: int) -> np.ndarray:
    return _frozen(annihilation(layout, mode_index).conj().T.copy())


def number(layout: SpaceLayout, mode_index: int) -> np.ndarray:
    a = lowering_matrix(layout.fock_cutoff)
    n_op = a.conj().T @ a
    if mode_index == 1:
        return layout.embed(mode1=n_op)
    if mode_index == 2:
        return layout.embed(mode2=n_op)
    raise InvalidArgumentError(f"mode_index must be 1 or 2, got {mode_index!r}")


def qubit_op(layout: SpaceLayout, which: str) -> np.ndarray:
    try:
        local = _QUBIT_MATRICES[which]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown qubit operator {which!r}; expected one of {sorted(_QUBIT_MATRICES)}"
        ) from None
    return layout.embed(qubit=local)


def dagger(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _is_hermitian(a: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def matrix_exponential(a: np.ndarray) -> np.ndarray:
    """Matrix exponential.

    Hermitian and anti-Hermitian inputs go through an eigendecomposition,
    which keeps ``exp`` of an anti-Hermitian matrix unitary to machine
    precision. Anything else uses scaling-and-squaring.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"matrix_exponential needs a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError("matrix_exponential input has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
    if _is_hermitian(a, 1e-14 * scale):
        w, v = np.linalg.eigh((a + a.conj().T) / 2)
        return (v * np.exp(w)) @ v.conj().T
    if _is_hermitian(1j * a, 1e-14 * scale):
        h = 1j * a
        w, v = np.linalg.eigh((h + h.conj().T) / 2)
        return (v * np.exp(-1j * w)) @ v.conj().T
    return scipy.linalg.expm(a)


def hermitian_eigenvalues(a: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {a.shape}")
    if not _is_hermitian(a, tol):
        dev = float(np.max(np.abs(a - a.conj().T)))
        raise InvalidArgumentError(f"matrix is not Hermitian (max deviation {dev:.3e} > {tol:g})")
    return np.linalg.eigvalsh(a)


@dataclass(frozen=True)
class DensityState:
    """A validated density matrix on ``layout`` at ``time`` (seconds)."""

    layout: SpaceLayout
    matrix: np.ndarray
    time: float = 0.0

    HERMITIAN_TOL = 1e-10
    TRACE_TOL = 1e-8
    POSITIVITY_TOL = 1e-8

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        self.layout.check_operator(m, "density matrix")
        object.__setattr__(self, "matrix", _frozen(m))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def trace_error(self) -> float:
        return float(abs(np.trace(self.matrix) - 1.0))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)[0])

    def validate(self) -> "DensityState":
        herm = self.hermiticity_error()
        if herm > self.HERMITIAN_TOL:
            raise InvalidArgumentError(f"state not Hermitian: deviation {herm:.3e}")
        tr = self.trace_error()
        if tr > self.TRACE_TOL:
            raise InvalidArgumentError(f"state trace off by {tr:.3e}")
        lam = self.min_eigenvalue()
        if lam < -self.POSITIVITY_TOL:
            raise InvalidArgumentError(f"state not positive: min eigenvalue {lam:.3e}")
        return self

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))

    @classmethod
    def pure(cls, layout: SpaceLayout, ket: np.ndarray, time: float = 0.0) -> "DensityState":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(layout, np.outer(ket, ket.conj()), time)

    @classmethod
    def ground(cls, layout: SpaceLayout) -> "DensityState":
        """``|g, 0, 0><g, 0, 0|``."""
        return cls.pure(layout, layout.basis_ket(0, 0, 0))
