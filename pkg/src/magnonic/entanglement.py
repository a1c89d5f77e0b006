"""Two-magnon reduced states and logarithmic negativity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .operators import DensityState


@dataclass(frozen=True)
class BipartiteState:
    """Density matrix over (magnon 1, magnon 2), index ``n1 * N + n2``."""

    fock_cutoff: int
    matrix: np.ndarray

    def __post_init__(self):
        n2 = self.fock_cutoff**2
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (n2, n2):
            raise InvalidArgumentError(f"bipartite matrix has shape {m.shape}, expected {(n2, n2)}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def validate(self, herm_tol: float = 1e-10, trace_tol: float = 1e-8) -> "BipartiteState":
        herm = float(np.max(np.abs(self.matrix - self.matrix.conj().T)))
        if herm > herm_tol:
            raise InvalidArgumentError(f"bipartite state not Hermitian: deviation {herm:.3e}")
        tr = abs(np.trace(self.matrix) - 1)
        if tr > trace_tol:
            raise InvalidArgumentError(f"bipartite state trace off by {tr:.3e}")
        return self

    def tensor(self) -> np.ndarray:
        """View as ``[n1, n2, n1', n2']``."""
        n = self.fock_cutoff
        return self.matrix.reshape(n, n, n, n)

    @classmethod
    def product(cls, rho_a: np.ndarray, rho_b: np.ndarray) -> "BipartiteState":
        return cls(np.shape(rho_a)[0], np.kron(rho_a, rho_b))

    def padded(self, fock_cutoff: int) -> "BipartiteState":
        """Embed into a larger per-mode cutoff (zeros in the new levels)."""
        n = self.fock_cutoff
        if fock_cutoff < n:
            raise InvalidArgumentError(f"cannot pad cutoff {n} down to {fock_cutoff}")
        if fock_cutoff == n:
            return self
        big = np.zeros((fock_cutoff,) * 4, dtype=complex)
        big[:n, :n, :n, :n] = self.tensor()
        return BipartiteState(fock_cutoff, big.reshape(fock_cutoff**2, fock_cutoff**2))


def partial_trace_qubit(rho: DensityState) -> BipartiteState:
    n = rho.layout.fock_cutoff
    m = rho.matrix.reshape(2, n * n, 2, n * n)
    return BipartiteState(n, m[0, :, 0, :] + m[1, :, 1, :])


def partial_transpose(rho12: BipartiteState, which_mode: int = 2) -> np.ndarray:
    n = rho12.fock_cutoff
    t = rho12.tensor()
    if which_mode == 1:
        out = t.transpose(2, 1, 0, 3)
    elif which_mode == 2:
        out = t.transpose(0, 3, 2, 1)
    else:
        raise InvalidArgumentError(f"which_mode must be 1 or 2, got {which_mode!r}")
    return np.ascontiguousarray(out).reshape(n * n, n * n)


def trace_norm_log(rho12: BipartiteState, which_mode: int = 2) -> float:
    """``ln ||rho^T_k||_1`` without clamping."""
    pt = partial_transpose(rho12, which_mode)
    lam = np.linalg.eigvalsh((pt + pt.conj().T) / 2)
    return float(np.log(np.sum(np.abs(lam))))


def logarithmic_negativity(rho12: BipartiteState, which_mode: int = 2) -> float:
    """Natural-log negativity, clamped at 0 against round-off."""
    return max(0.0, trace_norm_log(rho12, which_mode))


@dataclass(frozen=True)
class EntanglementTrace:
    times: np.ndarray
    values: np.ndarray
    max_value: float
    optimal_time: float


def entanglement_trace_from_values(times, values) -> EntanglementTrace:
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    i = int(np.argmax(values))  # first maximum wins ties
    return EntanglementTrace(times, values, float(values[i]), float(times[i]))


def entanglement_trace(run) -> EntanglementTrace:
    """E_N along an :class:`~magnonic.dynamics.EvolutionResult`."""
    if "E_N" in run.observables and len(run.observables["E_N"]) == len(run.times):
        values = run.observables["E_N"]
    else:
        if len(run.states) != len(run.times):
            raise InvalidArgumentError("run kept neither states nor an E_N observable")
        values = [logarithmic_negativity(partial_trace_qubit(s)) for s in run.states]
    return entanglement_trace_from_values(run.times, values)


def two_mode_squeezed_vacuum(fock_cutoff: int, r: float) -> BipartiteState:
    """TMSV by its Fock expansion ``sum_n tanh(r)^n / cosh(r) |n, n>``, renormalised."""
    amps = np.tanh(r) ** np.arange(fock_cutoff) / np.cosh(r)
    psi = np.zeros((fock_cutoff, fock_cutoff), dtype=complex)
    np.fill_diagonal(psi, amps)
    psi = psi.ravel() / np.linalg.norm(psi)
    return BipartiteState(fock_cutoff, np.outer(psi, psi.conj()))
