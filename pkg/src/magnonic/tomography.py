"""Joint displaced-parity tomography of the two magnon modes and qubit readout shifts.

Quadratures follow ``X = (m + m^dag)/sqrt(2)``, ``P = i(m^dag - m)/sqrt(2)``,
so a phase-space point is ``alpha = (X + iP)/sqrt(2)``. The joint Wigner
function is

    W(a1, a2) = (4/pi^2) Tr[D2(s a2) D1(s a1) rho D1^dag D2^dag P]

with ``s = +1`` (``convention="as_printed"``, the default) or ``s = -1``
(``convention="standard"``, the textbook ``W(alpha)``). The two differ by a
phase-space inversion. ``W`` is normalised over ``d^2 a1 d^2 a2``; over
``dX1 dP1 dX2 dP2`` it integrates to 4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .entanglement import BipartiteState
from .errors import InvalidArgumentError, NonDispersiveError, SingularParameterError, TruncationError
from .model import MHZ, SystemParams, cavity_mediated_coupling
from .operators import SpaceLayout, lowering_matrix, matrix_exponential

WIGNER_PREFACTOR = 4 / math.pi**2
CONVENTIONS = {"as_printed": 1.0, "standard": -1.0}


def max_safe_alpha(fock_cutoff: int) -> float:
    """Largest ``|alpha|`` with ``|alpha|^2 <= N/4``."""
    return math.sqrt(fock_cutoff / 4)


def _check_alpha(alpha: complex, fock_cutoff: int) -> None:
    if abs(alpha) ** 2 > fock_cutoff / 4 + 1e-12:
        raise TruncationError(
            f"|alpha| = {abs(alpha):.4g} exceeds the truncation-safe bound "
            f"{max_safe_alpha(fock_cutoff):.4g} for fock_cutoff = {fock_cutoff}"
        )


def single_mode_displacement(fock_cutoff: int, alpha: complex) -> np.ndarray:
    _check_alpha(alpha, fock_cutoff)
    a = lowering_matrix(fock_cutoff)
    return matrix_exponential(alpha * a.conj().T - np.conj(alpha) * a)


def displacement(layout: SpaceLayout, mode_index: int, alpha: complex) -> np.ndarray:
    """``exp(alpha m_k^dag - alpha* m_k)`` embedded in the full space."""
    d = single_mode_displacement(layout.fock_cutoff, alpha)
    if mode_index == 1:
        return layout.embed(mode1=d)
    if mode_index == 2:
        return layout.embed(mode2=d)
    raise InvalidArgumentError(f"mode_index must be 1 or 2, got {mode_index!r}")


def single_mode_parity(fock_cutoff: int) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(fock_cutoff)).astype(complex)


def joint_parity(layout: SpaceLayout) -> np.ndarray:
    """``exp(i pi (n1 + n2))``: diagonal ``(-1)^(n1 + n2)``, identity on the qubit."""
    p = single_mode_parity(layout.fock_cutoff)
    return layout.embed(mode1=p, mode2=p)


def _displaced_parities(fock_cutoff: int, alphas: np.ndarray, sign: float) -> np.ndarray:
    """Stack of ``D(s a)^dag P D(s a)`` for every ``a`` in ``alphas``."""
    parity = single_mode_parity(fock_cutoff)
    out = np.empty((len(alphas), fock_cutoff, fock_cutoff), dtype=complex)
    for i, a in enumerate(alphas):
        d = single_mode_displacement(fock_cutoff, sign * a)
        out[i] = d.conj().T @ parity @ d
    return out


def joint_wigner_points(rho12: BipartiteState, alphas_1, alphas_2, convention: str = "as_printed") -> np.ndarray:
    """Joint Wigner values on the outer product of two lists of ``alpha``.

    Returns a complex array ``W[i, j] = W(alphas_1[i], alphas_2[j])``; the
    imaginary part is round-off.
    """
    try:
        sign = CONVENTIONS[convention]
    except KeyError:
        raise InvalidArgumentError(f"unknown convention {convention!r}; use {sorted(CONVENTIONS)}") from None
    n = rho12.fock_cutoff
    alphas_1 = np.atleast_1d(np.asarray(alphas_1, dtype=complex))
    alphas_2 = np.atleast_1d(np.asarray(alphas_2, dtype=complex))
    worst = max(np.max(np.abs(alphas_1)), np.max(np.abs(alphas_2)))
    _check_alpha(worst, n)
    a1 = _displaced_parities(n, alphas_1, sign)
    a2 = _displaced_parities(n, alphas_2, sign)
    # Tr[rho (A1 x A2)] = sum rho[i1 i2, j1 j2] A1[j1, i1] A2[j2, i2]
    t = rho12.tensor()
    half = np.einsum("abcd,xca->xbd", t, a1, optimize=True)
    return WIGNER_PREFACTOR * np.einsum("xbd,ydb->xy", half, a2, optimize=True)


@dataclass(frozen=True)
class WignerGrid:
    axis_1: np.ndarray
    axis_2: np.ndarray
    plane: str
    values: np.ndarray
    convention: dict = field(default_factory=dict)

    MAX_ABS = WIGNER_PREFACTOR + 1e-6


def _plane_alphas(axis: np.ndarray, plane: str) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    if plane == "X1X2":
        return axis / math.sqrt(2)
    if plane == "P1P2":
        return 1j * axis / math.sqrt(2)
    raise InvalidArgumentError(f"plane must be 'X1X2' or 'P1P2', got {plane!r}")


def joint_wigner(
    rho12: BipartiteState,
    axis_1,
    axis_2=None,
    plane: str = "X1X2",
    convention: str = "as_printed",
    imag_tol: float = 1e-10,
) -> WignerGrid:
    """Joint Wigner function over one quadrature plane, off-plane quadratures at 0."""
    axis_1 = np.asarray(axis_1, dtype=float)
    axis_2 = axis_1 if axis_2 is None else np.asarray(axis_2, dtype=float)
    alphas_1 = _plane_alphas(axis_1, plane)
    alphas_2 = _plane_alphas(axis_2, plane)
    worst = max(np.max(np.abs(alphas_1)), np.max(np.abs(alphas_2)))
    if worst**2 > rho12.fock_cutoff / 4 + 1e-12:
        bound = max_safe_alpha(rho12.fock_cutoff)
        raise TruncationError(
            f"grid reaches |alpha| = {worst:.4g}; max usable |alpha| is {bound:.4g} "
            f"(|quadrature| <= {bound * math.sqrt(2):.4g}) at fock_cutoff = {rho12.fock_cutoff}"
        )
    w = joint_wigner_points(rho12, alphas_1, alphas_2, convention)
    resid = float(np.max(np.abs(w.imag), initial=0.0))
    if resid > imag_tol:
        raise InvalidArgumentError(f"Wigner values have imaginary residue {resid:.2e}; input not Hermitian?")
    record = {
        "alpha": "(X + iP)/sqrt(2)",
        "X": "(m + m^dag)/sqrt(2)",
        "P": "i(m^dag - m)/sqrt(2)",
        "displacement": convention,
        "off_plane_quadratures": 0.0,
        "normalisation": "integral over d^2alpha1 d^2alpha2 = 1",
    }
    return WignerGrid(axis_1, axis_2, plane, np.ascontiguousarray(w.real), record)


def default_axis(points: int = 81, extent: float = 3.0) -> np.ndarray:
    return np.linspace(-extent, extent, points)


def displaced_state(rho12: BipartiteState, alpha_1: complex, alpha_2: complex) -> np.ndarray:
    """``D2 D1 rho D1^dag D2^dag`` as an ``N^2 x N^2`` matrix."""
    n = rho12.fock_cutoff
    d = np.kron(single_mode_displacement(n, alpha_1), single_mode_displacement(n, alpha_2))
    return d @ rho12.matrix @ d.conj().T


def joint_number_distribution(rho12: BipartiteState, alpha_1: complex, alpha_2: complex) -> np.ndarray:
    """``P(M1, M2) = <M1, M2| D2 D1 rho D1^dag D2^dag |M1, M2>`` as an ``N x N`` array."""
    n = rho12.fock_cutoff
    return np.real(np.diagonal(displaced_state(rho12, alpha_1, alpha_2))).reshape(n, n).copy()


def parity_from_distribution(dist: np.ndarray) -> float:
    n1, n2 = np.indices(dist.shape)
    return float(np.sum((-1.0) ** (n1 + n2) * dist))


@dataclass(frozen=True)
class DispersiveReport:
    omega_Q_tuned: float
    omega_q_tuned: float
    g_q1_tuned: float
    g_q2_tuned: float
    chi_1: float
    chi_2: float
    distinguishability_ratio: float

    def as_dict(self) -> dict:
        return {
            "omega_Q_tuned_MHz_over_2pi": self.omega_Q_tuned / MHZ,
            "omega_q_tuned_MHz_over_2pi": self.omega_q_tuned / MHZ,
            "g_q1_tuned_MHz_over_2pi": self.g_q1_tuned / MHZ,
            "g_q2_tuned_MHz_over_2pi": self.g_q2_tuned / MHZ,
            "chi_1_MHz_over_2pi": self.chi_1 / MHZ,
            "chi_2_MHz_over_2pi": self.chi_2 / MHZ,
            "distinguishability_ratio": self.distinguishability_ratio,
        }


def dispersive_shift(coupling: float, detuning: float) -> float:
    """``chi = g^2 / (omega_q - omega_k)``."""
    if detuning == 0:
        raise SingularParameterError("qubit resonant with a magnon mode: dispersive shift diverges")
    return coupling**2 / detuning


def dispersive_shifts(p: SystemParams, omega_Q_tuned: float) -> DispersiveReport:
    """Magnon-induced qubit shifts after tuning the bare qubit to ``omega_Q_tuned``."""
    Delta_q = p.omega_c - omega_Q_tuned
    if Delta_q <= 0 or (p.g_cq > 0 and Delta_q / p.g_cq < 2):
        raise NonDispersiveError(
            f"tuned qubit at {omega_Q_tuned / MHZ:g} MHz is not dispersive w.r.t. the cavity"
        )
    Delta_1 = p.omega_c - p.omega_m1
    Delta_2 = p.omega_c - p.omega_m2
    omega_q = omega_Q_tuned - p.g_cq**2 / Delta_q
    omega_1 = p.omega_m1 - p.g_c1**2 / Delta_1
    omega_2 = p.omega_m2 - p.g_c2**2 / Delta_2
    g1 = cavity_mediated_coupling(p.g_cq, p.g_c1, Delta_q, Delta_1)
    g2 = cavity_mediated_coupling(p.g_cq, p.g_c2, Delta_q, Delta_2)
    chi_1 = dispersive_shift(g1, omega_q - omega_1)
    chi_2 = dispersive_shift(g2, omega_q - omega_2)
    ratio = chi_1 / chi_2 if chi_2 != 0 else (math.inf if chi_1 != 0 else 1.0)
    return DispersiveReport(omega_Q_tuned, omega_q, g1, g2, chi_1, chi_2, ratio)
