"""Second-order time averaging of harmonic interaction terms, and checks of the
hand-derived effective Hamiltonian against it.

For ``H_int = sum_k h_k exp(-i w_k t) + h.c.`` the averaged Hamiltonian is

    H = sum_{m,n} (1/wbar_mn) [h_m^dag, h_n] exp(i (w_m - w_n) t),
    1/wbar_mn = (1/w_m + 1/w_n) / 2.

The ``m = n`` terms form the static part; every ``m != n`` block is kept as
an (operator, beat frequency) pair, and the ``(n, m)`` block is its
Hermitian conjugate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .model import (
    MHZ,
    DerivedParams,
    SystemParams,
    build_H5_terms,
    build_Heff,
    derive_params,
    retune_magnons,
)
from .operators import SpaceLayout, annihilation, commutator, dagger, qubit_op

STATIC_RTOL = 1e-10
SMALLNESS_LIMIT = 0.1


@dataclass(frozen=True)
class FrequencyTaggedTerms:
    terms: tuple[tuple[np.ndarray, float], ...]

    def __post_init__(self):
        freqs = [w for _, w in self.terms]
        if any(not (w > 0) for w in freqs):
            raise InvalidArgumentError(f"all frequencies must be positive, got {freqs}")
        for i in range(len(freqs)):
            for j in range(i):
                if math.isclose(freqs[i], freqs[j], rel_tol=1e-12):
                    raise InvalidArgumentError(
                        f"degenerate frequencies {freqs[j]:.6g} and {freqs[i]:.6g} (terms {j + 1}, {i + 1})"
                    )


@dataclass(frozen=True)
class OscillatingPart:
    operator: np.ndarray
    beat: float
    indices: tuple[int, int]  # 1-based (m, n)


@dataclass(frozen=True)
class EffectiveDecomposition:
    static_part: np.ndarray
    oscillating_parts: tuple[OscillatingPart, ...]
    coefficient_table: dict = field(default_factory=dict)

    def at(self, t: float) -> np.ndarray:
        out = np.array(self.static_part, dtype=complex)
        for part in self.oscillating_parts:
            out = out + part.operator * np.exp(1j * part.beat * t)
        return out

    def part(self, m: int, n: int) -> OscillatingPart:
        for p in self.oscillating_parts:
            if p.indices == (m, n):
                return p
        raise KeyError((m, n))

    def beat_frequencies(self) -> list[float]:
        """``|w_m - w_n|`` for ``m < n``."""
        return [abs(p.beat) for p in self.oscillating_parts if p.indices[0] < p.indices[1]]


def james_jerke(terms: FrequencyTaggedTerms | Sequence[tuple[np.ndarray, float]]) -> EffectiveDecomposition:
    if not isinstance(terms, FrequencyTaggedTerms):
        terms = FrequencyTaggedTerms(tuple((np.asarray(h), float(w)) for h, w in terms))
    hs = [np.asarray(h, dtype=complex) for h, _ in terms.terms]
    ws = [w for _, w in terms.terms]
    static = np.zeros_like(hs[0])
    parts = []
    table = {}
    for m, (hm, wm) in enumerate(zip(hs, ws), start=1):
        for n, (hn, wn) in enumerate(zip(hs, ws), start=1):
            weight = (1 / wm + 1 / wn) / 2
            block = weight * commutator(dagger(hm), hn)
            if m == n:
                static = static + block
                table[f"inv_omega_{m}"] = weight
            else:
                parts.append(OscillatingPart(block, wm - wn, (m, n)))
                if m < n:
                    table[f"inv_omega_bar_{m}{n}"] = weight
    return EffectiveDecomposition(static, tuple(parts), table)


# -- checks against the hand-built effective Hamiltonian ----------------------


def dropped_constants(p: SystemParams, d: DerivedParams) -> tuple[float, float]:
    """c-number and constant ``sigma_z`` terms that the closed form omits.

    Returns ``(identity_coefficient, sigma_z_coefficient)``.
    """
    w2 = p.Omega_2 + d.delta_m
    w3 = p.Omega_2 - d.delta_m
    g1s, g2s = d.g_q1**2, d.g_q2**2
    identity = (g1s - g2s) * (1 / w3 - 1 / w2) / 8
    sigma_z = (g1s + g2s) * (1 / w2 + 1 / w3) / 8
    return identity, sigma_z


def truncation_safe_indices(layout: SpaceLayout, max_level: int | None = None) -> np.ndarray:
    """Composite indices with ``n1, n2 <= max_level`` (default ``N - 2``)."""
    n = layout.fock_cutoff
    top = n - 2 if max_level is None else max_level
    q, n1, n2 = np.meshgrid(np.arange(2), np.arange(n), np.arange(n), indexing="ij")
    keep = (n1 <= top) & (n2 <= top)
    return np.flatnonzero(keep.ravel())


@dataclass(frozen=True)
class StaticVerification:
    max_deviation: float
    relative_deviation: float
    passed: bool
    identity_shift: float
    sigma_z_shift: float

    def as_dict(self) -> dict:
        return {
            "max_deviation_MHz_over_2pi": self.max_deviation / MHZ,
            "relative_deviation": self.relative_deviation,
            "passed": self.passed,
            "identity_shift_MHz_over_2pi": self.identity_shift / MHZ,
            "sigma_z_shift_MHz_over_2pi": self.sigma_z_shift / MHZ,
        }


def verify_heff_static(layout: SpaceLayout, p: SystemParams, d: DerivedParams, rtol: float = STATIC_RTOL) -> StaticVerification:
    """Compare the averaged static part with the closed-form effective Hamiltonian.

    The comparison adds back the two constants the closed form drops (see
    :func:`dropped_constants`) and is restricted to ``n1, n2 <= N - 2``, where
    the truncated ladder operators still obey ``[m, m^dag] = 1``.
    """
    decomp = james_jerke(build_H5_terms(layout, p, d))
    c0, cz = dropped_constants(p, d)
    target = build_Heff(layout, p, d) + c0 * layout.identity() + cz * qubit_op(layout, "sigma_z")
    keep = truncation_safe_indices(layout)
    diff = (decomp.static_part - target)[np.ix_(keep, keep)]
    dev = float(np.max(np.abs(diff)))
    scale = float(np.max(np.abs(target[np.ix_(keep, keep)])))
    rel = dev / scale if scale > 0 else dev
    return StaticVerification(dev, rel, rel <= rtol, c0, cz)


def closed_form_oscillating(layout: SpaceLayout, p: SystemParams, d: DerivedParams) -> dict[tuple[int, int], np.ndarray]:
    """The three xi-weighted commutators, keyed by the (m, n) block they should equal."""
    m1, m2 = annihilation(layout, 1), annihilation(layout, 2)
    sm, sp = qubit_op(layout, "sigma_minus"), qubit_op(layout, "sigma_plus")
    hop = d.g_12 * dagger(m1) @ m2
    a = d.g_q1 * m1 + d.g_q2 * dagger(m2)
    b = d.g_q1 * dagger(m1) + d.g_q2 * m2
    return {
        (1, 2): d.xi_1 * commutator(hop, a @ sm),
        (1, 3): d.xi_2 * commutator(hop, b @ sm),
        (3, 2): d.xi_3 * commutator(a @ sp, a @ sm),
    }


@dataclass(frozen=True)
class OscillatingVerification:
    deviations: dict
    passed: bool


def verify_heff_oscillating(layout: SpaceLayout, p: SystemParams, d: DerivedParams, rtol: float = STATIC_RTOL) -> OscillatingVerification:
    decomp = james_jerke(build_H5_terms(layout, p, d))
    deviations = {}
    ok = True
    for key, expected in closed_form_oscillating(layout, p, d).items():
        got = decomp.part(*key).operator
        dev = float(np.max(np.abs(got - expected)))
        scale = float(np.max(np.abs(got)))
        rel = dev / scale if scale > 0 else dev / MHZ
        deviations[f"{key[0]}{key[1]}"] = rel
        ok = ok and rel <= rtol
    return OscillatingVerification(deviations, ok)


@dataclass(frozen=True)
class MagnitudeEntry:
    indices: tuple[int, int]
    beat: float
    operator_norm: float
    ratio: float
    scale_ratio: float
    flagged: bool


def _restricted_norm(op: np.ndarray, keep: np.ndarray | None) -> float:
    if keep is not None:
        op = op[np.ix_(keep, keep)]
    return float(np.linalg.norm(op, 2))


def _safe_ratio(num: float, den: float) -> float:
    if num == 0:
        return 0.0
    return math.inf if den == 0 else num / abs(den)


def oscillating_magnitude_report(
    decomp: EffectiveDecomposition,
    layout: SpaceLayout | None = None,
    terms: FrequencyTaggedTerms | Sequence[tuple[np.ndarray, float]] | None = None,
    max_occupation: int = 1,
    limit: float = SMALLNESS_LIMIT,
) -> list[MagnitudeEntry]:
    """Smallness of each residual oscillating block relative to its beat frequency.

    ``ratio`` is ``||block|| / |beat|``. When ``terms`` are given,
    ``scale_ratio`` is ``(1/wbar_mn) ||h_m|| ||h_n|| / |beat|``, the
    coupling-product bound, which stays informative when the commutator
    itself vanishes. Norms are spectral norms; with ``layout`` they are taken
    on the few-excitation block ``n1, n2 <= max_occupation``.
    """
    keep = truncation_safe_indices(layout, max_occupation) if layout is not None else None
    term_norms = None
    if terms is not None:
        raw = terms.terms if isinstance(terms, FrequencyTaggedTerms) else terms
        term_norms = [_restricted_norm(np.asarray(h), keep) for h, _ in raw]
    entries = []
    for part in decomp.oscillating_parts:
        m, n = part.indices
        if m > n:
            continue
        norm = _restricted_norm(part.operator, keep)
        ratio = _safe_ratio(norm, part.beat)
        scale_ratio = 0.0
        if term_norms is not None:
            weight = decomp.coefficient_table[f"inv_omega_bar_{m}{n}"]
            scale_ratio = _safe_ratio(weight * term_norms[m - 1] * term_norms[n - 1], part.beat)
        entries.append(MagnitudeEntry((m, n), part.beat, norm, ratio, scale_ratio, max(ratio, scale_ratio) > limit))
    return entries


def random_regime_params(rng: np.random.Generator) -> SystemParams:
    """A random parameter point in the dispersive, symmetric-detuning regime."""
    omega_c = rng.uniform(6000, 7000) * MHZ
    g_cq = rng.uniform(30, 90) * MHZ
    omega_Q = omega_c - rng.uniform(500, 900) * MHZ
    omega_q = omega_Q - g_cq**2 / (omega_c - omega_Q)
    delta_m = rng.uniform(15, 50) * MHZ
    Omega_2 = delta_m * rng.uniform(1.5, 4.0)
    base = SystemParams(
        omega_c=omega_c,
        omega_Q=omega_Q,
        omega_m1=omega_Q,
        omega_m2=omega_Q,
        g_cq=g_cq,
        g_c1=rng.uniform(20, 60) * MHZ,
        g_c2=rng.uniform(20, 60) * MHZ,
        Omega_1=rng.uniform(100, 200) * MHZ,
        Omega_2=Omega_2,
        omega_L1=omega_q + rng.uniform(-0.5, 0.5) * MHZ,
        kappa_1=0.5 * MHZ,
        kappa_2=0.5 * MHZ,
        gamma_d=0.0,
        gamma_phi=0.0,
        temperature=0.0,
    )
    return retune_magnons(base, delta_m)


def randomized_static_checks(layout: SpaceLayout, draws: int, seed: int | np.random.SeedSequence) -> list[StaticVerification]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(draws):
        p = random_regime_params(rng)
        out.append(verify_heff_static(layout, p, derive_params(p)))
    return out
