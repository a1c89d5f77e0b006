"""Physical parameters, derived couplings and the model Hamiltonians.

All frequencies, couplings and rates are angular (rad/s); times are seconds;
temperature is kelvin. ``MHZ`` converts a value quoted as ``f/2pi`` in MHz.

The cavity-mediated frequency shifts use ``omega = omega_bare - g**2/Delta``.
That is the sign which reproduces the quoted shifted frequencies
(5843 -> 5831.3 MHz for the qubit) for modes sitting below the cavity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy import constants

from .errors import NonDispersiveError, ParameterError, SingularParameterError, SymmetricDetuningError
from .operators import SpaceLayout, annihilation, dagger, number, qubit_op

MHZ = 2 * math.pi * 1e6
KHZ = 2 * math.pi * 1e3

SYMMETRIC_DETUNING_RTOL = 1e-6
DISPERSIVE_WARN_RATIO = 5.0
DISPERSIVE_FAIL_RATIO = 2.0
RWA_WARN_RATIO = 5.0
RWA_FAIL_RATIO = 2.0


@dataclass(frozen=True)
class SystemParams:
    """Raw inputs of the cavity-magnon-qubit setup (rad/s, kelvin).

    The second drive frequency is not an input; it is fixed to
    ``omega_L1 - 2 * Omega_1`` (see :attr:`omega_L2`).
    """

    omega_c: float
    omega_Q: float
    omega_m1: float
    omega_m2: float
    g_cq: float
    g_c1: float
    g_c2: float
    Omega_1: float
    Omega_2: float
    omega_L1: float
    kappa_1: float
    kappa_2: float
    gamma_d: float
    gamma_phi: float
    temperature: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ParameterError(f"{f.name} must be finite, got {value!r}")
            if value < 0:
                raise ParameterError(f"{f.name} must be non-negative, got {value!r}")
        for name in ("omega_Q", "omega_m1", "omega_m2"):
            if not self.omega_c > getattr(self, name):
                raise ParameterError(f"cavity must lie above every mode: omega_c <= {name}")

    @property
    def omega_L2(self) -> float:
        return self.omega_L1 - 2 * self.Omega_1

    def scaled(self, factor: float) -> "SystemParams":
        """Every rate and frequency (and the temperature) multiplied by ``factor``."""
        return replace(self, **{f.name: getattr(self, f.name) * factor for f in fields(self)})


@dataclass(frozen=True)
class DerivedParams:
    Delta_q: float
    Delta_1: float
    Delta_2: float
    omega_q: float
    omega_1: float
    omega_2: float
    g_q1: float
    g_q2: float
    g_12: float
    delta_q: float
    delta_1: float
    delta_2: float
    delta_m: float
    delta_L: float
    r_g: float
    g_eff: float
    xi_1: float
    xi_2: float
    xi_3: float
    zeta_1: float
    zeta_2: float
    nbar_1: float
    nbar_2: float
    nbar_q: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def reference_params(**overrides) -> SystemParams:
    """The reference operating point, with the magnons retuned to delta_m/2pi = 34.75 MHz.

    Keyword overrides are in SI/rad-s units and applied before retuning.
    """
    p = SystemParams(
        omega_c=6388.0 * MHZ,
        omega_Q=5843.0 * MHZ,
        omega_m1=5871.0 * MHZ,
        omega_m2=5801.0 * MHZ,
        g_cq=80.0 * MHZ,
        g_c1=50.0 * MHZ,
        g_c2=50.0 * MHZ,
        Omega_1=150.0 * MHZ,
        Omega_2=95.0 * MHZ,
        omega_L1=5831.45 * MHZ,
        kappa_1=0.5 * MHZ,
        kappa_2=0.5 * MHZ,
        gamma_d=3.0 * KHZ,
        gamma_phi=3.0 * KHZ,
        temperature=10e-3,
    )
    p = replace(p, **overrides)
    return retune_magnons(p, 34.75 * MHZ)


def bose_einstein(omega: float, temperature: float) -> float:
    """Mean thermal occupation of a mode at angular frequency ``omega``."""
    if temperature <= 0 or omega <= 0:
        return 0.0
    x = constants.hbar * omega / (constants.k * temperature)
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


def _inv(x: float) -> float:
    return math.inf if x == 0 else 1.0 / x


def _ratio(num: float, den: float) -> float:
    # a vanishing slow scale makes the condition vacuous
    if den == 0:
        return math.inf
    return abs(num) / abs(den)


def shifted_frequency(omega_bare: float, g: float, omega_c: float) -> float:
    return omega_bare - g**2 / (omega_c - omega_bare)


def cavity_mediated_coupling(g_a: float, g_b: float, detuning_a: float, detuning_b: float) -> float:
    return g_a * g_b * (1.0 / detuning_a + 1.0 / detuning_b) / 2


def bare_for_shifted(target: float, g: float, omega_c: float) -> float:
    """Bare frequency whose cavity-shifted value equals ``target`` (dispersive root)."""
    gap = omega_c - target
    disc = gap**2 - 4 * g**2
    if gap <= 0 or disc < 0:
        raise ParameterError("no dispersive bare frequency reaches the requested shifted frequency")
    detuning = (gap + math.sqrt(disc)) / 2
    return omega_c - detuning


def retune_magnons(p: SystemParams, delta_m: float) -> SystemParams:
    """Coil retuning: bare magnon frequencies giving ``delta_1 = -delta_2 = delta_m``."""
    if delta_m <= 0:
        raise ParameterError(f"delta_m must be positive, got {delta_m!r}")
    return replace(
        p,
        omega_m1=bare_for_shifted(p.omega_L1 + delta_m, p.g_c1, p.omega_c),
        omega_m2=bare_for_shifted(p.omega_L1 - delta_m, p.g_c2, p.omega_c),
    )


def _check_dispersive(p: SystemParams, Delta_q: float, Delta_1: float, Delta_2: float) -> None:
    for label, detuning, g in (
        ("qubit", Delta_q, p.g_cq),
        ("magnon 1", Delta_1, p.g_c1),
        ("magnon 2", Delta_2, p.g_c2),
    ):
        ratio = _ratio(detuning, g)
        if ratio < DISPERSIVE_FAIL_RATIO:
            raise NonDispersiveError(
                f"{label} is not dispersive: Delta/g = {ratio:.3g} < {DISPERSIVE_FAIL_RATIO}"
            )
        if ratio < DISPERSIVE_WARN_RATIO:
            warnings.warn(
                f"{label} only weakly dispersive: Delta/g = {ratio:.3g} < {DISPERSIVE_WARN_RATIO}",
                stacklevel=3,
            )


def derive_params(p: SystemParams, *, enforce_symmetric: bool = True) -> DerivedParams:
    """Every derived quantity of the cavity-eliminated model.

    With ``enforce_symmetric`` the magnon detunings from the first drive must
    satisfy ``delta_1 = -delta_2 > 0`` to 1e-6 relative; otherwise a
    :class:`SymmetricDetuningError` names the bare magnon frequencies that
    restore the condition. Without it, ``delta_m`` is ``(delta_1 - delta_2)/2``.
    """
    Delta_q = p.omega_c - p.omega_Q
    Delta_1 = p.omega_c - p.omega_m1
    Delta_2 = p.omega_c - p.omega_m2
    _check_dispersive(p, Delta_q, Delta_1, Delta_2)

    omega_q = p.omega_Q - p.g_cq**2 / Delta_q
    omega_1 = p.omega_m1 - p.g_c1**2 / Delta_1
    omega_2 = p.omega_m2 - p.g_c2**2 / Delta_2
    g_q1 = cavity_mediated_coupling(p.g_cq, p.g_c1, Delta_q, Delta_1)
    g_q2 = cavity_mediated_coupling(p.g_cq, p.g_c2, Delta_q, Delta_2)
    g_12 = cavity_mediated_coupling(p.g_c1, p.g_c2, Delta_1, Delta_2)

    delta_q = omega_q - p.omega_L1
    delta_1 = omega_1 - p.omega_L1
    delta_2 = omega_2 - p.omega_L1
    delta_L = p.omega_L2 - p.omega_L1
    delta_m = (delta_1 - delta_2) / 2

    if enforce_symmetric:
        mismatch = abs(delta_1 + delta_2)
        if delta_m <= 0 or mismatch > SYMMETRIC_DETUNING_RTOL * max(abs(delta_1), abs(delta_2)):
            msg = (
                f"delta_1/2pi = {delta_1 / MHZ:.6f} MHz and delta_2/2pi = {delta_2 / MHZ:.6f} MHz "
                "violate delta_1 = -delta_2 > 0."
            )
            w1 = w2 = None
            if delta_m > 0:
                try:
                    fixed = retune_magnons(p, delta_m)
                except ParameterError:
                    pass
                else:
                    w1, w2 = fixed.omega_m1, fixed.omega_m2
                    msg += (
                        " Retune the magnon coils to omega_m1/2pi = "
                        f"{w1 / MHZ:.6f} MHz and omega_m2/2pi = {w2 / MHZ:.6f} MHz "
                        f"(delta_m/2pi = {delta_m / MHZ:.6f} MHz)."
                    )
            raise SymmetricDetuningError(msg, w1, w2)

    O2, dm = p.Omega_2, delta_m
    r_g = (_inv(O2 - dm) + _inv(O2 + dm)) / 4
    g_eff = r_g * g_q1 * g_q2 if math.isfinite(r_g) else math.inf
    xi_1 = (O2 + 3 * dm) * _inv(8 * dm * (O2 + dm))
    xi_2 = (O2 + dm) * _inv(8 * dm * (O2 - dm))
    xi_3 = O2 * _inv(4 * (O2**2 - dm**2))

    nbar_1 = bose_einstein(p.omega_m1, p.temperature)
    nbar_2 = bose_einstein(p.omega_m2, p.temperature)
    nbar_q = bose_einstein(p.omega_Q, p.temperature)
    zeta_1 = (3 * p.gamma_d * (2 * nbar_q + 1) + 2 * p.gamma_phi) / 16
    zeta_2 = (p.gamma_d * (2 * nbar_q + 1) + 2 * p.gamma_phi) / 16

    return DerivedParams(
        Delta_q=Delta_q, Delta_1=Delta_1, Delta_2=Delta_2,
        omega_q=omega_q, omega_1=omega_1, omega_2=omega_2,
        g_q1=g_q1, g_q2=g_q2, g_12=g_12,
        delta_q=delta_q, delta_1=delta_1, delta_2=delta_2, delta_m=delta_m, delta_L=delta_L,
        r_g=r_g, g_eff=g_eff, xi_1=xi_1, xi_2=xi_2, xi_3=xi_3,
        zeta_1=zeta_1, zeta_2=zeta_2,
        nbar_1=nbar_1, nbar_2=nbar_2, nbar_q=nbar_q,
    )


# -- RWA bookkeeping ----------------------------------------------------------


@dataclass(frozen=True)
class RwaCheck:
    name: str
    ratio: float
    status: str  # "pass" | "warn" | "fail"


def _status(ratio: float) -> str:
    if ratio < RWA_FAIL_RATIO:
        return "fail"
    if ratio < RWA_WARN_RATIO:
        return "warn"
    return "pass"


@dataclass(frozen=True)
class RwaReport:
    checks: tuple[RwaCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    @property
    def warnings(self) -> list[RwaCheck]:
        return [c for c in self.checks if c.status == "warn"]

    @property
    def failures(self) -> list[RwaCheck]:
        return [c for c in self.checks if c.status == "fail"]

    def __getitem__(self, name: str) -> RwaCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {c.name: {"ratio": c.ratio, "status": c.status} for c in self.checks}

    def format(self) -> str:
        lines = []
        for c in self.checks:
            lines.append(f"  {c.name:<42s} {c.ratio:>12.4g}  {c.status}")
        return "\n".join(lines)


def check_rwa_conditions(d: DerivedParams, p: SystemParams) -> RwaReport:
    """Named ratios (fast scale / slow scale) for every approximation in the derivation.

    Ratios under 5 are flagged ``warn`` and under 2 ``fail``.
    """
    checks: list[RwaCheck] = []

    def add(name, fast, slow):
        r = _ratio(fast, slow)
        checks.append(RwaCheck(name, r, _status(r)))

    # dropping the 2*Omega_1 and 4*Omega_1 oscillations
    dL = abs(d.delta_L)
    add("|delta_L| / Omega_2", dL, p.Omega_2)
    add("|delta_L| / (g_q1/2)", dL, d.g_q1 / 2)
    add("|delta_L| / (g_q2/2)", dL, d.g_q2 / 2)
    add("|delta_L| / |delta_1|", dL, d.delta_1)
    add("|delta_L| / |delta_2|", dL, d.delta_2)
    add("|delta_L| / (|delta_q|/2)", dL, d.delta_q / 2)

    # second-order elimination of the Omega_2 +- delta_m and 2 delta_m terms
    fast = {
        "(Omega_2 - delta_m)": p.Omega_2 - d.delta_m,
        "(Omega_2 + delta_m)": p.Omega_2 + d.delta_m,
        "2 delta_m": 2 * d.delta_m,
    }
    slow = {"g_12": d.g_12, "(g_q1/2)": d.g_q1 / 2, "(g_q2/2)": d.g_q2 / 2}
    for fname, fval in fast.items():
        for sname, sval in slow.items():
            if fval <= 0:
                checks.append(RwaCheck(f"{fname} / {sname}", 0.0, "fail"))
            else:
                add(f"{fname} / {sname}", fval, sval)

    # dropping the residual oscillating second-order terms
    gq = max(d.g_q1, d.g_q2)
    pairs = (
        ("(Omega_2 - delta_m) / (xi_1 g_12 g_q)", p.Omega_2 - d.delta_m, d.xi_1 * d.g_12 * gq),
        ("|Omega_2 - 3 delta_m| / (xi_2 g_12 g_q)", abs(p.Omega_2 - 3 * d.delta_m), d.xi_2 * d.g_12 * gq),
        ("2 delta_m / (xi_3 g_q g_q)", 2 * d.delta_m, d.xi_3 * gq * gq),
    )
    for name, f, s in pairs:
        if math.isfinite(s):
            add(name, f, s)
        else:
            checks.append(RwaCheck(name, 0.0, "fail"))
    return RwaReport(tuple(checks))


# -- Hamiltonians -------------------------------------------------------------


def build_H1(layout: SpaceLayout, p: SystemParams, d: DerivedParams, t: float) -> np.ndarray:
    """Cavity-eliminated Hamiltonian in the lab frame at time ``t``."""
    m1, m2 = annihilation(layout, 1), annihilation(layout, 2)
    sm, sp = qubit_op(layout, "sigma_minus"), qubit_op(layout, "sigma_plus")
    h = (
        d.omega_1 * number(layout, 1)
        + d.omega_2 * number(layout, 2)
        + d.omega_q / 2 * qubit_op(layout, "sigma_z")
        + d.g_12 * (dagger(m1) @ m2 + m1 @ dagger(m2))
    )
    coupling = d.g_q1 * dagger(m1) @ sm + d.g_q2 * dagger(m2) @ sm
    drive = (p.Omega_1 * np.exp(-1j * p.omega_L1 * t) + p.Omega_2 * np.exp(-1j * p.omega_L2 * t)) * sp
    return h + coupling + dagger(coupling) + drive + dagger(drive)


@dataclass(frozen=True)
class H2Parts:
    """``H(t) = static + drive * exp(-i frequency t) + h.c.``"""

    static: np.ndarray
    drive: np.ndarray
    frequency: float

    def at(self, t: float) -> np.ndarray:
        phased = self.drive * np.exp(-1j * self.frequency * t)
        return self.static + phased + dagger(phased)


def build_H2_parts(layout: SpaceLayout, p: SystemParams, d: DerivedParams) -> H2Parts:
    """Frame rotating at the first drive, split into static and drive parts."""
    m1, m2 = annihilation(layout, 1), annihilation(layout, 2)
    sp = qubit_op(layout, "sigma_plus")
    static = (
        d.delta_1 * number(layout, 1)
        + d.delta_2 * number(layout, 2)
        + d.delta_q / 2 * qubit_op(layout, "sigma_z")
        + d.g_12 * (dagger(m1) @ m2 + m1 @ dagger(m2))
    )
    x = (d.g_q1 * m1 + d.g_q2 * m2 + p.Omega_1 * layout.identity()) @ sp
    static = static + x + dagger(x)
    return H2Parts(static=static, drive=p.Omega_2 * sp, frequency=d.delta_L)


def build_H2(layout: SpaceLayout, p: SystemParams, d: DerivedParams, t: float) -> np.ndarray:
    return build_H2_parts(layout, p, d).at(t)


def build_H4(layout: SpaceLayout, p: SystemParams, d: DerivedParams) -> np.ndarray:
    """Static Hamiltonian after the first RWA, qubit operators in the dressed frame."""
    m1, m2 = annihilation(layout, 1), annihilation(layout, 2)
    x = d.g_q1 * m1 + d.g_q2 * m2
    return (
        d.delta_1 * number(layout, 1)
        + d.delta_2 * number(layout, 2)
        + p.Omega_2 / 2 * qubit_op(layout, "sigma_z")
        + d.g_12 * (dagger(m1) @ m2 + m1 @ dagger(m2))
        + 0.5 * (x + dagger(x)) @ qubit_op(layout, "sigma_x")
    )


def build_H5_terms(layout: SpaceLayout, p: SystemParams, d: DerivedParams) -> list[tuple[np.ndarray, float]]:
    """Interaction-picture Hamiltonian as ``sum_k h_k exp(-i w_k t) + h.c.``.

    Returns ``[(h_1, 2 delta_m), (h_2, Omega_2 + delta_m), (h_3, Omega_2 - delta_m)]``.
    """
    m1, m2 = annihilation(layout, 1), annihilation(layout, 2)
    sm = qubit_op(layout, "sigma_minus")
    h1 = d.g_12 * m1 @ dagger(m2)
    h2 = (d.g_q1 * m1 + d.g_q2 * dagger(m2)) @ sm / 2
    h3 = (d.g_q1 * dagger(m1) + d.g_q2 * m2) @ sm / 2
    return [
        (h1, 2 * d.delta_m),
        (h2, p.Omega_2 + d.delta_m),
        (h3, p.Omega_2 - d.delta_m),
    ]


def build_H5(layout: SpaceLayout, p: SystemParams, d: DerivedParams, t: float) -> np.ndarray:
    out = np.zeros((layout.dim, layout.dim), dtype=complex)
    for h, w in build_H5_terms(layout, p, d):
        x = h * np.exp(-1j * w * t)
        out += x + dagger(x)
    return out


def build_Heff(layout: SpaceLayout, p: SystemParams, d: DerivedParams) -> np.ndarray:
    """Time-independent two-mode-squeezing Hamiltonian (qubit in the dressed frame)."""
    if d.delta_m <= 0 or not math.isfinite(d.r_g) or p.Omega_2 == d.delta_m:
        raise SingularParameterError(
            f"effective Hamiltonian singular: Omega_2/2pi = {p.Omega_2 / MHZ:g} MHz, "
            f"delta_m/2pi = {d.delta_m / MHZ:g} MHz"
        )
    m1, m2 = annihilation(layout, 1), annihilation(layout, 2)
    n1, n2 = number(layout, 1), number(layout, 2)
    sz = qubit_op(layout, "sigma_z")
    shift = d.g_12**2 / (2 * d.delta_m) * (n1 - n2)
    conditioned = d.r_g * (d.g_q1**2 * n1 + d.g_q2**2 * n2) + d.g_eff * (dagger(m1) @ dagger(m2) + m1 @ m2)
    return shift + conditioned @ sz
