"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (shown in the terminal summary) before
asserting. Run with ``pytest tests/test_acceptance.py -v``; the full set takes
roughly a quarter of an hour on one core.
"""
import math
from functools import lru_cache

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_density
from magnonic.config import default_config_text, parse_config, SimulationConfig
from magnonic.dynamics import Dissipator, LindbladSpec, evolve, make_effective_spec, standard_observers, thermal_state
from magnonic.effective import james_jerke, randomized_static_checks, verify_heff_static
from magnonic.entanglement import BipartiteState, logarithmic_negativity, two_mode_squeezed_vacuum
from magnonic.model import MHZ, build_H5_terms, derive_params, reference_params
from magnonic.operators import DensityState, make_layout, qubit_op
from magnonic.scenarios import run_model, run_sweep
from magnonic.tomography import (
    dispersive_shifts,
    joint_number_distribution,
    joint_wigner,
    joint_wigner_points,
    parity_from_distribution,
)

pytestmark = pytest.mark.slow

HORIZON_NS = 1000.0
SIM = SimulationConfig(fock_cutoff=10, t_end_ns=HORIZON_NS, sample_dt_ns=5.0)
NO_ENTANGLEMENT = 1e-6


def record(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


@lru_cache(maxsize=None)
def model_run(model, omega_1_mhz=150.0, temperature=0.01, fock_cutoff=10, auto=False):
    p = reference_params(Omega_1=omega_1_mhz * MHZ, temperature=temperature)
    return run_model(p, model, SIM, fock_cutoff=fock_cutoff, auto_cutoff=auto)


# -- 1 ------------------------------------------------------------------------

EXPECTED = [
    ("g_q1", 7.54),
    ("g_q2", 7.08),
    ("g_12", 4.55),
    ("omega_q", 5831.3),
    ("omega_1", 5866.2),
    ("omega_2", 5796.7),
    ("delta_m", 34.75),
]


@pytest.mark.parametrize("name, expected", EXPECTED)
def test_1_parameter_derivation(name, expected):
    got = getattr(derive_params(reference_params()), name) / MHZ
    record(f"1 ({name})", abs(got - expected) <= 0.01, f"{got:.4f} MHz vs {expected} +- 0.01")


# -- 2 ------------------------------------------------------------------------


def test_2_full_model_peak():
    full, eff = model_run("full"), model_run("effective")
    e, t = full.trace.max_value, full.trace.optimal_time * 1e9
    rel = abs(e - eff.trace.max_value) / eff.trace.max_value
    ok = abs(e - 0.68) <= 0.04 and abs(t - 430) <= 50 and rel <= 0.06
    record(2, ok, f"max E_N {e:.4f} at {t:.0f} ns; effective {eff.trace.max_value:.4f}; deviation {100 * rel:.2f}%")


# -- 3 ------------------------------------------------------------------------


def test_3_discrepancy_shrinks_with_drive():
    e_eff = model_run("effective").result.observables["E_N"]
    gaps = [float(np.max(np.abs(model_run("full", w).result.observables["E_N"] - e_eff))) for w in (100.0, 120.0, 150.0)]
    ok = gaps[0] > gaps[1] > gaps[2]
    record(3, ok, "max |dE_N| at Omega_1 = 100/120/150 MHz: " + " / ".join(f"{g:.4f}" for g in gaps))


# -- 4 ------------------------------------------------------------------------


def test_4_dispersive_shifts():
    rep = dispersive_shifts(reference_params(), 5961 * MHZ)
    c1, c2 = rep.chi_1 / MHZ, rep.chi_2 / MHZ
    ok = abs(c1 - 0.92) <= 0.02 and abs(c2 - 0.44) <= 0.02
    record(4, ok, f"chi_1 {c1:.4f} MHz, chi_2 {c2:.4f} MHz")


# -- 5 ------------------------------------------------------------------------

GAMMA_GRID = """
[sweep]
model = "effective"
[[sweep.axis]]
parameter = "gamma_d"
values_MHz_over_2pi = [0.003, 0.1, 0.2, 0.3]
[[sweep.axis]]
parameter = "gamma_phi"
values_MHz_over_2pi = [0.003, 0.1, 0.2, 0.3]
"""

# below kappa ~ 0.4 MHz the squeezing gain outruns the damping and the
# cutoff needed within the horizon climbs past 20
MATCHED_GRID = """
[sweep]
model = "effective"
[[sweep.axis]]
parameter = "kappa"
values_MHz_over_2pi = [0.4, 0.6, 0.8, 1.0]
[[sweep.axis]]
parameter = "gamma"
values_MHz_over_2pi = [0.4, 0.6, 0.8, 1.0]
"""


def _sweep_grid(extra):
    text = default_config_text().replace("t_end_ns = 700.0", f"t_end_ns = {HORIZON_NS}")
    result = run_sweep(parse_config(text + extra))
    n0 = len({pt.coordinates[0] for pt in result.points})
    values = np.array([pt.max_EN for pt in result.points]).reshape(n0, -1)
    axes = [np.array(sorted({pt.coordinates[k] for pt in result.points})) for k in range(2)]
    return axes, values


def _mean_slopes(axes, values):
    """Mean finite-difference slope of max E_N along each axis, per MHz/2pi."""
    s0 = np.diff(values, axis=0) / np.diff(axes[0])[:, None]
    s1 = np.diff(values, axis=1) / np.diff(axes[1])[None, :]
    return float(np.mean(s0)), float(np.mean(s1))


def test_5a_qubit_rates_comparable():
    axes, values = _sweep_grid(GAMMA_GRID)
    sd, sphi = _mean_slopes(axes, values)
    ratio = sd / sphi if sphi else math.inf
    ok = sd < 0 and sphi < 0 and 0.5 <= ratio <= 2
    record("5a", ok, f"dE_N/dgamma_d {sd:.4f}, dE_N/dgamma_phi {sphi:.4f} per MHz; ratio {ratio:.3f}")


def test_5b_magnon_loss_dominates():
    axes, values = _sweep_grid(MATCHED_GRID)
    sk, sg = _mean_slopes(axes, values)
    ok = abs(sk) > abs(sg) and sk < 0
    record("5b", ok, f"dE_N/dkappa {sk:.4f}, dE_N/dgamma {sg:.4f} per MHz")


# -- 6 ------------------------------------------------------------------------


def test_6_temperature_trends():
    temps = (0.01, 0.1, 0.3)
    # at 300 mK squeezing on top of the thermal tail fills the top level up to N = 20;
    # starting at 22 skips those doomed attempts (the retry loop still guards it)
    start = {0.01: 10, 0.1: 10, 0.3: 22}
    runs = [model_run("effective", temperature=T, fock_cutoff=start[T], auto=True) for T in temps]
    peaks = [r.trace.max_value for r in runs]
    # a run that never entangles has no optimal time; it is established "later"
    # than any finite one, so it counts as infinity in the ordering
    times = [r.trace.optimal_time * 1e9 if r.trace.max_value > NO_ENTANGLEMENT else math.inf for r in runs]
    drop_100 = 1 - peaks[1] / peaks[0]
    drop_300 = 1 - peaks[2] / peaks[0]
    ok = drop_100 <= 0.15 and drop_300 > 0.30 and all(b >= a for a, b in zip(times, times[1:]))
    detail = "; ".join(f"{1e3 * T:.0f} mK: {e:.4f} at {t:.0f} ns (N={r.result.layout.fock_cutoff})"
                       for T, e, t, r in zip(temps, peaks, times, runs))
    # two-mode squeezed thermal states lose ln(2 nbar + 1) of negativity
    nbar = derive_params(reference_params(temperature=0.1)).nbar_1
    gaussian = math.log(2 * nbar + 1) / peaks[0]
    record(6, ok, f"{detail}; drop 100 mK {100 * drop_100:.1f}% (squeezed-thermal estimate "
                  f"{100 * gaussian:.1f}%), 300 mK {100 * drop_300:.1f}%")


# -- 7 ------------------------------------------------------------------------


def _oracle_suite():
    out = {}
    r = 0.3
    out["TMSV E_N = 2r"] = abs(logarithmic_negativity(two_mode_squeezed_vacuum(14, r)) - 2 * r) <= 1e-4

    rng = np.random.default_rng(7)
    a, b = random_density(rng, 6), random_density(rng, 6)
    out["separable E_N = 0"] = abs(logarithmic_negativity(BipartiteState(6, np.kron(a, b)))) <= 1e-10

    p = reference_params()
    d = derive_params(p)
    layout = make_layout(8)
    run = evolve(make_effective_spec(layout, p, d), thermal_state(layout, d.nbar_1, d.nbar_2), 500e-9, 5e-9,
                 observers=standard_observers(layout), strict=True)
    diag = run.diagnostics
    out["trace/Hermiticity/positivity"] = bool(
        np.max(diag.trace_error) <= DensityState.TRACE_TOL
        and np.max(diag.hermiticity_error) <= DensityState.HERMITIAN_TOL
        and np.min(diag.min_eigenvalue) >= -DensityState.POSITIVITY_TOL
    )

    small = make_layout(2)
    gamma = 2 * math.pi * 3e5
    spec = LindbladSpec(small, np.zeros((small.dim, small.dim)),
                        (Dissipator(qubit_op(small, "sigma_minus"), gamma / 2, "decay"),), "decay")
    decay = evolve(spec, DensityState.pure(small, small.basis_ket(1, 0, 0)), 2e-6, 1e-7)
    excited = np.array([s.matrix[4, 4].real for s in decay.states])
    out["qubit decay exponential"] = float(np.max(np.abs(excited - np.exp(-gamma * decay.times)))) <= 1e-6

    vac = np.zeros((24 * 24, 24 * 24), dtype=complex)
    vac[0, 0] = 1
    vac = BipartiteState(24, vac)
    out["vacuum Wigner peak"] = abs(joint_wigner(vac, np.array([0.0])).values[0, 0] - 4 / math.pi**2) <= 1e-8

    rho = BipartiteState(8, random_density(rng, 64, rank=2))
    worst = 0.0
    for a1, a2 in [(0.3, -0.2j), (0.5 + 0.1j, 0.2), (-0.4j, -0.3 + 0.3j)]:
        dist = joint_number_distribution(rho, a1, a2)
        w = joint_wigner_points(rho, [a1], [a2])[0, 0].real
        worst = max(worst, abs(parity_from_distribution(dist) - math.pi**2 / 4 * w))
    out["parity/number identity"] = worst <= 1e-8
    return out


def test_7_oracle_suite():
    out = _oracle_suite()
    failed = [k for k, v in out.items() if not v]
    record(7, not failed, f"{len(out) - len(failed)}/{len(out)} oracles" + (f"; failed: {failed}" if failed else ""))


# -- 8 ------------------------------------------------------------------------


def test_8_effective_hamiltonian():
    p = reference_params()
    d = derive_params(p)
    layout = make_layout(6)
    static = verify_heff_static(layout, p, d)
    randoms = randomized_static_checks(layout, 20, seed=2024)
    beats = sorted(james_jerke(build_H5_terms(layout, p, d)).beat_frequencies())
    expected = sorted([p.Omega_2 - d.delta_m, abs(p.Omega_2 - 3 * d.delta_m), 2 * d.delta_m])
    beats_ok = np.allclose(beats, expected, rtol=1e-12, atol=0)
    worst = max(r.relative_deviation for r in randoms)
    ok = static.passed and all(r.passed for r in randoms) and beats_ok
    record(8, ok, f"static {static.relative_deviation:.2e}, worst of 20 random {worst:.2e}; "
                  f"beats {[round(b / MHZ, 6) for b in beats]} MHz")


# -- 9 ------------------------------------------------------------------------


def test_9_cutoff_convergence():
    low, high = model_run("full", fock_cutoff=10), model_run("full", fock_cutoff=12)
    a, b = low.trace.max_value, high.trace.max_value
    rel = abs(a - b) / b
    record(9, rel <= 0.01, f"full model max E_N N=10 {a:.6f}, N=12 {b:.6f}; relative difference {rel:.2e}")
