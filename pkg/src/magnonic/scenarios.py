"""Scenario orchestration: model runs, sweeps, Wigner snapshots and the verification suite.

Everything here returns plain data; file output lives in :mod:`magnonic.cli`.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import SWEEP_PARAMETERS, ScenarioConfig, SimulationConfig
from .dynamics import (
    THERMAL_LOSS_LIMIT,
    EvolutionResult,
    check_convergence,
    evolve,
    make_effective_spec,
    make_full_spec,
    standard_observers,
    thermal_state,
)
from .effective import (
    FrequencyTaggedTerms,
    james_jerke,
    oscillating_magnitude_report,
    randomized_static_checks,
    verify_heff_oscillating,
    verify_heff_static,
)
from .entanglement import EntanglementTrace, entanglement_trace, partial_trace_qubit
from .errors import InvalidArgumentError, MagnonicError, TruncationError
from .model import MHZ, SystemParams, build_H5_terms, derive_params
from .operators import make_layout
from .tomography import WignerGrid, default_axis, joint_wigner

NS = 1e-9
OMEGA1_LADDER_MHZ = (100.0, 120.0, 150.0)
RANDOM_DRAWS = 20
CUTOFF_MAX_EN_RTOL = 0.01
MAX_AUTO_CUTOFF = 24


def thermal_cutoff(nbar: float, limit: float = THERMAL_LOSS_LIMIT) -> int:
    """Smallest N whose thermal tail beyond level N-1 is at most ``limit`` per mode."""
    if nbar <= 0:
        return 2
    q = nbar / (nbar + 1)
    # tail weight is q**N
    return max(2, math.ceil(math.log(limit / 2) / math.log(q)))


@dataclass
class ModelRun:
    model: str
    params: SystemParams
    result: EvolutionResult
    trace: EntanglementTrace


def run_model(
    p: SystemParams,
    model: str,
    sim: SimulationConfig,
    *,
    fock_cutoff: int | None = None,
    t_end_ns: float | None = None,
    keep_states: bool = False,
    auto_cutoff: bool = False,
    truncation_limit: float | None = 1e-4,
) -> ModelRun:
    """Evolve the thermal initial state under the ``"full"`` or ``"effective"`` model.

    With ``auto_cutoff`` the cutoff starts high enough for the initial thermal
    state and grows by 2 (up to ``MAX_AUTO_CUTOFF``) whenever the top Fock
    level fills beyond ``truncation_limit``.
    """
    if model not in ("full", "effective"):
        raise InvalidArgumentError(f"model must be 'full' or 'effective', got {model!r}")
    d = derive_params(p)
    n = sim.fock_cutoff if fock_cutoff is None else fock_cutoff
    if auto_cutoff:
        n = max(n, thermal_cutoff(d.nbar_1), thermal_cutoff(d.nbar_2))
    t_end = (sim.t_end_ns if t_end_ns is None else t_end_ns) * NS
    while True:
        layout = make_layout(n)
        builder = make_full_spec if model == "full" else make_effective_spec
        try:
            result = evolve(
                builder(layout, p, d),
                thermal_state(layout, d.nbar_1, d.nbar_2),
                t_end,
                sim.sample_dt_ns * NS,
                rtol=sim.rtol,
                atol=sim.atol,
                method=sim.method,
                keep_states=keep_states,
                observers=standard_observers(layout),
                truncation_limit=truncation_limit,
            )
        except TruncationError:
            if not auto_cutoff or n + 2 > MAX_AUTO_CUTOFF:
                raise
            n += 2
            continue
        return ModelRun(model, p, result, entanglement_trace(result))


def models_for(name: str) -> tuple[str, ...]:
    return ("full", "effective") if name == "both" else (name,)


# -- sweeps ------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    coordinates: tuple[float, ...]  # axis values as written in the config
    max_EN: float
    optimal_time_ns: float
    fock_cutoff: int


@dataclass
class SweepResult:
    parameters: tuple[str, ...]
    units: tuple[str, ...]
    model: str
    points: list[SweepPoint]


def _map_ordered(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_sweep(cfg: ScenarioConfig, threads: int = 1) -> SweepResult:
    """Max E_N and optimal time on the sweep grid. Output order follows the grid, not completion."""
    if cfg.sweep is None:
        raise InvalidArgumentError(f"{cfg.source}: no [sweep] section")
    axes = cfg.sweep.axes
    grid = list(itertools.product(*(range(len(ax.values)) for ax in axes)))

    def one(index):
        overrides = {}
        for ax, i in zip(axes, index):
            for name in SWEEP_PARAMETERS[ax.parameter]:
                overrides[name] = ax.si_values()[i]
        p = cfg.system_params(**overrides)
        run = run_model(p, cfg.sweep.model, cfg.simulation, auto_cutoff=True)
        coords = tuple(ax.values[i] for ax, i in zip(axes, index))
        return SweepPoint(coords, run.trace.max_value, run.trace.optimal_time / NS, run.result.layout.fock_cutoff)

    points = _map_ordered(one, grid, threads)
    return SweepResult(tuple(ax.parameter for ax in axes), tuple(ax.unit for ax in axes), cfg.sweep.model, points)


# -- Wigner snapshot ---------------------------------------------------------


@dataclass
class WignerSnapshot:
    time_ns: float
    run: ModelRun
    grids: dict[str, WignerGrid]


def wigner_snapshot(cfg: ScenarioConfig, threads: int = 1) -> WignerSnapshot:
    """Joint Wigner grids in both planes at the configured or E_N-optimal time."""
    w = cfg.wigner
    axis = default_axis(w.points, w.extent)
    t_end_ns = cfg.simulation.t_end_ns
    if w.snapshot_ns is not None:
        t_end_ns = w.snapshot_ns
    run = run_model(cfg.system_params(), w.model, cfg.simulation, t_end_ns=t_end_ns, keep_states=True)
    t = w.snapshot_ns * NS if w.snapshot_ns is not None else run.trace.optimal_time
    rho12 = partial_trace_qubit(run.result.state_at(t))
    rho12 = rho12.padded(max(w.tomography_cutoff, rho12.fock_cutoff))

    def one(plane):
        return plane, joint_wigner(rho12, axis, plane=plane, convention=w.convention)

    grids = dict(_map_ordered(one, ["X1X2", "P1P2"], threads))
    return WignerSnapshot(float(run.result.state_at(t).time / NS), run, grids)


# -- verification suite ------------------------------------------------------


@dataclass(frozen=True)
class CheckItem:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class VerificationReport:
    items: list[CheckItem]

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def format(self) -> str:
        lines = []
        for item in self.items:
            status = "PASS" if item.passed else "FAIL"
            detail = ", ".join(f"{k}={_short(v)}" for k, v in item.detail.items())
            lines.append(f"{status}  {item.name}" + (f"  ({detail})" if detail else ""))
        return "\n".join(lines)


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _guarded(name: str, fn: Callable[[], CheckItem]) -> CheckItem:
    try:
        return fn()
    except MagnonicError as exc:
        return CheckItem(name, False, {"error": str(exc)})


def check_static(cfg: ScenarioConfig) -> CheckItem:
    p = cfg.system_params()
    layout = make_layout(cfg.simulation.fock_cutoff)
    r = verify_heff_static(layout, p, derive_params(p))
    return CheckItem("effective Hamiltonian, static part", r.passed, {"relative_deviation": r.relative_deviation})


def check_static_random(cfg: ScenarioConfig, seed: int, threads: int = 1) -> CheckItem:
    layout = make_layout(cfg.simulation.fock_cutoff)
    # one seed per draw keeps results independent of the thread count
    seeds = np.random.SeedSequence(seed).spawn(RANDOM_DRAWS)
    reports = _map_ordered(lambda s: randomized_static_checks(layout, 1, s)[0], seeds, threads)
    worst = max(r.relative_deviation for r in reports)
    return CheckItem(
        f"effective Hamiltonian, static part at {RANDOM_DRAWS} random points",
        all(r.passed for r in reports),
        {"seed": seed, "worst_relative_deviation": worst},
    )


def check_oscillating(cfg: ScenarioConfig) -> CheckItem:
    p = cfg.system_params()
    d = derive_params(p)
    layout = make_layout(cfg.simulation.fock_cutoff)
    r = verify_heff_oscillating(layout, p, d)
    beats = james_jerke(build_H5_terms(layout, p, d)).beat_frequencies()
    expected = [p.Omega_2 - d.delta_m, abs(p.Omega_2 - 3 * d.delta_m), 2 * d.delta_m]
    beats_ok = sorted(np.round(np.divide(beats, MHZ), 9)) == sorted(np.round(np.divide(expected, MHZ), 9))
    detail = {f"xi_block_{k}": v for k, v in r.deviations.items()}
    detail["beats_MHz_over_2pi"] = sorted(b / MHZ for b in beats)
    return CheckItem("oscillating residue coefficients and beat frequencies", r.passed and beats_ok, detail)


def check_smallness(cfg: ScenarioConfig) -> CheckItem:
    p = cfg.system_params()
    d = derive_params(p)
    layout = make_layout(cfg.simulation.fock_cutoff)
    terms = build_H5_terms(layout, p, d)
    name = "oscillating terms small against their beat frequencies"
    try:
        tagged = FrequencyTaggedTerms(tuple(terms))
    except InvalidArgumentError as exc:
        # coinciding frequencies: a beat frequency is exactly zero
        return CheckItem(name, False, {"flagged": "resonant beat (zero frequency)", "error": str(exc)})
    entries = oscillating_magnitude_report(james_jerke(tagged), layout, tagged)
    flagged = [e for e in entries if e.flagged]
    detail = {f"ratio_{e.indices[0]}{e.indices[1]}": max(e.ratio, e.scale_ratio) for e in entries}
    if flagged:
        detail["flagged"] = [f"beat {e.beat / MHZ:.4g} MHz" for e in flagged]
    return CheckItem(name, not flagged, detail)


def check_cutoff(cfg: ScenarioConfig, threads: int = 1) -> CheckItem:
    p = cfg.system_params()
    n = cfg.simulation.fock_cutoff
    runs = _map_ordered(
        lambda k: run_model(p, "effective", cfg.simulation, fock_cutoff=k, truncation_limit=None), [n, n + 2], threads
    )
    rep = check_convergence(runs[0].result, runs[1].result)
    ok = rep.converged and rep.max_EN_relative_difference <= CUTOFF_MAX_EN_RTOL
    detail = rep.as_dict()
    detail.pop("converged")
    return CheckItem(f"cutoff convergence N={n} vs N={n + 2}", ok, detail)


def omega1_discrepancies(cfg: ScenarioConfig, omegas_MHz: Sequence[float] = OMEGA1_LADDER_MHZ, threads: int = 1):
    """max over time of |E_N(full) - E_N(effective)| for each first-drive strength."""
    eff = run_model(cfg.system_params(), "effective", cfg.simulation)
    e_eff = eff.result.observables["E_N"]
    fulls = _map_ordered(
        lambda w: run_model(cfg.system_params(Omega_1=w * MHZ), "full", cfg.simulation), list(omegas_MHz), threads
    )
    return [float(np.max(np.abs(f.result.observables["E_N"] - e_eff))) for f in fulls], eff, fulls


def check_omega1(cfg: ScenarioConfig, threads: int = 1) -> CheckItem:
    gaps, _, _ = omega1_discrepancies(cfg, threads=threads)
    ok = all(b < a for a, b in zip(gaps, gaps[1:]))
    return CheckItem(
        "full/effective discrepancy shrinks with Omega_1",
        ok,
        {"Omega_1_MHz_over_2pi": list(OMEGA1_LADDER_MHZ), "max_abs_delta_EN": gaps},
    )


def run_verification(cfg: ScenarioConfig, seed: int = 0, threads: int = 1, include_dynamics: bool = True) -> VerificationReport:
    items = [
        _guarded("effective Hamiltonian, static part", lambda: check_static(cfg)),
        _guarded("effective Hamiltonian, random points", lambda: check_static_random(cfg, seed, threads)),
        _guarded("oscillating residue", lambda: check_oscillating(cfg)),
        _guarded("oscillating terms small", lambda: check_smallness(cfg)),
    ]
    if include_dynamics:
        items.append(_guarded("cutoff convergence", lambda: check_cutoff(cfg, threads)))
        items.append(_guarded("Omega_1 monotonicity", lambda: check_omega1(cfg, threads)))
    return VerificationReport(items)
