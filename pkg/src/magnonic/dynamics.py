"""Lindblad master equations for the full and effective models, and their integration.

A dissipator ``(o, c)`` contributes ``c * L[o] rho`` with
``L[o] rho = 2 o rho o^dag - (o^dag o rho + rho o^dag o)``, so ``c`` is half
the usual jump rate (magnon decay enters as ``(m_k, kappa_k (nbar_k + 1) / 2)``).
"""
from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse
from scipy.integrate import DOP853, RK45

from . import _kernels
from .entanglement import logarithmic_negativity, partial_trace_qubit
from .errors import InvalidArgumentError, NonConvergenceError, TruncationError
from .model import DerivedParams, H2Parts, SystemParams, build_H2_parts, build_Heff
from .operators import DensityState, SpaceLayout, annihilation, creation, dagger, qubit_op

RTOL = 1e-8
ATOL = 1e-10
STEPS_PER_PERIOD = 20
STABILITY_MARGIN = 3.0  # step * generator_scale; DOP853 is stable out to |h lambda| ~ 6
TRUNCATION_LIMIT = 1e-4
THERMAL_LOSS_LIMIT = 1e-6

_METHODS = {"DOP853": DOP853, "RK45": RK45}


@dataclass(frozen=True)
class Dissipator:
    operator: np.ndarray
    rate: float
    label: str


@dataclass(frozen=True)
class LindbladSpec:
    """Hamiltonian (static matrix or drive-split ``H2Parts``) plus dissipators."""

    layout: SpaceLayout
    hamiltonian: np.ndarray | H2Parts
    dissipators: tuple[Dissipator, ...]
    label: str

    def __post_init__(self):
        for dis in self.dissipators:
            if dis.rate < 0:
                raise InvalidArgumentError(f"dissipator {dis.label} has negative rate {dis.rate}")

    @property
    def time_dependent(self) -> bool:
        return isinstance(self.hamiltonian, H2Parts)

    @property
    def max_frequency(self) -> float:
        """Largest explicit oscillation frequency in the Hamiltonian (rad/s)."""
        return abs(self.hamiltonian.frequency) if self.time_dependent else 0.0

    @property
    def generator_scale(self) -> float:
        """Upper bound on the spectral radius of the Lindblad generator (rad/s).

        Spectral width of the static Hamiltonian, plus twice the drive norm,
        plus twice the summed jump strengths ``rate * ||L||^2``.
        """
        h = self.hamiltonian.static if self.time_dependent else self.hamiltonian
        eig = np.linalg.eigvalsh(h)
        width = float(eig[-1] - eig[0])
        if self.time_dependent:
            width += 2 * float(np.linalg.norm(self.hamiltonian.drive, 2))
        jumps = sum(d.rate * float(np.linalg.norm(d.operator, 2)) ** 2 for d in self.dissipators)
        return width + 2 * jumps

    def hamiltonian_at(self, t: float) -> np.ndarray:
        return self.hamiltonian.at(t) if self.time_dependent else self.hamiltonian

    @property
    def families(self) -> list[str]:
        return list(dict.fromkeys(d.label for d in self.dissipators))

    def total_rate(self) -> float:
        return sum(d.rate for d in self.dissipators)


def _magnon_dissipators(layout: SpaceLayout, p: SystemParams, d: DerivedParams) -> list[Dissipator]:
    out = []
    for k, kappa, nbar in ((1, p.kappa_1, d.nbar_1), (2, p.kappa_2, d.nbar_2)):
        out.append(Dissipator(annihilation(layout, k), kappa * (nbar + 1) / 2, "magnon_decay"))
        out.append(Dissipator(creation(layout, k), kappa * nbar / 2, "magnon_pump"))
    return out


def make_full_spec(layout: SpaceLayout, p: SystemParams, d: DerivedParams) -> LindbladSpec:
    dis = _magnon_dissipators(layout, p, d)
    dis += [
        Dissipator(qubit_op(layout, "sigma_minus"), p.gamma_d * (d.nbar_q + 1) / 2, "qubit_decay"),
        Dissipator(qubit_op(layout, "sigma_plus"), p.gamma_d * d.nbar_q / 2, "qubit_pump"),
        Dissipator(qubit_op(layout, "sigma_z"), p.gamma_phi / 4, "qubit_dephasing"),
    ]
    return LindbladSpec(layout, build_H2_parts(layout, p, d), tuple(dis), "full")


def make_effective_spec(layout: SpaceLayout, p: SystemParams, d: DerivedParams) -> LindbladSpec:
    dis = _magnon_dissipators(layout, p, d)
    dis += [
        Dissipator(qubit_op(layout, "sigma_plus"), d.zeta_1, "qubit_flip_up"),
        Dissipator(qubit_op(layout, "sigma_minus"), d.zeta_1, "qubit_flip_down"),
        Dissipator(qubit_op(layout, "sigma_z"), d.zeta_2, "qubit_dephasing"),
    ]
    return LindbladSpec(layout, build_Heff(layout, p, d), tuple(dis), "effective")


def lindblad_rhs_dense(hamiltonian: np.ndarray, dissipators: Sequence[Dissipator], rho: np.ndarray) -> np.ndarray:
    """Reference right-hand side by plain dense matrix products."""
    out = -1j * (hamiltonian @ rho - rho @ hamiltonian)
    for dis in dissipators:
        o = dis.operator
        od = dagger(o)
        out += dis.rate * (2 * o @ rho @ od - od @ o @ rho - rho @ od @ o)
    return out


def _monomial_form(op: np.ndarray):
    """``(cols, vals)`` with ``op[i, cols[i]] = vals[i]`` if every row has <= 1 nonzero."""
    nz = op != 0
    counts = nz.sum(axis=1)
    if np.any(counts > 1):
        return None
    cols = np.where(counts == 1, np.argmax(nz, axis=1), -1).astype(np.int64)
    vals = np.where(counts == 1, op[np.arange(op.shape[0]), np.maximum(cols, 0)], 0).astype(complex)
    return cols, vals


class _CompiledRHS:
    """Right-hand side ``f(t, y)`` on the flattened density matrix."""

    def __init__(self, spec: LindbladSpec):
        dim = spec.layout.dim
        self.dim = dim
        active = [dis for dis in spec.dissipators if dis.rate > 0]
        damping = np.zeros((dim, dim), dtype=complex)
        for dis in active:
            damping += dis.rate * (dagger(dis.operator) @ dis.operator)

        if spec.time_dependent:
            parts = spec.hamiltonian
            blocks = [parts.static - 1j * damping, parts.drive, dagger(parts.drive)]
            self._frequency = parts.frequency
        else:
            blocks = [spec.hamiltonian - 1j * damping]
            self._frequency = None

        indptr, indices, data, offsets = [], [], [], []
        row_base = nnz_base = 0
        for blk in blocks:
            csr = scipy.sparse.csr_matrix(np.asarray(blk, dtype=complex))
            csr.eliminate_zeros()
            offsets.append(row_base)
            indptr.append(csr.indptr.astype(np.int64) + nnz_base)
            indices.append(csr.indices.astype(np.int64))
            data.append(csr.data.astype(complex))
            row_base += dim + 1
            nnz_base += csr.nnz
        self._indptr = np.concatenate(indptr)
        self._indices = np.concatenate(indices)
        self._data = np.concatenate(data)
        self._offsets = np.array(offsets, dtype=np.int64)

        gathers, self._general = [], []
        for dis in active:
            mono = _monomial_form(np.asarray(dis.operator))
            if mono is None:
                self._general.append((scipy.sparse.csr_matrix(dis.operator), dis.rate))
            else:
                gathers.append((mono[0], mono[1], dis.rate))
        self._jump_cols = np.array([g[0] for g in gathers], dtype=np.int64).reshape(len(gathers), dim)
        self._jump_vals = np.array([g[1] for g in gathers], dtype=complex).reshape(len(gathers), dim)
        self._jump_rates = np.array([g[2] for g in gathers], dtype=float)
        self._scratch = np.empty((dim, dim), dtype=complex)
        self.nfev = 0

    def weights(self, t: float) -> np.ndarray:
        if self._frequency is None:
            return np.ones(1, dtype=complex)
        phase = np.exp(-1j * self._frequency * t)
        return np.array([1.0, phase, np.conj(phase)], dtype=complex)

    def matrix(self, t: float, rho: np.ndarray) -> np.ndarray:
        """Lindblad generator applied to the Hermitian part of ``rho``.

        The kernel exploits Hermiticity; feeding it the round-off
        anti-Hermitian part would act with a non-Lindblad map that can grow
        without bound, so that part is projected out (its derivative is zero).
        """
        rho = np.asarray(rho, dtype=complex)
        rho = np.ascontiguousarray((rho + rho.conj().T) / 2)
        out = np.empty_like(rho)
        _kernels.lindblad_rhs(
            rho, out, self._scratch, self._indptr, self._indices, self._data, self._offsets,
            self.weights(t), self._jump_cols, self._jump_vals, self._jump_rates,
        )
        for op, rate in self._general:
            x = op @ rho
            out += 2 * rate * (op @ dagger(x))
        return out

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        self.nfev += 1
        return self.matrix(t, y.reshape(self.dim, self.dim)).ravel()


def thermal_state(layout: SpaceLayout, nbar_1: float, nbar_2: float) -> DensityState:
    """``|g><g|`` times a thermal state of each magnon mode, renormalised after truncation."""
    n = layout.fock_cutoff
    weights, losses = [], []
    for nbar in (nbar_1, nbar_2):
        if nbar < 0:
            raise InvalidArgumentError(f"thermal occupation must be >= 0, got {nbar}")
        levels = np.arange(n)
        if nbar == 0:
            w = (levels == 0).astype(float)
        else:
            q = nbar / (nbar + 1)
            w = q**levels / (nbar + 1)
        weights.append(w)
        losses.append(1.0 - w.sum())
    lost = 1.0 - (1.0 - losses[0]) * (1.0 - losses[1])
    if lost > THERMAL_LOSS_LIMIT:
        raise TruncationError(
            f"thermal weight beyond the cutoff is {lost:.2e} > {THERMAL_LOSS_LIMIT:g}; "
            f"increase fock_cutoff above {n}"
        )
    w1, w2 = (w / w.sum() for w in weights)
    diag = np.zeros(layout.dim)
    diag[: layout.magnon_dim] = np.outer(w1, w2).ravel()
    return DensityState(layout, np.diag(diag).astype(complex))


def top_fock_population(layout: SpaceLayout, rho: np.ndarray) -> float:
    """Largest population of the highest kept Fock level, over both modes."""
    n = layout.fock_cutoff
    pops = np.real(np.diagonal(rho)).reshape(2, n, n).sum(axis=0)
    return float(max(pops[n - 1, :].sum(), pops[:, n - 1].sum()))


@dataclass
class Diagnostics:
    trace_error: np.ndarray
    hermiticity_error: np.ndarray
    min_eigenvalue: np.ndarray
    top_fock_population: np.ndarray
    nfev: int = 0
    n_steps: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {
            "max_trace_error": float(np.max(self.trace_error, initial=0.0)),
            "max_hermiticity_error": float(np.max(self.hermiticity_error, initial=0.0)),
            "min_eigenvalue": float(np.min(self.min_eigenvalue, initial=0.0)),
            "max_top_fock_population": float(np.max(self.top_fock_population, initial=0.0)),
            "nfev": self.nfev,
            "n_steps": self.n_steps,
            "wall_time_s": self.wall_time,
        }


@dataclass
class EvolutionResult:
    layout: SpaceLayout
    label: str
    times: np.ndarray
    states: list[DensityState]
    diagnostics: Diagnostics
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    converged: bool = True

    def state_at(self, t: float) -> DensityState:
        if not self.states:
            raise InvalidArgumentError("states were not kept for this run")
        i = int(np.argmin(np.abs(self.times - t)))
        return self.states[i]


def sample_times(t_end: float, sample_dt: float) -> np.ndarray:
    if t_end < 0:
        raise InvalidArgumentError(f"t_end must be >= 0, got {t_end}")
    if t_end == 0:
        return np.zeros(1)
    if sample_dt <= 0:
        raise InvalidArgumentError(f"sample_dt must be > 0, got {sample_dt}")
    n = int(math.floor(t_end / sample_dt + 1e-9))
    times = sample_dt * np.arange(n + 1)
    if t_end - times[-1] > 1e-9 * sample_dt:
        times = np.append(times, t_end)
    return times


def evolve(
    spec: LindbladSpec,
    rho0: DensityState,
    t_end: float,
    sample_dt: float,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    method: str = "DOP853",
    keep_states: bool = True,
    observers: Mapping[str, Callable[[np.ndarray], float]] | None = None,
    truncation_limit: float | None = TRUNCATION_LIMIT,
    strict: bool = True,
) -> EvolutionResult:
    """Integrate the master equation from ``rho0`` and sample every ``sample_dt``.

    Parameters
    ----------
    spec : LindbladSpec
    rho0 : DensityState
    t_end, sample_dt : float
        Seconds. ``t_end = 0`` returns the initial state only.
    rtol, atol : float
        Tolerances of the embedded Runge-Kutta pair.
    method : {"DOP853", "RK45"}
    keep_states : bool
        Store every sampled state; switch off for sweeps and use ``observers``.
    observers : mapping of name -> callable
        Evaluated on each sampled density matrix; stored in ``observables``.
    truncation_limit : float or None
        Raise :class:`TruncationError` when the top Fock level population
        exceeds this. ``None`` only records it.
    strict : bool
        Raise :class:`NonConvergenceError` when a sampled state breaks the
        trace, Hermiticity or positivity tolerances; otherwise mark the result
        non-converged.

    Returns
    -------
    EvolutionResult
    """
    if rho0.layout != spec.layout:
        raise InvalidArgumentError("initial state and spec use different layouts")
    rho0.validate()
    times = sample_times(t_end, sample_dt)
    observers = dict(observers or {})
    dim = spec.layout.dim
    rhs = _CompiledRHS(spec)

    max_step = np.inf
    if spec.max_frequency > 0:
        max_step = (2 * math.pi / spec.max_frequency) / STEPS_PER_PERIOD
    # explicit stability: an unexcited fast mode is invisible to the error
    # estimate, so long steps amplify its round-off without bound
    scale = spec.generator_scale
    if scale > 0:
        max_step = min(max_step, STABILITY_MARGIN / scale)

    traces, herms, mins, tops = [], [], [], []
    states: list[DensityState] = []
    records: dict[str, list[float]] = {name: [] for name in observers}
    failures: list[str] = []

    def record(t: float, rho: np.ndarray) -> None:
        tr = abs(np.trace(rho) - 1.0)
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        lam = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
        top = top_fock_population(spec.layout, rho)
        traces.append(float(tr))
        herms.append(herm)
        mins.append(lam)
        tops.append(top)
        if truncation_limit is not None and top > truncation_limit:
            raise TruncationError(
                f"top Fock level population {top:.2e} exceeds {truncation_limit:g} at "
                f"t = {t * 1e9:.3f} ns; increase fock_cutoff above {spec.layout.fock_cutoff}"
            )
        if tr > DensityState.TRACE_TOL:
            failures.append(f"trace error {tr:.2e} at t = {t:.3e} s")
        if herm > DensityState.HERMITIAN_TOL:
            failures.append(f"Hermiticity error {herm:.2e} at t = {t:.3e} s")
        if lam < -DensityState.POSITIVITY_TOL:
            failures.append(f"min eigenvalue {lam:.2e} at t = {t:.3e} s")
        for name, fn in observers.items():
            records[name].append(float(fn(rho)))
        if keep_states:
            states.append(DensityState(spec.layout, rho, t))

    start = _time.perf_counter()
    rho_init = np.array(rho0.matrix, dtype=complex)
    record(0.0, rho_init)
    n_steps = 0
    if len(times) > 1:
        try:
            solver_cls = _METHODS[method]
        except KeyError:
            raise InvalidArgumentError(f"unknown integrator {method!r}") from None
        solver = solver_cls(rhs, 0.0, rho_init.ravel(), float(times[-1]), rtol=rtol, atol=atol, max_step=max_step)
        nxt = 1
        while nxt < len(times):
            message = solver.step()
            n_steps += 1
            if solver.status == "failed":
                diag = Diagnostics(np.array(traces), np.array(herms), np.array(mins), np.array(tops),
                                   rhs.nfev, n_steps, _time.perf_counter() - start)
                raise NonConvergenceError(
                    f"integrator failed at t = {solver.t:.6e} s: {message}", diag.as_dict()
                )
            interp = None
            while nxt < len(times) and (times[nxt] <= solver.t or solver.status == "finished"):
                if times[nxt] == solver.t:
                    y = solver.y
                else:
                    interp = interp or solver.dense_output()
                    y = interp(times[nxt])
                record(float(times[nxt]), y.reshape(dim, dim))
                nxt += 1
    diagnostics = Diagnostics(
        np.array(traces), np.array(herms), np.array(mins), np.array(tops),
        rhs.nfev, n_steps, _time.perf_counter() - start,
    )
    if failures and strict:
        raise NonConvergenceError("; ".join(failures[:5]), diagnostics.as_dict())
    return EvolutionResult(
        layout=spec.layout,
        label=spec.label,
        times=times,
        states=states,
        diagnostics=diagnostics,
        observables={k: np.array(v) for k, v in records.items()},
        converged=not failures,
    )


def entanglement_observer(layout: SpaceLayout) -> Callable[[np.ndarray], float]:
    return lambda rho: logarithmic_negativity(partial_trace_qubit(DensityState(layout, rho)))


def standard_observers(layout: SpaceLayout) -> dict[str, Callable[[np.ndarray], float]]:
    """E_N, mean magnon numbers, qubit excitation and trace error."""
    n = layout.fock_cutoff
    levels = np.arange(n)

    def pops(rho):
        return np.real(np.diagonal(rho)).reshape(2, n, n)

    return {
        "E_N": entanglement_observer(layout),
        "n1_mean": lambda rho: float(pops(rho).sum(axis=(0, 2)) @ levels),
        "n2_mean": lambda rho: float(pops(rho).sum(axis=(0, 1)) @ levels),
        "qubit_excitation": lambda rho: float(pops(rho)[1].sum()),
        "trace_error": lambda rho: float(abs(np.trace(rho) - 1.0)),
    }


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    max_delta_EN: float
    max_EN_relative_difference: float
    top_population_low: float
    top_population_high: float

    def as_dict(self) -> dict:
        return {
            "converged": self.converged,
            "max_delta_EN": self.max_delta_EN,
            "max_EN_relative_difference": self.max_EN_relative_difference,
            "top_population_low": self.top_population_low,
            "top_population_high": self.top_population_high,
        }


CONVERGENCE_EN_TOL = 0.01


def _EN_series(run: EvolutionResult) -> np.ndarray:
    if "E_N" in run.observables:
        return run.observables["E_N"]
    return np.array([logarithmic_negativity(partial_trace_qubit(s)) for s in run.states])


def check_convergence(run_low: EvolutionResult, run_high: EvolutionResult) -> ConvergenceReport:
    """Compare runs at cutoffs ``N`` and ``N + 2`` on their common sample times."""
    e_low, e_high = _EN_series(run_low), _EN_series(run_high)
    common, i_low, i_high = np.intersect1d(
        np.round(run_low.times, 15), np.round(run_high.times, 15), return_indices=True
    )
    if common.size == 0:
        raise InvalidArgumentError("runs share no sample times")
    delta = float(np.max(np.abs(e_low[i_low] - e_high[i_high])))
    peak_high = float(np.max(e_high))
    rel = abs(float(np.max(e_low)) - peak_high) / peak_high if peak_high > 0 else abs(float(np.max(e_low)))
    top_low = float(np.max(run_low.diagnostics.top_fock_population))
    top_high = float(np.max(run_high.diagnostics.top_fock_population))
    ok = delta < CONVERGENCE_EN_TOL and top_low < TRUNCATION_LIMIT and top_high < TRUNCATION_LIMIT
    return ConvergenceReport(ok, delta, rel, top_low, top_high)
