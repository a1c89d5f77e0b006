"""Command-line entry point: ``magnonic {derive,evolve,sweep,wigner,verify}``.

Every command writes plain-text tables with a commented header plus a JSON
manifest next to them; each table names its manifest in the header.
"""
from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, default_config, dump_config, load_config
from .errors import (
    InvalidArgumentError,
    NonConvergenceError,
    ParameterError,
    SchemaError,
    TruncationError,
)
from .model import MHZ, check_rwa_conditions, derive_params
from .scenarios import models_for, run_model, run_sweep, run_verification, wigner_snapshot

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGENCE = 2
EXIT_VERIFICATION = 3

log = logging.getLogger("magnonic")


# -- output helpers ----------------------------------------------------------


class Output:
    """Collects files written by one command and emits the manifest last."""

    def __init__(self, directory: Path, command: str, cfg: ScenarioConfig):
        self.dir = directory
        self.command = command
        self.cfg = cfg
        self.files: list[str] = []
        self.manifest_name = f"{command}_manifest.json"
        self.start = time.perf_counter()
        directory.mkdir(parents=True, exist_ok=True)

    def table(self, name: str, columns: list[str], units: list[str], data, comments: list[str] = ()) -> Path:
        header = [
            f"magnonic {__version__} {self.command}",
            f"manifest: {self.manifest_name}",
            f"config_sha256: {self.cfg.digest()}",
            *comments,
            "columns: " + " ".join(columns),
            "units: " + " ".join(units),
        ]
        path = self.dir / name
        arr = np.atleast_2d(np.asarray(data, dtype=float))
        if arr.size == 0:
            arr = arr.reshape(0, len(columns))
        np.savetxt(path, arr, fmt="%.17g", header="\n".join(header), comments="# ")
        self.files.append(name)
        return path

    def text(self, name: str, body: str) -> Path:
        path = self.dir / name
        path.write_text(f"# manifest: {self.manifest_name}\n" + body)
        self.files.append(name)
        return path

    def json(self, name: str, payload: dict) -> Path:
        path = self.dir / name
        path.write_text(json.dumps({"manifest": self.manifest_name, **payload}, indent=2, sort_keys=True) + "\n")
        self.files.append(name)
        return path

    def manifest(self, diagnostics: dict | None = None) -> Path:
        sim = self.cfg.simulation
        payload = {
            "command": self.command,
            "version": __version__,
            "python": platform.python_version(),
            "config_source": self.cfg.source,
            "config_sha256": self.cfg.digest(),
            "config": dump_config(self.cfg),
            "integrator": {"method": sim.method, "rtol": sim.rtol, "atol": sim.atol},
            "fock_cutoff": sim.fock_cutoff,
            "outputs": list(self.files),
            "wall_time_s": time.perf_counter() - self.start,
            "diagnostics": diagnostics or {},
        }
        path = self.dir / self.manifest_name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return path


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _clean(value):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if np.isfinite(v) else str(v)
    return value


# -- plot scripts ------------------------------------------------------------

_PLOT_EVOLVE = '''"""Plot E_N(t) from the evolve output. Run from this directory."""
import numpy as np
import matplotlib.pyplot as plt

for name, style in {files!r}:
    data = np.loadtxt(name)
    plt.plot(data[:, 0], data[:, 1], style, label=name)
plt.xlabel("t (ns)")
plt.ylabel("E_N")
plt.legend()
plt.savefig("evolve.png", dpi=150)
'''

_PLOT_SWEEP_1D = '''"""Plot max E_N against the swept parameter. Run from this directory."""
import numpy as np
import matplotlib.pyplot as plt

data = np.atleast_2d(np.loadtxt("sweep.dat"))
plt.plot(data[:, 0], data[:, 1], "o-")
plt.xlabel("{xlabel}")
plt.ylabel("max E_N")
plt.savefig("sweep.png", dpi=150)
'''

_PLOT_SWEEP_2D = '''"""Heat map of max E_N over the two swept parameters. Run from this directory."""
import numpy as np
import matplotlib.pyplot as plt

data = np.atleast_2d(np.loadtxt("sweep.dat"))
x, y = np.unique(data[:, 0]), np.unique(data[:, 1])
z = data[:, 2].reshape(len(x), len(y))
plt.pcolormesh(x, y, z.T, shading="nearest")
plt.colorbar(label="max E_N")
plt.xlabel("{xlabel}")
plt.ylabel("{ylabel}")
plt.savefig("sweep.png", dpi=150)
'''

_PLOT_WIGNER = '''"""Heat maps of the joint Wigner function. Run from this directory."""
import numpy as np
import matplotlib.pyplot as plt

fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
for ax, (name, labels) in zip(axes, [("wigner_X1X2.dat", ("X1", "X2")), ("wigner_P1P2.dat", ("P1", "P2"))]):
    data = np.loadtxt(name)
    a1, a2 = np.unique(data[:, 0]), np.unique(data[:, 1])
    w = data[:, 2].reshape(len(a1), len(a2))
    mesh = ax.pcolormesh(a1, a2, w.T, shading="nearest", cmap="RdBu_r")
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    ax.set_aspect("equal")
    fig.colorbar(mesh, ax=ax)
fig.savefig("wigner.png", dpi=150)
'''


# -- commands ----------------------------------------------------------------


def cmd_derive(cfg: ScenarioConfig, out: Output, args) -> int:
    p = cfg.system_params()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        d = derive_params(p)
    report = check_rwa_conditions(d, p)
    lines = ["quantity                      value (MHz/2pi)"]
    for name, value in d.as_dict().items():
        if name.startswith("nbar"):
            lines.append(f"{name:<28}  {value:.6g}  (occupation)")
        elif name in ("r_g", "xi_1", "xi_2", "xi_3"):
            lines.append(f"{name:<28}  {value * MHZ:.6g}  (per MHz/2pi)")
        else:
            lines.append(f"{name:<28}  {value / MHZ:.6f}")
    lines += ["", "bare magnon frequencies used (MHz/2pi)"]
    lines += [f"omega_m1  {p.omega_m1 / MHZ:.6f}", f"omega_m2  {p.omega_m2 / MHZ:.6f}"]
    lines += ["", "rotating-wave conditions (fast / slow)", report.format()]
    lines += [f"warning: {w.message}" for w in caught]
    body = "\n".join(lines) + "\n"
    print(body, end="")
    out.text("derive.txt", body)
    out.json("derive.json", _clean({
        "derived": d.as_dict(),
        "units": "rad/s; r_g and xi in s/rad; nbar dimensionless",
        "rwa": report.as_dict(),
        "omega_m1": p.omega_m1,
        "omega_m2": p.omega_m2,
    }))
    out.manifest({"rwa_ok": report.ok, "warnings": [str(w.message) for w in caught]})
    if not report.ok:
        print("rotating-wave conditions violated: " + ", ".join(c.name for c in report.failures), file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


_EVOLVE_COLUMNS = ["time_ns", "E_N", "n1_mean", "n2_mean", "qubit_excitation", "trace_error"]
_EVOLVE_UNITS = ["ns", "1", "1", "1", "1", "1"]


def cmd_evolve(cfg: ScenarioConfig, out: Output, args) -> int:
    p = cfg.system_params()
    runs = {}
    for model in models_for(cfg.simulation.model):
        log.info("evolving %s model", model)
        runs[model] = run_model(p, model, cfg.simulation)
    diagnostics = {}
    files = []
    for model, run in runs.items():
        obs = run.result.observables
        cols = [run.result.times * 1e9] + [obs[c] for c in _EVOLVE_COLUMNS[1:]]
        name = f"evolve_{model}.dat"
        out.table(
            name, _EVOLVE_COLUMNS, _EVOLVE_UNITS, np.column_stack(cols),
            [f"model: {model}", f"max_E_N: {run.trace.max_value:.10g} at {run.trace.optimal_time * 1e9:.6g} ns"],
        )
        files.append((name, "k-" if model == "full" else "r--"))
        diagnostics[model] = {
            **run.result.diagnostics.as_dict(),
            "max_E_N": run.trace.max_value,
            "optimal_time_ns": run.trace.optimal_time * 1e9,
        }
        print(f"{model:>9}: max E_N = {run.trace.max_value:.4f} at t = {run.trace.optimal_time * 1e9:.1f} ns")
    if len(runs) == 2:
        full, eff = runs["full"], runs["effective"]
        delta = np.abs(full.result.observables["E_N"] - eff.result.observables["E_N"])
        out.table("evolve_delta.dat", ["time_ns", "abs_delta_E_N"], ["ns", "1"], np.column_stack([full.result.times * 1e9, delta]))
        rel = abs(full.trace.max_value - eff.trace.max_value) / eff.trace.max_value if eff.trace.max_value else 0.0
        diagnostics["max_abs_delta_E_N"] = float(np.max(delta))
        diagnostics["relative_peak_difference"] = rel
        print(f"max |dE_N| = {np.max(delta):.4f}; peak difference {100 * rel:.1f}%")
    out.text("plot_evolve.py", _PLOT_EVOLVE.format(files=files))
    out.manifest(diagnostics)
    return EXIT_OK


def cmd_sweep(cfg: ScenarioConfig, out: Output, args) -> int:
    if cfg.sweep is None:
        raise SchemaError(f"{cfg.source}: the sweep command needs a [sweep] section")
    result = run_sweep(cfg, threads=args.threads)
    columns = [*result.parameters, "max_E_N", "optimal_time_ns", "fock_cutoff"]
    units = [*(u.replace("_over_2pi", "/2pi") for u in result.units), "1", "ns", "1"]
    rows = [[*pt.coordinates, pt.max_EN, pt.optimal_time_ns, pt.fock_cutoff] for pt in result.points]
    out.table("sweep.dat", columns, units, rows, [f"model: {result.model}"])
    for row in rows:
        print("  ".join(f"{v:10.5g}" for v in row))
    labels = [f"{name} ({unit})" for name, unit in zip(result.parameters, units)]
    if len(result.parameters) == 1:
        script = _PLOT_SWEEP_1D.format(xlabel=labels[0])
    else:
        script = _PLOT_SWEEP_2D.format(xlabel=labels[0], ylabel=labels[1])
    out.text("plot_sweep.py", script)
    out.manifest({"points": len(rows), "model": result.model})
    return EXIT_OK


def cmd_wigner(cfg: ScenarioConfig, out: Output, args) -> int:
    snap = wigner_snapshot(cfg, threads=args.threads)
    for plane, grid in snap.grids.items():
        a1, a2 = np.meshgrid(grid.axis_1, grid.axis_2, indexing="ij")
        names = [plane[:2], plane[2:]]
        out.table(
            f"wigner_{plane}.dat", [*names, "W"], ["1", "1", "1"],
            np.column_stack([a1.ravel(), a2.ravel(), grid.values.ravel()]),
            [f"snapshot_time_ns: {snap.time_ns:.10g}", f"model: {snap.run.model}",
             "convention: " + json.dumps(grid.convention, sort_keys=True)],
        )
    out.text("plot_wigner.py", _PLOT_WIGNER)
    peaks = {plane: float(np.max(np.abs(g.values))) for plane, g in snap.grids.items()}
    print(f"snapshot at t = {snap.time_ns:.1f} ns ({snap.run.model} model); max |W| = {peaks}")
    out.manifest({"snapshot_time_ns": snap.time_ns, "max_abs_W": peaks, **snap.run.result.diagnostics.as_dict()})
    return EXIT_OK


def cmd_verify(cfg: ScenarioConfig, out: Output, args) -> int:
    report = run_verification(cfg, seed=args.seed, threads=args.threads, include_dynamics=not args.skip_dynamics)
    body = report.format() + "\n"
    print(body, end="")
    out.text("verify.txt", body)
    out.json("verify.json", _clean({"passed": report.passed, "checks": [
        {"name": i.name, "passed": i.passed, "detail": i.detail} for i in report.items
    ]}))
    out.manifest({"passed": report.passed, "seed": args.seed})
    return EXIT_OK if report.passed else EXIT_VERIFICATION


COMMANDS = {
    "derive": (cmd_derive, "derived parameters and rotating-wave checks"),
    "evolve": (cmd_evolve, "time evolution of E_N and populations"),
    "sweep": (cmd_sweep, "max E_N over a 1-D or 2-D parameter grid"),
    "wigner": (cmd_wigner, "joint Wigner grids at the snapshot time"),
    "verify": (cmd_verify, "effective-Hamiltonian and convergence checks"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magnonic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="TOML scenario file (default: the shipped operating point)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: ./out)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for independent runs")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized verification draws")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "verify":
            p.add_argument("--skip-dynamics", action="store_true", help="only the algebraic checks")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    fn, _ = COMMANDS[args.command]
    try:
        cfg = load_config(args.config) if args.config else default_config()
        return fn(cfg, Output(args.out, args.command, cfg), args)
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        print(json.dumps(_clean(exc.diagnostics), indent=2, default=_jsonable), file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (SchemaError, ParameterError, InvalidArgumentError, TruncationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
