"""Scenario configuration files.

Every physical quantity carries its unit in the key name, e.g.
``omega_c_MHz_over_2pi = 6388.0`` or ``temperature_mK = 10.0``. Values are kept
as written (number plus unit) so that a loaded file can be emitted again
without any loss of precision; conversion to rad/s happens only in
:meth:`ScenarioConfig.system_params`.
"""
from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ParameterError, SchemaError
from .model import MHZ, SystemParams, retune_magnons

FREQUENCY_UNITS = {"MHz_over_2pi": MHZ, "kHz_over_2pi": MHZ * 1e-3, "GHz_over_2pi": MHZ * 1e3}
TEMPERATURE_UNITS = {"mK": 1e-3, "K": 1.0}
MODELS = ("full", "effective", "both")
PLANES = ("X1X2", "P1P2")

SYSTEM_FIELDS = tuple(f.name for f in fields(SystemParams))
# sweep parameter -> SystemParams fields it sets
SWEEP_PARAMETERS = {
    "kappa": ("kappa_1", "kappa_2"),
    "kappa_1": ("kappa_1",),
    "kappa_2": ("kappa_2",),
    "gamma": ("gamma_d", "gamma_phi"),
    "gamma_d": ("gamma_d",),
    "gamma_phi": ("gamma_phi",),
    "temperature": ("temperature",),
    "Omega_1": ("Omega_1",),
}


@dataclass(frozen=True)
class Quantity:
    value: float
    unit: str

    @property
    def si(self) -> float:
        scale = FREQUENCY_UNITS.get(self.unit) or TEMPERATURE_UNITS[self.unit]
        return self.value * scale


@dataclass(frozen=True)
class SimulationConfig:
    fock_cutoff: int = 10
    t_end_ns: float = 700.0
    sample_dt_ns: float = 5.0
    model: str = "both"
    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "DOP853"


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    values: tuple[float, ...]
    unit: str

    def si_values(self) -> list[float]:
        return [Quantity(v, self.unit).si for v in self.values]


@dataclass(frozen=True)
class SweepConfig:
    axes: tuple[SweepAxis, ...]
    model: str = "effective"


@dataclass(frozen=True)
class WignerConfig:
    points: int = 81
    extent: float = 3.0
    snapshot_ns: float | None = None
    convention: str = "as_printed"
    tomography_cutoff: int = 24
    model: str = "effective"


@dataclass(frozen=True)
class ScenarioConfig:
    system: dict[str, Quantity]
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    sweep: SweepConfig | None = None
    wigner: WignerConfig = field(default_factory=WignerConfig)
    delta_m: Quantity | None = None
    source: str = "<memory>"

    def system_params(self, **overrides: float) -> SystemParams:
        """Physical parameters in rad/s and kelvin, coil-retuned when ``delta_m`` is set.

        ``overrides`` replace fields (SI units) before retuning.
        """
        values = {name: q.si for name, q in self.system.items()}
        values.update(overrides)
        try:
            p = SystemParams(**values)
            if self.delta_m is not None:
                p = retune_magnons(p, self.delta_m.si)
        except ParameterError as exc:
            raise ParameterError(f"{self.source}: {exc}") from exc
        return p

    def with_system(self, **values: Quantity) -> "ScenarioConfig":
        return replace(self, system={**self.system, **values})

    def digest(self) -> str:
        return hashlib.sha256(dump_config(self).encode()).hexdigest()


# -- parsing -----------------------------------------------------------------


def _line_of(text: str, section: str | None, key: str) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or ``[[section]]``), if found."""
    current = None
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        header = re.match(r"^\s*\[\[?\s*([^\]]+?)\s*\]\]?", line)
        if header:
            current = header.group(1)
            continue
        if current == section and pattern.match(line):
            return i
    return None


class _Reader:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def error(self, message: str, section: str | None = None, key: str | None = None) -> SchemaError:
        line = _line_of(self.text, section, key) if key else None
        if line is None and section and not key:
            line = next(
                (i for i, s in enumerate(self.text.splitlines(), start=1) if re.match(rf"^\s*\[\[?{re.escape(section)}\]", s)),
                None,
            )
        where = f"{self.source}:{line}" if line else self.source
        return SchemaError(f"{where}: {message}")

    def check_keys(self, table: dict, allowed: set[str], section: str) -> None:
        for key in table:
            if key not in allowed:
                raise self.error(f"unknown key {key!r} in [{section}]", section, key)

    def number(self, table: dict, key: str, section: str, *, integer: bool = False) -> float:
        value = table[key]
        ok = isinstance(value, int) if integer else isinstance(value, (int, float))
        if isinstance(value, bool) or not ok:
            kind = "an integer" if integer else "a number"
            raise self.error(f"{key} must be {kind}, got {value!r}", section, key)
        if not integer:
            value = float(value)
            if not math.isfinite(value):
                raise self.error(f"{key} must be finite", section, key)
        return value


def _split_unit(key: str, units) -> tuple[str, str] | None:
    for unit in sorted(units, key=len, reverse=True):
        if key.endswith("_" + unit):
            return key[: -len(unit) - 1], unit
    return None


def _units_for(name: str) -> dict:
    return TEMPERATURE_UNITS if name == "temperature" else FREQUENCY_UNITS


def _parse_system(r: _Reader, table: dict) -> tuple[dict[str, Quantity], Quantity | None]:
    system: dict[str, Quantity] = {}
    delta_m = None
    for key in table:
        split = _split_unit(key, {**FREQUENCY_UNITS, **TEMPERATURE_UNITS})
        if split is None:
            base = key if key in SYSTEM_FIELDS or key == "delta_m" else None
            if base is not None:
                raise r.error(f"key {key!r} lacks a unit suffix (e.g. {key}_{next(iter(_units_for(key)))})", "system", key)
            raise r.error(f"unknown key {key!r} in [system]", "system", key)
        name, unit = split
        if name not in SYSTEM_FIELDS and name != "delta_m":
            raise r.error(f"unknown key {key!r} in [system]", "system", key)
        if unit not in _units_for(name):
            raise r.error(f"unit {unit!r} is not valid for {name}; use one of {sorted(_units_for(name))}", "system", key)
        q = Quantity(r.number(table, key, "system"), unit)
        if name == "delta_m":
            if delta_m is not None:
                raise r.error("delta_m given twice", "system", key)
            delta_m = q
        else:
            if name in system:
                raise r.error(f"{name} given twice with different units", "system", key)
            system[name] = q
    missing = [n for n in SYSTEM_FIELDS if n not in system]
    if missing:
        raise r.error(f"[system] is missing {', '.join(missing)}", "system")
    return {n: system[n] for n in SYSTEM_FIELDS}, delta_m


def _parse_simulation(r: _Reader, table: dict) -> SimulationConfig:
    allowed = {"fock_cutoff", "t_end_ns", "sample_dt_ns", "model", "rtol", "atol", "method"}
    r.check_keys(table, allowed, "simulation")
    kw = {}
    if "fock_cutoff" in table:
        kw["fock_cutoff"] = r.number(table, "fock_cutoff", "simulation", integer=True)
        if kw["fock_cutoff"] < 2:
            raise r.error("fock_cutoff must be >= 2", "simulation", "fock_cutoff")
    for key in ("t_end_ns", "sample_dt_ns", "rtol", "atol"):
        if key in table:
            kw[key] = r.number(table, key, "simulation")
            if kw[key] < 0 or (key != "t_end_ns" and kw[key] == 0):
                raise r.error(f"{key} must be positive", "simulation", key)
    if "model" in table:
        if table["model"] not in MODELS:
            raise r.error(f"model must be one of {MODELS}, got {table['model']!r}", "simulation", "model")
        kw["model"] = table["model"]
    if "method" in table:
        if table["method"] not in ("DOP853", "RK45"):
            raise r.error(f"method must be DOP853 or RK45, got {table['method']!r}", "simulation", "method")
        kw["method"] = table["method"]
    return SimulationConfig(**kw)


def _parse_sweep(r: _Reader, table: dict) -> SweepConfig:
    r.check_keys(table, {"axis", "model"}, "sweep")
    model = table.get("model", "effective")
    if model not in ("full", "effective"):
        raise r.error(f"sweep model must be 'full' or 'effective', got {model!r}", "sweep", "model")
    raw_axes = table.get("axis", [])
    if not isinstance(raw_axes, list) or not 1 <= len(raw_axes) <= 2:
        raise r.error("[sweep] needs one or two [[sweep.axis]] tables", "sweep")
    axes = []
    for ax in raw_axes:
        param = ax.get("parameter")
        if param not in SWEEP_PARAMETERS:
            raise r.error(
                f"unknown sweep parameter {param!r}; choose from {sorted(SWEEP_PARAMETERS)}", "sweep.axis", "parameter"
            )
        value_keys = [k for k in ax if k != "parameter"]
        if len(value_keys) != 1 or not value_keys[0].startswith("values_"):
            raise r.error("each axis needs exactly one unit-suffixed 'values_<unit>' list", "sweep.axis", value_keys[0] if value_keys else None)
        key = value_keys[0]
        unit = key[len("values_"):]
        units = TEMPERATURE_UNITS if param == "temperature" else FREQUENCY_UNITS
        if unit not in units:
            raise r.error(f"unit {unit!r} is not valid for {param}; use one of {sorted(units)}", "sweep.axis", key)
        values = ax[key]
        if not isinstance(values, list) or not values or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and v >= 0 for v in values
        ):
            raise r.error(f"{key} must be a non-empty list of non-negative numbers", "sweep.axis", key)
        axes.append(SweepAxis(param, tuple(float(v) for v in values), unit))
    if len(axes) == 2 and set(SWEEP_PARAMETERS[axes[0].parameter]) & set(SWEEP_PARAMETERS[axes[1].parameter]):
        raise r.error("the two sweep axes set the same parameter", "sweep")
    return SweepConfig(tuple(axes), model)


def _parse_wigner(r: _Reader, table: dict) -> WignerConfig:
    allowed = {"points", "extent", "snapshot_ns", "convention", "tomography_cutoff", "model"}
    r.check_keys(table, allowed, "wigner")
    kw = {}
    for key in ("points", "tomography_cutoff"):
        if key in table:
            kw[key] = r.number(table, key, "wigner", integer=True)
            if kw[key] < 2:
                raise r.error(f"{key} must be >= 2", "wigner", key)
    for key in ("extent", "snapshot_ns"):
        if key in table:
            kw[key] = r.number(table, key, "wigner")
            if kw[key] < 0:
                raise r.error(f"{key} must be non-negative", "wigner", key)
    if "convention" in table:
        if table["convention"] not in ("as_printed", "standard"):
            raise r.error("convention must be 'as_printed' or 'standard'", "wigner", "convention")
        kw["convention"] = table["convention"]
    if "model" in table:
        if table["model"] not in ("full", "effective"):
            raise r.error("wigner model must be 'full' or 'effective'", "wigner", "model")
        kw["model"] = table["model"]
    return WignerConfig(**kw)


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"{source}: {exc}") from exc
    r = _Reader(text, source)
    for key in data:
        if key not in ("system", "simulation", "sweep", "wigner"):
            if isinstance(data[key], dict):
                raise r.error(f"unknown section [{key}]", key)
            raise r.error(f"unknown top-level key {key!r}", None, key)
    if "system" not in data:
        raise SchemaError(f"{source}: missing [system] section")
    system, delta_m = _parse_system(r, data["system"])
    simulation = _parse_simulation(r, data.get("simulation", {}))
    sweep = _parse_sweep(r, data["sweep"]) if "sweep" in data else None
    wigner = _parse_wigner(r, data.get("wigner", {}))
    return ScenarioConfig(system, simulation, sweep, wigner, delta_m, source)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def default_config_text() -> str:
    return resources.files("magnonic").joinpath("data/default.toml").read_text()


def default_config() -> ScenarioConfig:
    return parse_config(default_config_text(), "default.toml")


# -- emission ----------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: ScenarioConfig) -> str:
    """TOML text that parses back to an equal configuration."""
    out = ["[system]"]
    for name, q in cfg.system.items():
        out.append(f"{name}_{q.unit} = {_fmt(q.value)}")
    if cfg.delta_m is not None:
        out.append(f"delta_m_{cfg.delta_m.unit} = {_fmt(cfg.delta_m.value)}")
    out += ["", "[simulation]"]
    for f in fields(SimulationConfig):
        out.append(f"{f.name} = {_fmt(getattr(cfg.simulation, f.name))}")
    out += ["", "[wigner]"]
    for f in fields(WignerConfig):
        value = getattr(cfg.wigner, f.name)
        if value is not None:
            out.append(f"{f.name} = {_fmt(value)}")
    if cfg.sweep is not None:
        out += ["", "[sweep]", f"model = {_fmt(cfg.sweep.model)}"]
        for ax in cfg.sweep.axes:
            values = ", ".join(_fmt(v) for v in ax.values)
            out += ["", "[[sweep.axis]]", f"parameter = {_fmt(ax.parameter)}", f"values_{ax.unit} = [{values}]"]
    return "\n".join(out) + "\n"
