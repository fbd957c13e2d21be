"""TOML run configurations with explicit unit suffixes.

Every physical number carries its unit in the key name (``frequency_hz``,
``gradient_t_per_m``, ``gate_time_s`` ...).  Frequencies are written as
ordinary frequencies (Hz) and converted once, here, to rad/s.  A small set of
dimensionless keys is whitelisted; any other unsuffixed number is rejected.

A config file holds one gate plus an optional ``[sweep]`` table::

    name = "fig1_green"
    calibration = 0.7071067811865476

    [species]
    mass_amu = 39.962591
    field_sensitivity_hz_per_t = 2.5e10

    [[modes]]
    label = "com"
    frequency_hz = 3.0e6
    mode_vector = [1, 1]

    [drive]
    gradient_t_per_m = 300.0
    frequency_hz = 0.0            # 0 selects a static (DC) gradient
    solve_gate_time = false       # true: choose t_g for a pi/4 angle

    [drive.envelope]
    kind = "sin2_full"
    gate_time_s = 1.0e-4

    [sweep]
    parameter = "drive.envelope.gate_time_s"
    values = [1.0e-4, 1.5e-4]     # in the unit of the swept key
    derive = "drive_frequency"
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..engine.analytic import gate_time_for_angle
from ..drives import EnvelopeSpec, ScheduleError, ShelvingSchedule
from ..metrics import AveragingSpec
from ..models import (
    AMU,
    TWO_PI,
    EFieldSpec,
    GateConfig,
    GateDrive,
    HilbertSpec,
    IonSpecies,
    MemorySpec,
    ModelError,
    ModeSpec,
    NoiseSpec,
)

UNIT_SUFFIXES = ("_hz", "_s", "_t_per_m", "_amu", "_hz_per_t", "_quanta_per_s", "_hz_per_phonon", "_rad")
DIMENSIONLESS = {
    "calibration",
    "mode_vector",
    "initial_fock",
    "truncations",
    "n_axial",
    "ion",
    "sample_count",
    "seed",
    "tolerance",
    "values",
    "start",
    "stop",
    "count",
    "max_regrow",
}

# allowed keys per table; "*" marks array-of-tables entries
SCHEMA: dict[str, set[str]] = {
    "": {"name", "calibration", "species", "modes", "drive", "shelving", "hilbert", "noise", "sweep"},
    "species": {"name", "mass_amu", "field_sensitivity_hz_per_t"},
    "modes.*": {"label", "frequency_hz", "mode_vector", "effective_mass_amu", "gradient_projection_t_per_m"},
    "drive": {"gradient_t_per_m", "frequency_hz", "envelope", "solve_gate_time"},
    "drive.envelope": {"kind", "gate_time_s", "ramp_time_s"},
    "shelving": {"kind", "ramp_time_s", "max_splitting_hz"},
    "hilbert": {"initial_fock", "truncations"},
    "noise": {
        "static_shift_hz",
        "heating_rates_quanta_per_s",
        "dephasing_times_s",
        "kerr_coefficient_hz_per_phonon",
        "kerr_mode",
        "n_axial",
        "efield",
        "memory",
    },
    "noise.efield": {"coupling_hz", "frequency_hz"},
    "noise.memory.*": {"ion", "offset_hz", "amplitude_hz", "frequency_hz", "phase_rad"},
    "sweep": {
        "parameter",
        "values",
        "range",
        "derive",
        "bracket_hz",
        "initial_fock",
        "tolerance",
        "strategy",
        "compensate_local",
        "max_regrow",
        "averaging",
    },
    "sweep.range": {"start", "stop", "count", "spacing"},
    "sweep.averaging": {"method", "sample_count", "seed"},
}

DERIVE_MODES = ("none", "drive_frequency", "gate_time")


class ConfigError(ValueError):
    """Schema violation; the message names the key path and, when known, the line."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        where = path or "<root>"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]  # in the unit of the swept key, as written
    derive: str = "none"
    bracket: tuple[float, float] | None = None  # rad/s
    initial_fock: tuple[int, ...] = (0,)
    averaging: AveragingSpec = field(default_factory=lambda: AveragingSpec("haar_exact"))
    tolerance: float = 1e-10
    strategy: str = "auto"
    compensate_local: bool = True
    max_regrow: int = 3

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size < 2:
            raise ConfigError("a sweep needs at least two points", "sweep.values")
        d = np.diff(v)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("sweep grid must be strictly monotone", "sweep.values")
        if self.derive not in DERIVE_MODES:
            raise ConfigError(f"derive must be one of {DERIVE_MODES}", "sweep.derive")


@dataclass(frozen=True)
class LoadedConfig:
    config: GateConfig
    sweep: SweepSpec | None
    raw: dict
    source: str = ""

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# line lookup for diagnostics

_HEADER = re.compile(r"^\s*(\[\[?)\s*([A-Za-z0-9_.\-]+)\s*\]\]?")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-]+)\s*=")


def _locate(text: str | None, path: str) -> int | None:
    """Best-effort line number of ``path`` (e.g. ``modes.1.frequency_hz``)."""
    if not text:
        return None
    parts = path.split(".")
    table: list[str] = []
    counts: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _HEADER.match(line)
        if m:
            name = m.group(2)
            if m.group(1) == "[[":
                counts[name] = counts.get(name, -1) + 1
                table = name.split(".") + [str(counts[name])]
            else:
                table = name.split(".")
            if table == parts:
                return lineno
            continue
        k = _KEY.match(line)
        if k and table + [k.group(1)] == parts:
            return lineno
    # fall back to the enclosing table
    if len(parts) > 1:
        return _locate(text, ".".join(parts[:-1]))
    return None


# ---------------------------------------------------------------------------
# validation


def _schema_key(path: list[str]) -> str:
    return ".".join("*" if p.isdigit() else p for p in path)


def _has_unit(key: str) -> bool:
    return key.endswith(UNIT_SUFFIXES) or key in DIMENSIONLESS


def _is_number(v) -> bool:
    if isinstance(v, bool):
        return False
    if isinstance(v, (int, float)):
        return True
    return isinstance(v, list) and bool(v) and all(_is_number(x) for x in v)


def _walk(raw: dict, text: str | None, strict: bool, prefix: list[str]) -> None:
    allowed = SCHEMA.get(_schema_key(prefix))
    for key, val in raw.items():
        path = prefix + [key]
        dotted = ".".join(path)
        if _is_number(val) and not _has_unit(key):
            raise ConfigError("numeric value without a unit suffix", dotted, _locate(text, dotted))
        if allowed is not None and key not in allowed:
            msg = f"unknown key (expected one of {sorted(allowed)})"
            if strict:
                raise ConfigError(msg, dotted, _locate(text, dotted))
            warnings.warn(str(ConfigError(msg, dotted, _locate(text, dotted))), stacklevel=3)
            continue
        if isinstance(val, dict):
            _walk(val, text, strict, path)
        elif isinstance(val, list) and val and all(isinstance(x, dict) for x in val):
            for i, item in enumerate(val):
                _walk(item, text, strict, path + [str(i)])


class _Reader:
    """Typed access to a raw table with path-aware errors."""

    def __init__(self, table: dict, path: str, text: str | None):
        self.t = table
        self.path = path
        self.text = text

    def _err(self, key: str, msg: str) -> ConfigError:
        p = f"{self.path}.{key}" if self.path else key
        return ConfigError(msg, p, _locate(self.text, p))

    def has(self, key: str) -> bool:
        return key in self.t

    def sub(self, key: str, required: bool = True) -> "_Reader | None":
        if key not in self.t:
            if required:
                raise self._err(key, "missing table")
            return None
        val = self.t[key]
        if not isinstance(val, dict):
            raise self._err(key, "expected a table")
        return _Reader(val, f"{self.path}.{key}" if self.path else key, self.text)

    def number(self, key: str, default=None, *, positive=False, nonneg=False) -> float:
        if key not in self.t:
            if default is None:
                raise self._err(key, "missing required value")
            return default
        v = self.t[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise self._err(key, f"expected a finite number, got {v!r}")
        if positive and not v > 0:
            raise self._err(key, f"must be positive, got {v!r}")
        if nonneg and v < 0:
            raise self._err(key, f"must be non-negative, got {v!r}")
        return float(v)

    def integer(self, key: str, default=None, *, nonneg=True) -> int:
        if key not in self.t:
            if default is None:
                raise self._err(key, "missing required value")
            return default
        v = self.t[key]
        if isinstance(v, bool) or not isinstance(v, int) or (nonneg and v < 0):
            raise self._err(key, f"expected a non-negative integer, got {v!r}")
        return v

    def numbers(self, key: str, default=None, *, integer=False) -> tuple | None:
        if key not in self.t:
            return default
        v = self.t[key]
        if not isinstance(v, list) or not v or not all(_is_number(x) and not isinstance(x, list) for x in v):
            raise self._err(key, f"expected a non-empty list of numbers, got {v!r}")
        if integer and not all(isinstance(x, int) for x in v):
            raise self._err(key, "expected integers")
        return tuple(int(x) for x in v) if integer else tuple(float(x) for x in v)

    def string(self, key: str, default=None, choices=None) -> str:
        if key not in self.t:
            if default is None:
                raise self._err(key, "missing required value")
            return default
        v = self.t[key]
        if not isinstance(v, str):
            raise self._err(key, f"expected a string, got {v!r}")
        if choices is not None and v not in choices:
            raise self._err(key, f"expected one of {list(choices)}, got {v!r}")
        return v

    def boolean(self, key: str, default: bool) -> bool:
        if key not in self.t:
            return default
        v = self.t[key]
        if not isinstance(v, bool):
            raise self._err(key, f"expected true/false, got {v!r}")
        return v


def _species(r: _Reader) -> IonSpecies:
    return IonSpecies.from_units(
        r.number("mass_amu", positive=True),
        r.number("field_sensitivity_hz_per_t", positive=True),
        r.string("name", ""),
    )


def _modes(raw: dict, text: str | None) -> tuple[ModeSpec, ...]:
    items = raw.get("modes")
    if not isinstance(items, list) or not items:
        raise ConfigError("at least one [[modes]] entry is required", "modes", _locate(text, "modes"))
    out = []
    for i, item in enumerate(items):
        r = _Reader(item, f"modes.{i}", text)
        vec = r.numbers("mode_vector")
        if vec is None or len(vec) != 2:
            raise r._err("mode_vector", "expected two entries (one per ion)")
        m_eff = r.number("effective_mass_amu", 0.0, nonneg=True)
        proj = r.t.get("gradient_projection_t_per_m")
        out.append(
            ModeSpec(
                r.string("label", f"mode{i}"),
                TWO_PI * r.number("frequency_hz", positive=True),
                vec,
                m_eff * AMU if m_eff > 0 else None,
                r.number("gradient_projection_t_per_m") if proj is not None else None,
            )
        )
    labels = [m.label for m in out]
    if len(set(labels)) != len(labels):
        raise ConfigError("mode labels must be unique", "modes", _locate(text, "modes"))
    return tuple(out)


def _envelope(r: _Reader) -> EnvelopeSpec:
    kind = r.string("kind", choices=("sin2_full", "sin2_ramp_hold", "constant"))
    t_g = r.number("gate_time_s", positive=True)
    tau = r.number("ramp_time_s", positive=True) if r.has("ramp_time_s") else None
    try:
        return EnvelopeSpec(kind, t_g, tau)
    except ScheduleError as exc:
        raise r._err("kind", str(exc)) from None


def _noise(r: _Reader | None) -> NoiseSpec | None:
    if r is None:
        return None
    ef = r.sub("efield", required=False)
    efield = None
    if ef is not None:
        g = ef.numbers("coupling_hz")
        if g is None:
            raise ef._err("coupling_hz", "missing required value")
        efield = EFieldSpec(tuple(TWO_PI * x for x in g), TWO_PI * ef.number("frequency_hz", nonneg=True))
    memory = None
    if "memory" in r.t:
        items = r.t["memory"]
        if not isinstance(items, list):
            raise r._err("memory", "expected [[noise.memory]] entries")
        memory = tuple(
            MemorySpec(
                m.integer("ion"),
                TWO_PI * m.number("offset_hz", 0.0),
                TWO_PI * m.number("amplitude_hz", 0.0),
                TWO_PI * m.number("frequency_hz", 0.0, nonneg=True),
                m.number("phase_rad", 0.0),
            )
            for m in (_Reader(x, f"noise.memory.{i}", r.text) for i, x in enumerate(items))
        )
    shift = r.numbers("static_shift_hz")
    kerr = r.number("kerr_coefficient_hz_per_phonon", 0.0) if r.has("kerr_coefficient_hz_per_phonon") else None
    try:
        return NoiseSpec(
            efield=efield,
            static_shift=tuple(TWO_PI * x for x in shift) if shift else None,
            heating_rates=r.numbers("heating_rates_quanta_per_s"),
            dephasing_times=r.numbers("dephasing_times_s"),
            memory=memory,
            kerr_coefficient=TWO_PI * kerr if kerr is not None else None,
            kerr_mode=r.string("kerr_mode", "str"),
            n_axial=r.integer("n_axial", 0),
        )
    except ModelError as exc:
        raise ConfigError(str(exc), r.path, _locate(r.text, r.path)) from None


def build_config(raw: dict, text: str | None = None) -> GateConfig:
    """Resolve a validated raw dict into a GateConfig (Hz -> rad/s)."""
    root = _Reader(raw, "", text)
    species = _species(root.sub("species"))
    modes = _modes(raw, text)
    dr = root.sub("drive")
    env = _envelope(dr.sub("envelope"))
    drive = GateDrive(
        dr.number("gradient_t_per_m", positive=True),
        TWO_PI * dr.number("frequency_hz", 0.0, nonneg=True),
        env,
    )
    sh = root.sub("shelving", required=False)
    shelving = None
    if sh is not None:
        kind = sh.string("kind", choices=("rabi", "arp"))
        d0 = sh.number("max_splitting_hz", positive=True) if sh.has("max_splitting_hz") else None
        try:
            shelving = ShelvingSchedule(kind, sh.number("ramp_time_s", positive=True), env.t_g, TWO_PI * d0 if d0 else None)
        except ScheduleError as exc:
            raise sh._err("ramp_time_s", str(exc)) from None
    hb = root.sub("hilbert", required=False)
    solve = dr.boolean("solve_gate_time", False)
    try:
        hilbert = HilbertSpec(
            hb.numbers("initial_fock", (0,), integer=True) if hb else (0,),
            hb.numbers("truncations", None, integer=True) if hb else None,
        )
        cfg = GateConfig(
            species=species,
            modes=modes,
            drive=drive,
            shelving=shelving,
            hilbert=hilbert,
            noise=_noise(root.sub("noise", required=False)),
            calibration=root.number("calibration", 1.0, positive=True),
            name=root.string("name", ""),
        )
    except ModelError as exc:
        raise ConfigError(str(exc)) from None
    if solve:
        try:
            cfg = cfg.with_gate_time(gate_time_for_angle(cfg))
        except ValueError as exc:
            raise dr._err("solve_gate_time", f"cannot solve the gate time: {exc}") from None
    return cfg


def _lookup(raw: dict, path: str):
    node: Any = raw
    for p in path.split("."):
        if isinstance(node, list) and p.isdigit() and int(p) < len(node):
            node = node[int(p)]
        elif isinstance(node, dict) and p in node:
            node = node[p]
        else:
            raise KeyError(path)
    return node


def apply_override(raw: dict, path: str, value) -> dict:
    """Copy of ``raw`` with the value at dotted ``path`` replaced."""
    out = copy.deepcopy(raw)
    parts = path.split(".")
    node: Any = out
    for p in parts[:-1]:
        node = node[int(p)] if isinstance(node, list) else node[p]
    leaf = parts[-1]
    if isinstance(node, list):
        node[int(leaf)] = value
    else:
        node[leaf] = value
    return out


def _sweep(raw: dict, text: str | None) -> SweepSpec | None:
    if "sweep" not in raw:
        return None
    r = _Reader(raw["sweep"], "sweep", text)
    param = r.string("parameter")
    try:
        current = _lookup(raw, param)
    except KeyError:
        raise r._err("parameter", f"path {param!r} not present in the config") from None
    if not _is_number(current) or isinstance(current, list):
        raise r._err("parameter", f"path {param!r} does not name a scalar number")
    if not param.split(".")[-1].endswith(UNIT_SUFFIXES) and param.split(".")[-1] not in DIMENSIONLESS:
        raise r._err("parameter", "swept key has no unit suffix")
    if r.has("values") == r.has("range"):
        raise r._err("values", "give exactly one of 'values' or [sweep.range]")
    if r.has("values"):
        values = r.numbers("values")
    else:
        g = r.sub("range")
        start, stop = g.number("start"), g.number("stop")
        count = g.integer("count")
        spacing = g.string("spacing", "linear", choices=("linear", "log"))
        if spacing == "log":
            if not (start > 0 and stop > 0):
                raise g._err("start", "log spacing needs positive endpoints")
            values = tuple(float(x) for x in np.geomspace(start, stop, count))
        else:
            values = tuple(float(x) for x in np.linspace(start, stop, count))
    av = r.sub("averaging", required=False)
    averaging = AveragingSpec("haar_exact")
    if av is not None:
        averaging = AveragingSpec(
            av.string("method", "haar_exact", choices=("haar_monte_carlo", "fixed_state", "haar_exact")),
            av.integer("sample_count", 20000),
            av.integer("seed", 12345),
        )
    derive = r.string("derive", "none", choices=DERIVE_MODES)
    if raw.get("drive", {}).get("solve_gate_time") and (param == "drive.envelope.gate_time_s" or derive == "drive_frequency"):
        raise r._err("parameter", "drive.solve_gate_time fixes t_g; it cannot be swept or traded for the drive frequency")
    bracket = r.numbers("bracket_hz")
    if bracket is not None and len(bracket) != 2:
        raise r._err("bracket_hz", "expected [low, high]")
    tol = r.number("tolerance", 1e-10, positive=True)
    if not 1e-12 <= tol <= 1e-6:
        raise r._err("tolerance", "must lie in [1e-12, 1e-6]")
    try:
        return SweepSpec(
            parameter=param,
            values=values,
            derive=derive,
            bracket=(TWO_PI * bracket[0], TWO_PI * bracket[1]) if bracket else None,
            initial_fock=r.numbers("initial_fock", (0,), integer=True),
            averaging=averaging,
            tolerance=tol,
            strategy=r.string("strategy", "auto", choices=("auto", "factorized", "sector", "full")),
            compensate_local=r.boolean("compensate_local", True),
            max_regrow=r.integer("max_regrow", 3),
        )
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], exc.path, _locate(text, exc.path)) from None


def parse_config(text: str, strict: bool = True, source: str = "") -> LoadedConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from None
    return resolve(raw, strict=strict, text=text, source=source)


def resolve(raw: dict, strict: bool = True, text: str | None = None, source: str = "") -> LoadedConfig:
    _walk(raw, text, strict, [])
    return LoadedConfig(build_config(raw, text), _sweep(raw, text), raw, source)


def load_config(path: str | Path, strict: bool = True) -> LoadedConfig:
    """Read a TOML run file; returns the resolved GateConfig and optional SweepSpec."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"no such config file: {p}")
    return parse_config(p.read_text(), strict=strict, source=str(p))


# ---------------------------------------------------------------------------
# writing


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} to TOML")


def dumps(raw: dict) -> str:
    """Serialise a config dict (scalars, lists, tables, arrays of tables) to TOML."""
    lines: list[str] = []

    def emit(table: dict, prefix: str) -> None:
        scalars = [(k, v) for k, v in table.items() if not isinstance(v, dict) and not _is_table_array(v)]
        for k, v in scalars:
            lines.append(f"{k} = {_fmt(v)}")
        for k, v in table.items():
            name = f"{prefix}.{k}" if prefix else k
            if isinstance(v, dict):
                lines.append("")
                lines.append(f"[{name}]")
                emit(v, name)
            elif _is_table_array(v):
                for item in v:
                    lines.append("")
                    lines.append(f"[[{name}]]")
                    emit(item, name)

    emit(raw, "")
    return "\n".join(lines).lstrip("\n") + "\n"


def _is_table_array(v) -> bool:
    return isinstance(v, list) and bool(v) and all(isinstance(x, dict) for x in v)


__all__ = [
    "ConfigError",
    "LoadedConfig",
    "SweepSpec",
    "apply_override",
    "build_config",
    "config_hash",
    "dumps",
    "load_config",
    "parse_config",
    "resolve",
]
