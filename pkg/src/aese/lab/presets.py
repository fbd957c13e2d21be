"""Named scenario presets, stored as raw config dicts in file units.

``PRESETS[name]`` is exactly what ``aese preset export <name>`` writes, so the
TOML round trip is the single source of truth for every scenario.
"""
from __future__ import annotations

import copy
import math

from ..models import KERR_DEFAULT_HZ_PER_PHONON
from .config import LoadedConfig, dumps, resolve

CALIBRATION = 1 / math.sqrt(2)

CA40 = {"name": "40Ca+", "mass_amu": 39.962591, "field_sensitivity_hz_per_t": 2.5e10}


def _com(f_hz: float) -> dict:
    return {"label": "com", "frequency_hz": f_hz, "mode_vector": [1.0, 1.0]}


def _str(f_hz: float) -> dict:
    return {"label": "str", "frequency_hz": f_hz, "mode_vector": [1.0, -1.0]}


def _fig1(name: str, gradient: float, f_str: float, t_grid: list[float]) -> dict:
    return {
        "name": name,
        "calibration": CALIBRATION,
        "species": dict(CA40),
        "modes": [_com(3.0e6), _str(f_str)],
        "drive": {
            "gradient_t_per_m": gradient,
            "frequency_hz": 1.1 * f_str,  # placeholder; solved per point
            "envelope": {"kind": "sin2_full", "gate_time_s": t_grid[0]},
        },
        "hilbert": {"initial_fock": [0]},
        "sweep": {
            "parameter": "drive.envelope.gate_time_s",
            "values": t_grid,
            "derive": "drive_frequency",
            "bracket_hz": [f_str, 3.0e6],
            "initial_fock": [0, 10],
            "averaging": {"method": "haar_exact"},
        },
    }


def _grid(start_us: float, stop_us: float, step_us: float) -> list[float]:
    n = int(round((stop_us - start_us) / step_us))
    return [round((start_us + k * step_us) * 1e-6, 12) for k in range(n + 1)]


def _shelving(name: str, kind: str, f_mode: float, taus: list[float], d0: float | None = None, tol=1e-10) -> dict:
    sh = {"kind": kind, "ramp_time_s": taus[0]}
    if d0 is not None:
        sh["max_splitting_hz"] = d0
    return {
        "name": name,
        "calibration": CALIBRATION,
        "species": dict(CA40),
        "modes": [_str(f_mode)],
        "drive": {
            "gradient_t_per_m": 50.0,
            "frequency_hz": 0.0,
            "envelope": {"kind": "constant", "gate_time_s": 1.0e-3},  # solved per point
        },
        "shelving": sh,
        "hilbert": {"initial_fock": [0]},
        "sweep": {
            "parameter": "shelving.ramp_time_s",
            "values": taus,
            "derive": "gate_time",
            "initial_fock": [0, 10],
            "tolerance": tol,
            "averaging": {"method": "haar_exact"},
        },
    }


FIG2_TAUS = [1e-6, 2e-6, 3e-6, 5e-6, 7e-6, 10e-6, 14e-6, 20e-6, 30e-6, 40e-6, 60e-6]
FIG3_TAUS = [2e-6, 3e-6, 5e-6, 7e-6, 10e-6, 14e-6, 20e-6, 30e-6, 40e-6, 60e-6]


def _budget_example(name: str, static_hz=None, n_axial: int = 0) -> dict:
    noise = {
        "heating_rates_quanta_per_s": [100.0, 1.0],
        "dephasing_times_s": [0.1, 0.1],
    }
    if static_hz is not None:
        noise["static_shift_hz"] = [static_hz, static_hz]
    if n_axial:
        noise["kerr_coefficient_hz_per_phonon"] = KERR_DEFAULT_HZ_PER_PHONON
        noise["kerr_mode"] = "str"
        noise["n_axial"] = n_axial
    return {
        "name": name,
        "calibration": CALIBRATION,
        "species": dict(CA40),
        "modes": [_com(3.0e6), _str(1.0e6)],
        "drive": {
            "gradient_t_per_m": 150.0,
            "frequency_hz": 1.1e6,
            "solve_gate_time": True,
            "envelope": {"kind": "sin2_full", "gate_time_s": 1.0e-4},
        },
        "hilbert": {"initial_fock": [10]},
        "noise": noise,
    }


PRESETS: dict[str, dict] = {
    "fig1_green": _fig1("fig1_green", 300.0, 250e3, _grid(15, 150, 1)),
    "fig1_red": _fig1("fig1_red", 300.0, 1.0e6, _grid(20, 200, 1)),
    "fig1_blue": _fig1("fig1_blue", 150.0, 1.0e6, _grid(40, 400, 2)),
    "fig2_250k": _shelving("fig2_250k", "rabi", 250e3, FIG2_TAUS),
    "fig2_500k": _shelving("fig2_500k", "rabi", 500e3, FIG2_TAUS),
    "fig2_1m": _shelving("fig2_1m", "rabi", 1.0e6, FIG2_TAUS),
    "fig3_400k": _shelving("fig3_400k", "arp", 250e3, FIG3_TAUS, 400e3, tol=1e-11),
    "fig3_1p2m": _shelving("fig3_1p2m", "arp", 250e3, FIG3_TAUS, 1.2e6, tol=1e-11),
    "fig3_2m": _shelving("fig3_2m", "arp", 250e3, FIG3_TAUS, 2.0e6, tol=1e-11),
    "budget_example": _budget_example("budget_example", static_hz=50.0),
    "budget_kerr": _budget_example("budget_kerr", n_axial=10),
}

DESCRIPTIONS = {
    "fig1_green": "RF gradient gate, 300 T/m, stretch 250 kHz, com 3 MHz; infidelity vs gate time",
    "fig1_red": "RF gradient gate, 300 T/m, stretch 1 MHz, com 3 MHz; infidelity vs gate time",
    "fig1_blue": "RF gradient gate, 150 T/m, stretch 1 MHz, com 3 MHz; infidelity vs gate time",
    "fig2_250k": "Rabi shelving, 50 T/m static gradient, mode 250 kHz; infidelity vs ramp time",
    "fig2_500k": "Rabi shelving, 50 T/m static gradient, mode 500 kHz; infidelity vs ramp time",
    "fig2_1m": "Rabi shelving, 50 T/m static gradient, mode 1 MHz; infidelity vs ramp time",
    "fig3_400k": "ARP shelving, 50 T/m, mode 250 kHz, max splitting 400 kHz",
    "fig3_1p2m": "ARP shelving, 50 T/m, mode 250 kHz, max splitting 1.2 MHz",
    "fig3_2m": "ARP shelving, 50 T/m, mode 250 kHz, max splitting 2 MHz",
    "budget_example": "RF gate 150 T/m, drive 1.1 MHz; heating, 50 Hz static shift, dephasing",
    "budget_kerr": "as budget_example with the axial Kerr shift at 10 axial phonons instead of a static shift",
}


def preset_names() -> list[str]:
    return list(PRESETS)


def preset_raw(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def preset_toml(name: str) -> str:
    return dumps(preset_raw(name))


def load_preset(name: str) -> LoadedConfig:
    return resolve(preset_raw(name))


def budget_example_config(kerr: bool = False):
    """The worked-example gate (gate time solved on load for a pi/4 angle)."""
    return load_preset("budget_kerr" if kerr else "budget_example").config
