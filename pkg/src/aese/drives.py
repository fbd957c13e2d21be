"""Scalar control schedules: gradient envelope, Rabi and ARP shelving drives.

All schedule functions accept scalars or numpy arrays of times and are
vectorised, so the integrator can evaluate every Runge-Kutta stage time of a
step in one call.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

ENVELOPE_KINDS = ("sin2_full", "sin2_ramp_hold", "constant")
SHELVING_KINDS = ("rabi", "arp")
SIMPSON_PANELS = 4096


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class EnvelopeSpec:
    kind: Literal["sin2_full", "sin2_ramp_hold", "constant"]
    t_g: float
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in ENVELOPE_KINDS:
            raise ScheduleError(f"unknown envelope kind {self.kind!r}")
        if not self.t_g > 0:
            raise ScheduleError("gate time must be positive")
        if self.kind == "sin2_full":
            if self.tau is not None and not np.isclose(self.tau, self.t_g / 2, rtol=1e-12, atol=0):
                raise ScheduleError("sin2_full requires tau = t_g/2")
            object.__setattr__(self, "tau", self.t_g / 2)
        elif self.kind == "sin2_ramp_hold":
            if self.tau is None or not 0 < self.tau <= self.t_g / 2 * (1 + 1e-12):
                raise ScheduleError(f"ramp time must satisfy 0 < tau <= t_g/2 (tau={self.tau}, t_g={self.t_g})")

    def with_gate_time(self, t_g: float) -> "EnvelopeSpec":
        if self.kind == "sin2_full":
            return EnvelopeSpec("sin2_full", t_g)
        return EnvelopeSpec(self.kind, t_g, self.tau)


@dataclass(frozen=True)
class ShelvingSchedule:
    """Clock-to-Zeeman shelving windows of length ``tau`` at both gate ends.

    ``delta0`` (rad/s) is only used by the ARP kind.
    """

    kind: Literal["rabi", "arp"]
    tau: float
    t_g: float
    delta0: float | None = None

    def __post_init__(self):
        if self.kind not in SHELVING_KINDS:
            raise ScheduleError(f"unknown shelving kind {self.kind!r}")
        if not 0 < self.tau <= self.t_g / 2 * (1 + 1e-12):
            raise ScheduleError(f"shelving window must satisfy 0 < tau <= t_g/2 (tau={self.tau}, t_g={self.t_g})")
        if self.kind == "arp" and not (self.delta0 and self.delta0 > 0):
            raise ScheduleError("ARP shelving needs a positive delta0")

    def with_gate_time(self, t_g: float) -> "ShelvingSchedule":
        return ShelvingSchedule(self.kind, self.tau, t_g, self.delta0)


def _times(spec_t_g: float, t, strict: bool = True):
    arr = np.asarray(t, dtype=float)
    if strict and (np.any(arr < -1e-15 * spec_t_g) or np.any(arr > spec_t_g * (1 + 1e-12))):
        raise ScheduleError(f"time outside [0, t_g={spec_t_g}]")
    return arr


def _out(arr, scalar_like):
    return float(arr) if np.ndim(scalar_like) == 0 else arr


# ---------------------------------------------------------------------------
# gradient envelope


def gamma(spec: EnvelopeSpec, t):
    tt = _times(spec.t_g, t)
    if spec.kind == "constant":
        return _out(np.ones_like(tt), t)
    tau, t_g = spec.tau, spec.t_g
    up = np.sin(np.pi * tt / (2 * tau)) ** 2
    down = np.sin(np.pi * (t_g - tt) / (2 * tau)) ** 2
    val = np.where(tt < tau, up, np.where(tt > t_g - tau, down, 1.0))
    return _out(val, t)


def gamma_dot(spec: EnvelopeSpec, t):
    tt = _times(spec.t_g, t)
    if spec.kind == "constant":
        return _out(np.zeros_like(tt), t)
    tau, t_g = spec.tau, spec.t_g
    k = np.pi / (2 * tau)
    up = k * np.sin(np.pi * tt / tau)
    down = -k * np.sin(np.pi * (t_g - tt) / tau)
    val = np.where(tt < tau, up, np.where(tt > t_g - tau, down, 0.0))
    return _out(val, t)


def simpson(f, a: float, b: float, panels: int = SIMPSON_PANELS) -> float:
    """Composite Simpson rule for a vectorised integrand."""
    if b <= a:
        return 0.0
    if panels % 2:
        panels += 1
    x = np.linspace(a, b, panels + 1)
    y = np.asarray(f(x))
    h = (b - a) / panels
    return float(h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum()))


def gamma_mean_square(spec: EnvelopeSpec) -> float:
    """(1/t_g) * integral of gamma^2 over the gate, by windowed Simpson quadrature."""
    if spec.kind == "constant":
        return 1.0
    tau, t_g = spec.tau, spec.t_g
    g2 = lambda x: gamma(spec, x) ** 2  # noqa: E731
    total = simpson(g2, 0.0, tau) + simpson(g2, t_g - tau, t_g)
    plateau = t_g - 2 * tau
    if plateau > 0:
        total += plateau
    return total / t_g


# ---------------------------------------------------------------------------
# Rabi shelving


def _require(schedule: ShelvingSchedule, kind: str) -> None:
    if schedule.kind != kind:
        raise ScheduleError(f"schedule kind is {schedule.kind!r}, expected {kind!r}")


def rabi_schedule(schedule: ShelvingSchedule, t):
    """Omega_R(t): +2pi sin^2/tau in the first window, negative mirror in the last.

    The ramp-down window uses window-local time so both windows carry area pi
    for any t_g.
    """
    _require(schedule, "rabi")
    tt = _times(schedule.t_g, t)
    tau, t_g = schedule.tau, schedule.t_g
    amp = 2 * np.pi / tau
    up = amp * np.sin(np.pi * tt / tau) ** 2
    down = -amp * np.sin(np.pi * (tt - (t_g - tau)) / tau) ** 2
    val = np.where(tt < tau, up, np.where(tt > t_g - tau, down, 0.0))
    return _out(val, t)


def shelving_angle(schedule: ShelvingSchedule, t):
    """phi(t) = (1/2) * integral_0^t Omega_R, in closed form."""
    _require(schedule, "rabi")
    tt = _times(schedule.t_g, t)
    tau, t_g = schedule.tau, schedule.t_g

    def ramp(x):
        return np.pi * x / (2 * tau) - np.sin(2 * np.pi * x / tau) / 4

    down_local = np.clip(tt - (t_g - tau), 0.0, tau)
    val = np.where(
        tt < tau,
        ramp(np.clip(tt, 0.0, tau)),
        np.where(tt > t_g - tau, np.pi / 2 - ramp(down_local), np.pi / 2),
    )
    return _out(val, t)


# ---------------------------------------------------------------------------
# adiabatic rapid passage


def arp_local_time(schedule: ShelvingSchedule, t):
    """Map gate time onto t' in [0, 2 tau]: ramp-up, frozen plateau, ramp-down."""
    tt = _times(schedule.t_g, t)
    tau, t_g = schedule.tau, schedule.t_g
    val = np.where(tt < tau, tt, np.where(tt > t_g - tau, tt + 2 * tau - t_g, tau))
    return _out(val, t)


def arp_schedules(schedule: ShelvingSchedule, t):
    """Return (Delta, Omega_y, Delta_d, phi) at time(s) t.

    Delta = delta0 cos(pi t'/tau), Omega_y = delta0 sin^2(pi t'/tau) >= 0,
    so phi = atan2(Omega_y, Delta)/2 is continuous: 0 -> pi/2 on the way in and
    pi/2 -> 0 on the way out.
    """
    _require(schedule, "arp")
    tp = np.asarray(arp_local_time(schedule, t), dtype=float)
    d0, tau = schedule.delta0, schedule.tau
    delta = d0 * np.cos(np.pi * tp / tau)
    omega_y = d0 * np.sin(np.pi * tp / tau) ** 2
    delta_d = np.hypot(omega_y, delta)
    phi = 0.5 * np.arctan2(omega_y, delta)
    if np.ndim(t) == 0:
        return float(delta), float(omega_y), float(delta_d), float(phi)
    return delta, omega_y, delta_d, phi


def shelving_mixing_angle(schedule: ShelvingSchedule, t):
    if schedule.kind == "rabi":
        return shelving_angle(schedule, t)
    return arp_schedules(schedule, t)[3]


def effective_coupling(schedule: ShelvingSchedule, t):
    """sin^2(phi): weight of the spin-motion coupling seen by clock-state qubits."""
    return np.sin(shelving_mixing_angle(schedule, t)) ** 2


def effective_mean_fourth(schedule: ShelvingSchedule) -> float:
    """(1/t_g) * integral of sin^4(phi) over the gate."""
    tau, t_g = schedule.tau, schedule.t_g
    f = lambda x: effective_coupling(schedule, x) ** 2  # noqa: E731
    total = simpson(f, 0.0, tau) + simpson(f, t_g - tau, t_g) + max(t_g - 2 * tau, 0.0)
    return total / t_g
