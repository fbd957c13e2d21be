"""Physical parameters and the gate Hamiltonians as operator-term sums.

All frequencies are angular (rad/s) and Hamiltonians are in units of hbar.
Mode vectors use b = +-1 (S_z,c = sz1 + sz2, S_z,s = sz1 - sz2); any physical
normalisation is folded into the sideband Rabi frequency through
``effective_mass``, ``gradient_projection`` and the global ``calibration``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.constants as const

from . import drives
from .drives import EnvelopeSpec, ShelvingSchedule
from .engine.hamiltonian import Term, TimeDependentHamiltonian, constant
from .hilbert import (
    LinearOperator,
    SpaceDescriptor,
    annihilation,
    build_space,
    collective_cz_operators,
    collective_pauli_z,
    ion_projector,
    number,
    sigma_z,
)

AMU = const.physical_constants["atomic mass constant"][0]
TWO_PI = 2 * math.pi
KERR_DEFAULT_HZ_PER_PHONON = -31.5


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class IonSpecies:
    mass: float  # kg
    field_sensitivity: float  # rad/(s T)
    name: str = ""

    def __post_init__(self):
        if not self.mass > 0 or not self.field_sensitivity > 0:
            raise ModelError("ion mass and field sensitivity must be positive")

    @classmethod
    def from_units(cls, mass_amu: float, sensitivity_hz_per_t: float, name: str = "") -> "IonSpecies":
        return cls(mass_amu * AMU, TWO_PI * sensitivity_hz_per_t, name)


CA40 = IonSpecies.from_units(39.962591, 2.5e10, "40Ca+")


@dataclass(frozen=True)
class ModeSpec:
    label: str
    omega: float
    mode_vector: tuple[float, ...]
    effective_mass: float | None = None  # kg; None -> one ion mass
    gradient_projection: float | None = None  # T/m; None -> full drive gradient

    def __post_init__(self):
        object.__setattr__(self, "mode_vector", tuple(float(b) for b in self.mode_vector))
        if not self.omega > 0:
            raise ModelError(f"mode {self.label!r}: frequency must be positive")
        if self.effective_mass is not None and not self.effective_mass > 0:
            raise ModelError(f"mode {self.label!r}: effective mass must be positive")

    def extent(self, species: IonSpecies) -> float:
        """Ground-state spatial extent sqrt(hbar / (2 omega m))."""
        m = self.effective_mass if self.effective_mass is not None else species.mass
        return math.sqrt(const.hbar / (2 * self.omega * m))


@dataclass(frozen=True)
class GateDrive:
    gradient: float  # T/m
    omega_g: float  # rad/s, 0 for DC
    envelope: EnvelopeSpec

    def __post_init__(self):
        if self.gradient < 0:
            raise ModelError("gradient must be non-negative")
        if self.omega_g < 0:
            raise ModelError("drive frequency must be non-negative")

    @property
    def is_dc(self) -> bool:
        return self.omega_g == 0.0


@dataclass(frozen=True)
class MemorySpec:
    """Delta_j(t) = offset + amplitude * cos(frequency * t + phase) on one ion."""

    ion: int
    offset: float = 0.0
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0

    def __call__(self, t):
        return self.offset + self.amplitude * np.cos(self.frequency * np.asarray(t) + self.phase)

    def integral(self, t_g: float) -> float:
        if self.frequency == 0.0:
            return (self.offset + self.amplitude * math.cos(self.phase)) * t_g
        return self.offset * t_g + self.amplitude * (
            math.sin(self.frequency * t_g + self.phase) - math.sin(self.phase)
        ) / self.frequency


@dataclass(frozen=True)
class EFieldSpec:
    g: tuple[float, ...]  # rad/s per mode
    omega_e: float


@dataclass(frozen=True)
class NoiseSpec:
    efield: EFieldSpec | None = None
    static_shift: tuple[float, ...] | None = None  # rad/s per mode
    heating_rates: tuple[float, ...] | None = None  # quanta/s per mode
    dephasing_times: tuple[float, ...] | None = None  # s per mode
    memory: tuple[MemorySpec, ...] | None = None
    kerr_coefficient: float | None = None  # rad/s per axial phonon
    kerr_mode: str = "str"
    n_axial: int = 0

    def __post_init__(self):
        for name in ("static_shift", "heating_rates", "dephasing_times"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(float(x) for x in val))
        if self.heating_rates and any(r < 0 for r in self.heating_rates):
            raise ModelError("heating rates must be non-negative")
        if self.dephasing_times and any(not td > 0 for td in self.dephasing_times):
            raise ModelError("coherence times must be positive")
        if self.n_axial < 0:
            raise ModelError("n_axial must be non-negative")

    def total_static_shift(self, modes: Sequence[ModeSpec]) -> tuple[float, ...]:
        """Static shifts per mode including the Kerr term on ``kerr_mode``."""
        eps = list(self.static_shift) if self.static_shift else [0.0] * len(modes)
        if len(eps) != len(modes):
            raise ModelError("one static shift per mode required")
        if self.kerr_coefficient:
            labels = [m.label for m in modes]
            if self.kerr_mode not in labels:
                raise ModelError(f"Kerr mode {self.kerr_mode!r} not among modes {labels}")
            eps[labels.index(self.kerr_mode)] += self.kerr_coefficient * self.n_axial
        return tuple(eps)


@dataclass(frozen=True)
class HilbertSpec:
    initial_fock: tuple[int, ...] = (0,)
    truncations: tuple[int, ...] | None = None  # None -> auto headroom

    def __post_init__(self):
        object.__setattr__(self, "initial_fock", tuple(int(n) for n in self.initial_fock))
        if any(n < 0 for n in self.initial_fock):
            raise ModelError("initial Fock numbers must be non-negative")
        if self.truncations is not None:
            tr = tuple(int(n) for n in self.truncations)
            if any(t <= n for t, n in zip(tr, self.initial_fock)):
                raise ModelError("truncation must exceed the initial Fock number")
            object.__setattr__(self, "truncations", tr)


@dataclass(frozen=True)
class GateConfig:
    species: IonSpecies
    modes: tuple[ModeSpec, ...]
    drive: GateDrive
    shelving: ShelvingSchedule | None = None
    hilbert: HilbertSpec = field(default_factory=HilbertSpec)
    noise: NoiseSpec | None = None
    calibration: float = 1.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise ModelError("at least one mode is required")
        if not self.calibration > 0:
            raise ModelError("calibration factor must be positive")
        if any(len(m.mode_vector) != 2 for m in self.modes):
            raise ModelError("mode vectors must have one entry per ion (two ions)")
        fock = self.hilbert.initial_fock
        if len(fock) == 1 and len(self.modes) > 1:
            object.__setattr__(self, "hilbert", replace(self.hilbert, initial_fock=fock * len(self.modes)))
        if len(self.hilbert.initial_fock) != len(self.modes):
            raise ModelError("one initial Fock number per mode required")
        if self.hilbert.truncations is not None and len(self.hilbert.truncations) != len(self.modes):
            raise ModelError("one truncation per mode required")
        if self.shelving is not None:
            if len(self.modes) != 1:
                raise ModelError("shelving gates use a single mode")
            if not self.drive.is_dc:
                raise ModelError("shelving gates use a static (DC) gradient")
            if not math.isclose(self.shelving.t_g, self.drive.envelope.t_g, rel_tol=1e-12):
                raise ModelError("shelving schedule and envelope disagree on t_g")
        for j, m in enumerate(self.modes):
            if not self.drive.is_dc and abs(self.drive.omega_g - m.omega) < 1e-6 * m.omega:
                raise ModelError(f"drive frequency resonant with mode {m.label!r}")

    @property
    def t_g(self) -> float:
        return self.drive.envelope.t_g

    @property
    def ion_levels(self) -> tuple[int, int]:
        return (3, 3) if self.shelving is not None else (2, 2)

    def mode_rabi(self, j: int) -> float:
        return sideband_rabi(self.species, self.modes[j], self.drive.gradient, self.calibration)

    def with_gate_time(self, t_g: float) -> "GateConfig":
        drive = replace(self.drive, envelope=self.drive.envelope.with_gate_time(t_g))
        shelving = self.shelving.with_gate_time(t_g) if self.shelving is not None else None
        return replace(self, drive=drive, shelving=shelving)

    def with_drive_frequency(self, omega_g: float) -> "GateConfig":
        return replace(self, drive=replace(self.drive, omega_g=float(omega_g)))

    def with_initial_fock(self, fock: int | Sequence[int], truncations=None) -> "GateConfig":
        if np.ndim(fock) == 0:
            fock = (int(fock),) * len(self.modes)
        return replace(self, hilbert=HilbertSpec(tuple(fock), truncations))

    def with_noise(self, noise: NoiseSpec | None) -> "GateConfig":
        return replace(self, noise=noise)


def sideband_rabi(species: IonSpecies, mode: ModeSpec, gradient: float | None = None, calibration: float = 1.0) -> float:
    """Omega_j = calibration * r_j * (grad B . r_j) / 2 * d(omega_0)/dB."""
    g = mode.gradient_projection if mode.gradient_projection is not None else gradient
    if g is None:
        raise ModelError("no gradient given for the mode")
    return calibration * mode.extent(species) * g / 2 * species.field_sensitivity


# ---------------------------------------------------------------------------
# coefficient functions (vectorised over time)


@dataclass(frozen=True)
class SidebandCoefficient:
    """gamma(t) cos(omega_g t) * amplitude * exp(i (omega + offset) t)."""

    amplitude: float
    omega: float
    omega_g: float
    envelope: EnvelopeSpec
    offset: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = self.amplitude * np.exp(1j * (self.omega + self.offset) * t)
        if self.envelope.kind != "constant":
            val = val * drives.gamma(self.envelope, t)
        if self.omega_g:
            val = val * np.cos(self.omega_g * t)
        return val


@dataclass(frozen=True)
class ShelvedCoefficient:
    """Permanent-gradient coupling: amplitude * exp(i omega t), times gamma if ramped."""

    amplitude: float
    omega: float
    envelope: EnvelopeSpec

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        val = self.amplitude * np.exp(1j * self.omega * t)
        if self.envelope.kind != "constant":
            val = val * drives.gamma(self.envelope, t)
        return val


@dataclass(frozen=True)
class ScheduleCoefficient:
    schedule: ShelvingSchedule
    which: str  # "rabi", "omega_y", "delta"
    scale: float = 0.5

    def __call__(self, t):
        if self.which == "rabi":
            return self.scale * np.asarray(drives.rabi_schedule(self.schedule, t))
        delta, omega_y, _, _ = drives.arp_schedules(self.schedule, np.atleast_1d(t))
        val = omega_y if self.which == "omega_y" else delta
        return self.scale * (val if np.ndim(t) else val[0])


@dataclass(frozen=True)
class EFieldCoefficient:
    g: float
    omega: float
    omega_e: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return 2 * self.g * np.cos(self.omega_e * t) * np.exp(1j * self.omega * t)


# ---------------------------------------------------------------------------
# spaces


def space_for(config: GateConfig) -> SpaceDescriptor:
    """Hilbert space for a config, auto-sizing truncations when not given."""
    tr = config.hilbert.truncations
    if tr is None:
        from .engine.analytic import auto_truncations

        tr = auto_truncations(config)
    return build_space(config.ion_levels, tr)


# ---------------------------------------------------------------------------
# Hamiltonian builders


def _check_space(space: SpaceDescriptor, config: GateConfig) -> None:
    if space.ion_levels != config.ion_levels or space.n_modes != len(config.modes):
        raise ModelError(f"space {space.dims} does not match config (ions {config.ion_levels}, {len(config.modes)} modes)")


def build_gate_hamiltonian(
    config: GateConfig,
    space: SpaceDescriptor | None = None,
    frame_offsets: Sequence[float] | None = None,
) -> TimeDependentHamiltonian:
    """Gradient gate: gamma(t) sum_j cos(omega_g t) Omega_j S_z,j (a_j^dag e^{i w_j t} + h.c.).

    ``frame_offsets`` shifts each mode phase factor to e^{i(w_j + eps_j) t}, the
    rotating-frame form of a static mode shift eps_j a^dag a.
    """
    if config.shelving is not None:
        raise ModelError("config has a shelving schedule; use build_shelving_hamiltonian")
    space = space or space_for(config)
    _check_space(space, config)
    offsets = tuple(frame_offsets) if frame_offsets is not None else (0.0,) * len(config.modes)
    terms = []
    for j, mode in enumerate(config.modes):
        omega_j = config.mode_rabi(j)
        sz = collective_pauli_z(space, mode.mode_vector)
        op = LinearOperator(space, sz.matrix @ annihilation(space, j).matrix.conj().T, label=f"Sz{j} a{j}^dag")
        coef = SidebandCoefficient(omega_j, mode.omega, config.drive.omega_g, config.drive.envelope, offsets[j])
        freq = mode.omega + abs(offsets[j]) + config.drive.omega_g
        terms.append(Term(op, coef, True, freq, f"gate[{mode.label}]"))
    return TimeDependentHamiltonian(space, terms, config.t_g, {"kind": "gate", "config": config.name})


def build_shelving_hamiltonian(config: GateConfig, space: SpaceDescriptor | None = None) -> TimeDependentHamiltonian:
    """2 Omega_z P_z (a^dag e^{iwt} + h.c.) plus the Rabi or ARP shelving drive."""
    if config.shelving is None:
        raise ModelError("shelving schedule missing")
    space = space or space_for(config)
    _check_space(space, config)
    mode = config.modes[0]
    omega_z = config.mode_rabi(0)
    b = mode.mode_vector
    proj = b[0] * ion_projector(space, 0, 2).matrix + b[1] * ion_projector(space, 1, 2).matrix
    op = LinearOperator(space, proj @ annihilation(space, 0).matrix.conj().T, label="Pz a^dag")
    sched = config.shelving
    terms = [
        Term(op, ShelvedCoefficient(2 * omega_z, mode.omega, config.drive.envelope), True, mode.omega, "gradient"),
    ]
    sx, sy, sz = collective_cz_operators(space)
    if sched.kind == "rabi":
        terms.append(Term(sx, ScheduleCoefficient(sched, "rabi"), False, 2 * math.pi / sched.tau, "rabi"))
    else:
        terms.append(Term(sy, ScheduleCoefficient(sched, "omega_y"), False, sched.delta0, "arp_y"))
        terms.append(Term(sz, ScheduleCoefficient(sched, "delta"), False, sched.delta0, "arp_z"))
    return TimeDependentHamiltonian(space, terms, config.t_g, {"kind": "shelving", "config": config.name})


def build_hamiltonian(config: GateConfig, space: SpaceDescriptor | None = None, with_noise: bool = True):
    """Gate or shelving Hamiltonian plus every configured noise term."""
    space = space or space_for(config)
    if config.shelving is None:
        H = build_gate_hamiltonian(config, space)
    else:
        H = build_shelving_hamiltonian(config, space)
    if with_noise and config.noise is not None:
        noise = config.noise
        if noise.efield is not None:
            H = add_efield_drive(H, config)
        if noise.static_shift is not None or noise.kerr_coefficient:
            H = add_static_mode_shift(H, config)
        if noise.memory:
            H = add_memory_error(H, config)
    return H


def add_efield_drive(H: TimeDependentHamiltonian, config: GateConfig) -> TimeDependentHamiltonian:
    """Append 2 cos(w_e t) g_a (a^dag e^{i w_a t} + h.c.) for each mode."""
    ef = config.noise.efield if config.noise else None
    if ef is None:
        raise ModelError("no E-field noise configured")
    if len(ef.g) != len(config.modes):
        raise ModelError("one E-field coupling per mode required")
    extra = []
    for j, (mode, g) in enumerate(zip(config.modes, ef.g)):
        if g == 0:
            continue
        op = annihilation(H.space, j).dag()
        extra.append(Term(op, EFieldCoefficient(g, mode.omega, ef.omega_e), True, mode.omega + ef.omega_e, f"efield[{mode.label}]"))
    return H.with_terms(extra)


def add_static_mode_shift(H: TimeDependentHamiltonian, config: GateConfig) -> TimeDependentHamiltonian:
    """Append eps_a a^dag a (Kerr shift included)."""
    if config.noise is None:
        raise ModelError("no static shift configured")
    eps = config.noise.total_static_shift(config.modes)
    extra = [
        Term(number(H.space, j), constant(e), False, abs(e), f"shift[{config.modes[j].label}]")
        for j, e in enumerate(eps)
        if e != 0
    ]
    return H.with_terms(extra)


def add_memory_error(H: TimeDependentHamiltonian, config: GateConfig) -> TimeDependentHamiltonian:
    """Append (1/2) Delta_j(t) sigma_z,j for each configured ion."""
    mem = config.noise.memory if config.noise else None
    if not mem:
        raise ModelError("no memory error configured")
    if any(d != 2 for d in H.space.ion_levels):
        raise ModelError("memory error is defined for two-level ions only")
    extra = []
    for spec in mem:
        if spec.offset == 0 and spec.amplitude == 0:
            continue
        coef = lambda t, s=spec: 0.5 * s(t)  # noqa: E731
        scale = abs(spec.frequency) + 0.5 * (abs(spec.offset) + abs(spec.amplitude))
        extra.append(Term(sigma_z(H.space, spec.ion), coef, False, scale, f"memory[{spec.ion}]"))
    return H.with_terms(extra)


def memory_phases(config: GateConfig) -> np.ndarray:
    """Phase acquired by each computational state |b1 b2> from the memory term."""
    out = np.zeros(4)
    mem = config.noise.memory if config.noise else None
    if not mem:
        return out
    for idx in range(4):
        z = [1 - 2 * ((idx >> k) & 1) for k in range(2)]
        out[idx] = -0.5 * sum(z[s.ion] * s.integral(config.t_g) for s in mem)
    return out


# ---------------------------------------------------------------------------
# single-mode reductions of spin-diagonal gates


def mode_space(n_max: int) -> SpaceDescriptor:
    """A bare oscillator space (no ions) used for per-mode factorised runs."""
    if n_max < 2:
        raise ModelError("n_max must be at least 2")
    return SpaceDescriptor((), (int(n_max),))


def build_mode_hamiltonian(config: GateConfig, j: int, s: float, n_max: int) -> TimeDependentHamiltonian | None:
    """Mode-j Hamiltonian with S_z,j replaced by its eigenvalue ``s``.

    Valid for gradient gates, whose spin operators are diagonal, so the full
    propagator factorises into sum_s |s><s| (x)_j U_j(s_j).  Returns None when
    no term acts on the mode.
    """
    if config.shelving is not None:
        raise ModelError("shelving gates are not spin-diagonal")
    space = mode_space(n_max)
    mode = config.modes[j]
    a_dag = annihilation(space, 0).dag()
    terms = []
    omega_j = config.mode_rabi(j)
    if s != 0 and omega_j != 0:
        coef = SidebandCoefficient(s * omega_j, mode.omega, config.drive.omega_g, config.drive.envelope)
        terms.append(Term(a_dag, coef, True, mode.omega + config.drive.omega_g, "gate"))
    noise = config.noise
    if noise is not None:
        if noise.efield is not None and noise.efield.g[j] != 0:
            coef = EFieldCoefficient(noise.efield.g[j], mode.omega, noise.efield.omega_e)
            terms.append(Term(a_dag, coef, True, mode.omega + noise.efield.omega_e, "efield"))
        if noise.static_shift is not None or noise.kerr_coefficient:
            eps = noise.total_static_shift(config.modes)[j]
            if eps:
                terms.append(Term(number(space, 0), constant(eps), False, abs(eps), "shift"))
    if not terms:
        return None
    return TimeDependentHamiltonian(space, terms, config.t_g, {"kind": "mode", "mode": j, "s": s})


def spin_diagonal(config: GateConfig) -> bool:
    return config.shelving is None


def computational_z(index: int) -> tuple[int, int]:
    """sigma_z eigenvalues (+1 for |0>, -1 for |1>) of computational state ``index``."""
    return tuple(1 - 2 * ((index >> k) & 1) for k in range(2))
