"""Closed-form Magnus propagators: residual displacements and geometric phases.

For a coupling s * c(t) a^dag + h.c. the first Magnus term is the
displacement D(s alpha) with alpha = -i * integral(c), and the second gives a
phase s^2 * theta.  Each mode coupling is split into sidebands
Omega' e^{i delta t}: one at delta = omega (DC) or two at omega -+ omega_g
with Omega' = Omega/2 (RF).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.integrate import cumulative_simpson
from scipy.optimize import minimize_scalar

from .. import drives
from ..drives import EnvelopeSpec
from ..hilbert import HilbertError, QuantumState
from ..models import GateConfig, ModelError, computational_z

SINGULAR_TOL = 1e-9
DEFAULT_ANGLE = math.pi / 4


class AnalyticError(ValueError):
    pass


# ---------------------------------------------------------------------------
# sideband bookkeeping


def sidebands(config: GateConfig, j: int) -> list[tuple[float, float]]:
    """[(delta, Omega')] for mode j; delta is the exponent of e^{i delta t}."""
    mode = config.modes[j]
    omega_j = config.mode_rabi(j)
    if config.shelving is not None:
        return [(mode.omega, 2 * omega_j)]
    if config.drive.is_dc:
        return [(mode.omega, omega_j)]
    wg = config.drive.omega_g
    return [(mode.omega - wg, omega_j / 2), (mode.omega + wg, omega_j / 2)]


def near_sideband(config: GateConfig, j: int) -> tuple[float, float]:
    """The sideband with the smallest |delta| (the one kept by the closed forms)."""
    return min(sidebands(config, j), key=lambda x: abs(x[0]))


def rate_factor(config: GateConfig, j: int) -> float:
    """Phase rate per Omega^2: 1/omega (DC) or omega / (2 (omega^2 - omega_g^2)) (RF)."""
    w = config.modes[j].omega
    if config.drive.is_dc:
        return 1.0 / w
    wg = config.drive.omega_g
    if abs(w - wg) < 1e-6 * w:
        raise AnalyticError(f"drive resonant with mode {config.modes[j].label!r}")
    return w / (2 * (w * w - wg * wg))


# ---------------------------------------------------------------------------
# envelope Fourier integrals


def envelope_integral(env: EnvelopeSpec, delta: float) -> complex:
    """integral_0^{t_g} gamma(t) e^{i delta t} dt in closed form."""
    t_g = env.t_g
    if env.kind == "constant":
        if delta == 0:
            return complex(t_g)
        return (np.exp(1j * delta * t_g) - 1) / (1j * delta)
    tau = env.tau
    if delta == 0:
        return complex(t_g - tau)
    denom = math.pi**2 - (tau * delta) ** 2
    if abs(denom) < SINGULAR_TOL * math.pi**2:
        raise AnalyticError(f"resonant ramp: tau*delta = {tau * delta:.12g} ~ pi; perturb tau")
    return (1j / delta) * (math.pi**2 / 2) * (1 + np.exp(1j * delta * tau)) * (1 - np.exp(1j * delta * (t_g - tau))) / denom


def _coupling_profile(config: GateConfig, j: int, t):
    """Time-dependent spin-motion coupling c_j(t) per unit eigenvalue."""
    omega_j = config.mode_rabi(j)
    mode = config.modes[j]
    env = config.drive.envelope
    val = omega_j * np.exp(1j * mode.omega * t) * np.asarray(drives.gamma(env, t))
    if config.shelving is not None:
        return 2 * val * drives.effective_coupling(config.shelving, t)
    if not config.drive.is_dc:
        val = val * np.cos(config.drive.omega_g * t)
    return val


def _grid(config: GateConfig, per_period: int = 48, minimum: int = 8192) -> np.ndarray:
    wmax = max(m.omega for m in config.modes) + config.drive.omega_g
    n = max(minimum, int(per_period * wmax * config.t_g / (2 * math.pi)))
    n += n % 2
    return np.linspace(0.0, config.t_g, n + 1)


def unit_displacement(config: GateConfig, j: int) -> complex:
    """alpha_j for eigenvalue s = 1: closed form for gradient gates, quadrature for shelving."""
    if config.shelving is None:
        return complex(sum(-1j * om * envelope_integral(config.drive.envelope, d) for d, om in sidebands(config, j)))
    t = _grid(config)
    c = _coupling_profile(config, j, t)
    h = t[1] - t[0]
    integral = h / 3 * (c[0] + c[-1] + 4 * c[1:-1:2].sum() + 2 * c[2:-1:2].sum())
    return complex(-1j * integral)


def peak_displacement(config: GateConfig, j: int) -> float:
    """max_t |alpha_j(t)| over the gate for s = 1 (cumulative quadrature)."""
    t = _grid(config)
    c = _coupling_profile(config, j, t)
    a = cumulative_simpson(c.real, x=t, initial=0) + 1j * cumulative_simpson(c.imag, x=t, initial=0)
    return float(np.max(np.abs(a)))


def mode_eigenvalues(config: GateConfig, j: int) -> np.ndarray:
    """Eigenvalue of the mode-j spin operator on each computational state."""
    b = config.modes[j].mode_vector
    out = np.zeros(4)
    for idx in range(4):
        z = computational_z(idx)
        if config.shelving is None:
            out[idx] = b[0] * z[0] + b[1] * z[1]
        else:
            # shelved qubits couple through P_c: weight b_k on |1c>
            out[idx] = b[0] * (z[0] < 0) + b[1] * (z[1] < 0)
    return out


def auto_truncations(config: GateConfig) -> tuple[int, ...]:
    """n_max_j = n_j + ceil(8 |alpha_peak|^2 + 10), alpha_peak for the largest eigenvalue."""
    out = []
    for j, n in enumerate(config.hilbert.initial_fock):
        s_max = float(np.max(np.abs(mode_eigenvalues(config, j))))
        a = s_max * peak_displacement(config, j)
        out.append(int(n + math.ceil(8 * a * a + 10)))
    return tuple(out)


# ---------------------------------------------------------------------------
# residual spin-motion terms


def residual_displacement(config: GateConfig, mode: int, s: float) -> complex:
    """alpha multiplying a^dag at t_g for S_z eigenvalue ``s`` (all sidebands)."""
    if config.drive.envelope.kind not in ("sin2_full", "sin2_ramp_hold") and config.shelving is None:
        raise AnalyticError("closed-form residual displacement needs a sin^2 envelope")
    return s * unit_displacement(config, mode)


def residual_infidelity_closed_form(config: GateConfig, n: int | None = None, variance: float = 8 / 5) -> float:
    """sum_j pi^4 Omega'^2 / (2 tau^4 delta^6) * (2n+1) * variance, near sideband only."""
    env = config.drive.envelope
    if env.kind == "constant" or config.shelving is not None:
        raise AnalyticError("closed form applies to sin^2 gradient envelopes")
    tau = env.tau
    total = 0.0
    for j in range(len(config.modes)):
        nj = config.hilbert.initial_fock[j] if n is None else n
        delta, om = near_sideband(config, j)
        if abs(delta) * tau < 5:
            import warnings

            warnings.warn(f"delta*tau = {abs(delta) * tau:.2f} < 5: closed form outside its regime", stacklevel=2)
        total += math.pi**4 * om**2 / (2 * tau**4 * delta**6) * (2 * nj + 1) * variance
    return total


# ---------------------------------------------------------------------------
# analytic gate


def effective_mean_square(config: GateConfig) -> float:
    """<gamma_eff^2>: gamma^2 for gradient gates, gamma^2 sin^4(phi) with shelving."""
    env = config.drive.envelope
    if config.shelving is None:
        return drives.gamma_mean_square(env)
    if env.kind == "constant":
        return drives.effective_mean_fourth(config.shelving)
    f = lambda t: (np.asarray(drives.gamma(env, t)) * drives.effective_coupling(config.shelving, t)) ** 2  # noqa: E731
    return drives.simpson(f, 0.0, config.t_g, 8 * drives.SIMPSON_PANELS) / config.t_g


def mode_thetas(config: GateConfig) -> np.ndarray:
    """theta_j multiplying S_j^2 in the gate exponent exp(+i sum_j theta_j S_j^2)."""
    g2 = effective_mean_square(config)
    out = []
    for j in range(len(config.modes)):
        om = config.mode_rabi(j)
        if config.shelving is not None:
            om = 2 * om
        out.append(g2 * config.t_g * om * om * rate_factor(config, j))
    return np.array(out)


def zz_from_phases(phases: np.ndarray) -> float:
    """phi_zz in exp(-i phi_zz sz(x)sz) from four diagonal phases exp(i Phi_s)."""
    z = np.array([computational_z(i) for i in range(4)])
    return float(-np.sum(phases * z[:, 0] * z[:, 1]) / 4)


def zz_angle(config: GateConfig) -> float:
    thetas = mode_thetas(config)
    phases = sum(th * mode_eigenvalues(config, j) ** 2 for j, th in enumerate(thetas))
    return zz_from_phases(np.asarray(phases))


@dataclass(frozen=True)
class AnalyticGate:
    """Diagonal spin phases plus spin-conditional displacements.

    ``phases[s]`` and ``alphas[j][s]`` are indexed by computational state
    (first ion fastest); ion levels above |1c> are left untouched.
    """

    thetas: np.ndarray
    eigenvalues: np.ndarray  # (modes, 4)
    alphas: np.ndarray  # (modes, 4) complex
    phases: np.ndarray  # (4,)
    zz_angle: float
    t_g: float
    ion_levels: tuple[int, int] = (2, 2)
    meta: dict = field(default_factory=dict)

    @property
    def n_modes(self) -> int:
        return len(self.thetas)

    def without_displacement(self) -> "AnalyticGate":
        return AnalyticGate(
            self.thetas, self.eigenvalues, np.zeros_like(self.alphas), self.phases, self.zz_angle,
            self.t_g, self.ion_levels, dict(self.meta),
        )


def analytic_gate(config: GateConfig, include_displacement: bool = True) -> AnalyticGate:
    for j, m in enumerate(config.modes):
        if not config.drive.is_dc and abs(config.drive.omega_g - m.omega) < 1e-6 * m.omega:
            raise AnalyticError(f"drive resonant with mode {m.label!r}")
    thetas = mode_thetas(config)
    eig = np.array([mode_eigenvalues(config, j) for j in range(len(config.modes))])
    phases = np.sum(thetas[:, None] * eig**2, axis=0)
    if include_displacement:
        alphas = np.array([eig[j] * unit_displacement(config, j) for j in range(len(config.modes))])
    else:
        alphas = np.zeros(eig.shape, dtype=complex)
    kind = "shelving" if config.shelving is not None else ("dc" if config.drive.is_dc else "rf")
    return AnalyticGate(thetas, eig, alphas, phases, zz_from_phases(phases), config.t_g, config.ion_levels, {"kind": kind})


def effective_rate(config: GateConfig) -> float:
    """|phi_zz| / t_g for a constant-envelope reading of the protocol (Omega_DC / Omega_RF)."""
    return abs(zz_angle(config)) / config.t_g


def omega_dc(config: GateConfig) -> float:
    """(3/4)(Omega_s^2/omega_s - Omega_c^2/omega_c) for a sin^2 DC gate with modes (com, str)."""
    labels = [m.label for m in config.modes]
    s, c = labels.index("str"), labels.index("com")
    g2 = drives.gamma_mean_square(config.drive.envelope)
    return 2 * g2 * (config.mode_rabi(s) ** 2 / config.modes[s].omega - config.mode_rabi(c) ** 2 / config.modes[c].omega)


def omega_rf(config: GateConfig) -> float:
    """(3/16)|w_s Om_s^2/(w_s^2 - w_g^2) - w_c Om_c^2/(w_c^2 - w_g^2)| for sin^2 RF."""
    labels = [m.label for m in config.modes]
    s, c = labels.index("str"), labels.index("com")
    g2 = drives.gamma_mean_square(config.drive.envelope)
    return abs(2 * g2 * (config.mode_rabi(s) ** 2 * rate_factor(config, s) - config.mode_rabi(c) ** 2 * rate_factor(config, c)))


# ---------------------------------------------------------------------------
# solving for gate parameters


def _bisect(f, lo: float, hi: float, rel: float = 1e-12, max_iter: int = 200) -> float:
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= rel * abs(hi):
            break
    return 0.5 * (lo + hi)


def gate_time_for_angle(config: GateConfig, target_angle: float = DEFAULT_ANGLE) -> float:
    """Smallest t_g (beyond the ramp windows) with |phi_zz(t_g)| = target_angle."""
    env = config.drive.envelope
    taus = [env.tau] if env.kind == "sin2_ramp_hold" else []
    if config.shelving is not None:
        taus.append(config.shelving.tau)
    t_lo = 2 * max(taus) if taus else 0.0

    def angle(t):
        return abs(zz_angle(config.with_gate_time(t))) - target_angle

    lo = t_lo * (1 + 1e-12) if t_lo > 0 else 1e-9
    if angle(lo) >= 0:
        if t_lo > 0:
            return lo
        raise AnalyticError("target angle reached below the minimum representable gate time")
    hi = max(2 * lo, 1e-6)
    for _ in range(80):
        if angle(hi) >= 0:
            break
        lo, hi = hi, 2 * hi
    else:
        raise AnalyticError("target angle unattainable (zero effective rate)")
    return _bisect(angle, lo, hi)


def drive_frequency_for_angle(
    config: GateConfig,
    bracket: tuple[float, float],
    target_angle: float = DEFAULT_ANGLE,
) -> float:
    """Solve omega_g in ``bracket`` so |phi_zz| = target at the config's t_g.

    |phi_zz| diverges at each mode resonance, so the lower branch is used: the
    solution between bracket[0] and the interior minimum of |phi_zz|.
    """
    lo, hi = bracket
    pad = 1e-6
    lo_e, hi_e = lo * (1 + 2 * pad), hi * (1 - 2 * pad)

    def mag(w):
        return abs(zz_angle(config.with_drive_frequency(w)))

    res = minimize_scalar(mag, bounds=(lo_e, hi_e), method="bounded", options={"xatol": 1e-9 * hi})
    w_min = float(res.x)
    if mag(w_min) > target_angle:
        raise AnalyticError(f"gate time too short: minimum |phi_zz| = {mag(w_min):.4g} > target")
    return _bisect(lambda w: mag(w) - target_angle, lo_e, w_min)


# ---------------------------------------------------------------------------
# acting on states


@lru_cache(maxsize=512)
def _displacement(n_max: int, re: float, im: float) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, n_max, dtype=float)), 1).astype(complex)
    alpha = complex(re, im)
    return sla.expm(alpha * a.conj().T - np.conj(alpha) * a)


def displacement_matrix(n_max: int, alpha: complex) -> np.ndarray:
    """Truncated D(alpha) = exp(alpha a^dag - alpha* a) (exactly unitary)."""
    return _displacement(int(n_max), float(np.real(alpha)), float(np.imag(alpha)))


def computational_spin_index(levels: tuple[int, ...], comp: int) -> int:
    """Flat spin index of computational state ``comp`` (|1> -> level 1, i.e. |1c>)."""
    idx, stride = 0, 1
    for k, d in enumerate(levels):
        idx += ((comp >> k) & 1) * stride
        stride *= d
    return idx


def apply_analytic_gate(gate: AnalyticGate, psi0: QuantumState) -> QuantumState:
    """Apply the spin-conditional displacements, then the diagonal phases."""
    space = psi0.space
    if space.ion_levels != tuple(gate.ion_levels) or space.n_modes != gate.n_modes:
        raise HilbertError("gate and state spaces differ")
    t = space.as_tensor(psi0.amplitudes).copy()
    n_ions = space.n_ions
    out = t.copy()
    for comp in range(4):
        levels = tuple((comp >> k) & 1 for k in range(n_ions))
        block = t[levels]  # motional tensor
        for j in range(space.n_modes):
            alpha = gate.alphas[j, comp]
            if alpha != 0:
                D = displacement_matrix(space.mode_truncations[j], alpha)
                block = np.moveaxis(np.tensordot(D, block, axes=([1], [j])), 0, j)
        out[levels] = np.exp(1j * gate.phases[comp]) * block
    return QuantumState(space, space.from_tensor(out))
