import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse.linalg as spla
from scipy.integrate import quad

from aese.drives import EnvelopeSpec, gamma
from aese.engine import PropagationError, Term, TimeDependentHamiltonian, compiled_available, constant, evolve
from aese.engine.analytic import (
    analytic_gate,
    apply_analytic_gate,
    drive_frequency_for_angle,
    envelope_integral,
    gate_time_for_angle,
    zz_angle,
)
from aese.engine.gate_run import simulate_gate
from aese.hilbert import HilbertError, annihilation, build_space, number, product_state, QuantumState
from aese.metrics import AveragingSpec, gate_infidelity
from aese.models import build_hamiltonian, mode_space

from conftest import TWO_PI, dc_single_mode, rf_config, shelving_config


def _driven_oscillator(n_max=30, g=TWO_PI * 20e3, w=TWO_PI * 100e3, t_final=50e-6):
    space = mode_space(n_max)
    a = annihilation(space, 0)
    terms = (
        Term(number(space, 0), constant(w), frequency=w, label="w"),
        Term(a, constant(g), conjugate_pair=True, label="g"),
    )
    return TimeDependentHamiltonian(space, terms, t_final), space


def test_constant_hamiltonian_matches_expm():
    H, space = _driven_oscillator()
    psi0 = product_state(space, np.ones(1), (0,))
    res = evolve(H, psi0, tol=1e-11)
    M = (-1j * H.t_final) * H.matrix_at(0.0).tocsc()
    exact = spla.expm_multiply(M, psi0.amplitudes)
    assert np.max(np.abs(res.final_state.amplitudes - exact)) < 1e-8
    assert res.norm_drift < 1e-9
    assert res.max_leakage < 1e-8


@pytest.mark.skipif(not compiled_available(), reason="compiled kernel not built")
def test_backend_parity():
    cfg = dc_single_mode()
    space = build_space((2, 2), (12,))
    H = build_hamiltonian(cfg, space)
    spin = np.full(4, 0.5)
    psi0 = product_state(space, spin, (0,))
    a = evolve(H, psi0, backend="python")
    b = evolve(H, psi0, backend="cython")
    assert a.backend == "python" and b.backend == "cython"
    assert np.max(np.abs(a.final_state.amplitudes - b.final_state.amplitudes)) < 1e-12
    assert a.steps_taken == b.steps_taken


def test_evolve_argument_checks():
    H, space = _driven_oscillator()
    psi0 = product_state(space, np.ones(1), (0,))
    with pytest.raises(ValueError):
        evolve(H, psi0, tol=1e-3)
    with pytest.raises(ValueError):
        evolve(H, psi0, t_g=2 * H.t_final)
    with pytest.raises(HilbertError):
        evolve(H, QuantumState(space, 2 * psi0.amplitudes))
    other = mode_space(5)
    with pytest.raises(HilbertError):
        evolve(H, product_state(other, np.ones(1), (0,)))


def test_leakage_raises_with_diagnostics():
    # |alpha| ~ 2 g / w = 0.4 is fine at n_max 30; a strong drive at n_max 4 is not
    H, space = _driven_oscillator(n_max=4, g=TWO_PI * 200e3)
    with pytest.raises(PropagationError) as err:
        evolve(H, product_state(space, np.ones(1), (0,)))
    assert err.value.diagnostics["max_leakage"] >= 1e-8
    res = evolve(H, product_state(space, np.ones(1), (0,)), check=False)
    assert res.max_leakage > 1e-8


def test_trajectory_and_samples():
    H, space = _driven_oscillator()
    res = evolve(H, product_state(space, np.ones(1), (0,)), samples=120, store_trajectory=True)
    assert len(res.trajectory) == 121
    assert res.sample_times[-1] == pytest.approx(H.t_final)
    assert res.trajectory[0][0] == 0.0


@pytest.mark.parametrize("kind,tau", [("sin2_full", None), ("sin2_ramp_hold", 20e-6), ("constant", None)])
@pytest.mark.parametrize("delta", [0.0, TWO_PI * 37e3, -TWO_PI * 310e3])
def test_envelope_integral_quadrature(kind, tau, delta):
    env = EnvelopeSpec(kind, 100e-6, tau)

    pts = [tau, env.t_g - tau] if tau else None
    re = quad(lambda t: gamma(env, t) * math.cos(delta * t), 0, env.t_g, points=pts, limit=400, epsabs=1e-16, epsrel=1e-13)[0]
    im = quad(lambda t: gamma(env, t) * math.sin(delta * t), 0, env.t_g, points=pts, limit=400, epsabs=1e-16, epsrel=1e-13)[0]
    got = envelope_integral(env, delta)
    assert abs(got - complex(re, im)) < 1e-10 * env.t_g


def test_gate_time_for_angle_hits_pi_over_4():
    cfg = rf_config()
    t = gate_time_for_angle(cfg)
    assert abs(zz_angle(cfg.with_gate_time(t))) == pytest.approx(math.pi / 4, rel=1e-9)
    dc = dc_single_mode()
    t = gate_time_for_angle(dc)
    assert t >= 2 * dc.drive.envelope.tau
    assert abs(zz_angle(dc.with_gate_time(t))) == pytest.approx(math.pi / 4, rel=1e-9)


def test_drive_frequency_for_angle_lower_branch():
    cfg = rf_config(t_g=100e-6)
    w = drive_frequency_for_angle(cfg, (TWO_PI * 1e6, TWO_PI * 3e6))
    assert TWO_PI * 1e6 < w < TWO_PI * 3e6
    assert abs(zz_angle(cfg.with_drive_frequency(w))) == pytest.approx(math.pi / 4, rel=1e-9)


@pytest.mark.parametrize("f_mode,expected_us", [(250e3, 170), (500e3, 650), (1e6, 2500)])
def test_rabi_shelving_gate_times(f_mode, expected_us):
    for tau in (1e-6, 5e-6, 10e-6, 20e-6):
        t = gate_time_for_angle(shelving_config("rabi", f_mode, tau))
        assert t * 1e6 == pytest.approx(expected_us, rel=0.2)


def test_analytic_gate_matches_full_evolution():
    cfg = dc_single_mode(gradient=40.0, f_mode=1e6, tau=15e-6, t_g=60e-6)
    cfg = cfg.with_gate_time(gate_time_for_angle(cfg))
    gate = analytic_gate(cfg)
    assert abs(gate.zz_angle) == pytest.approx(math.pi / 4, rel=1e-9)
    space = build_space((2, 2), (16,))
    psi0 = product_state(space, np.full(4, 0.5), (2,))
    num = evolve(build_hamiltonian(cfg, space), psi0, tol=1e-11).final_state
    ana = apply_analytic_gate(gate, psi0)
    assert 1 - num.fidelity(ana) < 1e-7


def test_simulate_gate_strategies_agree():
    cfg = rf_config(gradient=150.0, t_g=80e-6)
    cfg = cfg.with_drive_frequency(drive_frequency_for_angle(cfg, (TWO_PI * 1e6, TWO_PI * 3e6)))
    a = simulate_gate(cfg, strategy="factorized")
    b = simulate_gate(cfg, strategy="full")
    assert a.strategy == "factorized" and b.strategy == "full"
    assert np.max(np.abs(a.sector_gram - b.sector_gram)) < 1e-7
    assert np.max(np.abs(a.fock_return - b.fock_return)) < 1e-7
    for r in (a, b):
        assert r.norm_drift < 1e-9 and r.max_leakage < 1e-8


def test_simulate_gate_regrows_truncation():
    cfg = rf_config(gradient=150.0, t_g=80e-6, fock=0)
    cfg = cfg.with_drive_frequency(drive_frequency_for_angle(cfg, (TWO_PI * 1e6, TWO_PI * 3e6)))
    tiny = replace(cfg, hilbert=replace(cfg.hilbert, truncations=(2, 2)))
    r = simulate_gate(tiny, max_regrow=3)
    assert r.truncations != (2, 2)
    assert any("leakage" in n for n in r.notes)
    assert r.max_leakage < 1e-8


def test_shelving_sector_run_is_unitary():
    cfg = shelving_config("rabi", 250e3, 10e-6)
    cfg = cfg.with_gate_time(gate_time_for_angle(cfg))
    r = simulate_gate(cfg)
    assert r.strategy == "sector"
    assert r.norm_drift < 1e-9 and r.max_leakage < 1e-8
    # |00> never shelves; other inputs lose a little weight to the clock levels
    p = np.diag(r.sector_gram).real
    assert p[0] == pytest.approx(1.0, abs=1e-9)
    assert np.all((p > 0.99) & (p <= 1 + 1e-9))


@pytest.mark.parametrize("which", ["rf", "rabi"])
def test_truncation_headroom_converged(which):
    # doubling n_max must move the infidelity by less than 1e-7
    if which == "rf":
        cfg = rf_config(gradient=300.0, f_str=250e3, t_g=50e-6, fock=10)
        cfg = cfg.with_drive_frequency(drive_frequency_for_angle(cfg, (TWO_PI * 250e3, TWO_PI * 3e6)))
    else:
        cfg = shelving_config("rabi", 250e3, 10e-6, fock=10)
        cfg = cfg.with_gate_time(gate_time_for_angle(cfg))
    base = simulate_gate(cfg)
    doubled = simulate_gate(replace(cfg, hilbert=replace(cfg.hilbert, truncations=tuple(2 * t for t in base.truncations))))
    gate = analytic_gate(cfg)
    a = gate_infidelity(base, gate, AveragingSpec("haar_exact"))[0]
    b = gate_infidelity(doubled, gate, AveragingSpec("haar_exact"))[0]
    assert abs(a - b) < 1e-7
