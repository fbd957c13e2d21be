"""Run a full gate numerically and reduce it to a sector Gram matrix.

For computational input |s>|n> let Psi_s = U |s>|n> and
Phi_{s,s'} = (<s'| (x) 1) Psi_s.  Every pure-state fidelity against a spin
target is then a quadratic form in the 16x16 Gram matrix
G[(s,s'),(u,u')] = <Phi_{s,s'} | Phi_{u,u'}>, so SU(4) averages need no
further propagation.

Three strategies, chosen automatically:

* ``factorized``: gradient gates are spin-diagonal and the modes decouple, so
  each (mode, eigenvalue) pair is propagated on a single oscillator.
* ``sector``: the Hamiltonian preserves each ion's qubit label, so one run
  from |++>|n> is projected onto the four sectors.
* ``full``: four separate runs.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..hilbert import QuantumState, SpaceDescriptor, build_space, product_state, qubit_sector_projectors
from ..models import (
    GateConfig,
    build_hamiltonian,
    build_mode_hamiltonian,
    memory_phases,
    spin_diagonal,
)
from .analytic import auto_truncations, computational_spin_index, mode_eigenvalues
from .integrate import PropagationError, evolve


@dataclass
class GateResponse:
    gram: np.ndarray  # (16, 16)
    fock_return: np.ndarray  # (4,) <s,n|Psi_s>
    max_leakage: float
    norm_drift: float
    steps: int
    strategy: str
    truncations: tuple[int, ...]
    wall_time: float = 0.0
    backend: str = ""
    notes: list[str] = field(default_factory=list)

    @property
    def sector_gram(self) -> np.ndarray:
        """4x4 block <Phi_{s,s}|Phi_{u,u}>."""
        idx = [5 * s for s in range(4)]
        return self.gram[np.ix_(idx, idx)]


def _diag_gram(K: np.ndarray) -> np.ndarray:
    G = np.zeros((16, 16), dtype=complex)
    idx = [5 * s for s in range(4)]
    G[np.ix_(idx, idx)] = K
    return G


def _sector_preserving(H) -> bool:
    masks = qubit_sector_projectors(H.space)
    label = np.zeros(H.space.dimension, dtype=int)
    for k, (_, m) in enumerate(masks):
        label[m] = k
    for term in H.terms:
        coo = term.operator.matrix.tocoo()
        if np.any(label[coo.row] != label[coo.col]):
            return False
    return True


def _evolve_checked(H, psi, tol, backend, leakage_bound, norm_bound):
    return evolve(H, psi, tol=tol, backend=backend, leakage_bound=leakage_bound, norm_bound=norm_bound)


def _grow(tr: tuple[int, ...], fock: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(t + max(6, (t - n) // 2) for t, n in zip(tr, fock))


def simulate_gate(
    config: GateConfig,
    tol: float = 1e-10,
    strategy: str = "auto",
    backend: str | None = None,
    leakage_bound: float = 1e-8,
    norm_bound: float = 1e-9,
    max_regrow: int = 3,
) -> GateResponse:
    """Propagate the configured gate from |s>|n> for every computational s.

    Truncations default to the headroom rule; if a run leaks, the cutoff is
    raised and the run repeated (up to ``max_regrow`` times).  A run that
    only violates the norm bound is repeated with a tolerance ten times
    tighter, down to 1e-12.
    """
    t0 = time.perf_counter()
    fock = config.hilbert.initial_fock
    tr = config.hilbert.truncations or auto_truncations(config)
    if strategy == "auto":
        strategy = "factorized" if spin_diagonal(config) else "sector"
    notes: list[str] = []
    for attempt in range(max_regrow + 1):
        try:
            if strategy == "factorized":
                resp = _run_factorized(config, tr, tol, backend, leakage_bound, norm_bound)
            else:
                resp = _run_full_space(config, tr, tol, backend, leakage_bound, norm_bound, strategy)
            break
        except PropagationError as exc:
            leak = exc.diagnostics.get("max_leakage", 0.0)
            drift = exc.diagnostics.get("norm_drift", 0.0)
            if attempt >= max_regrow:
                raise
            if leak >= leakage_bound:
                new = _grow(tr, fock)
                notes.append(f"leakage {leak:.2e} at truncation {tr}; retrying with {new}")
                tr = new
                continue
            if drift >= norm_bound and tol > 1e-12:
                new_tol = max(tol / 10, 1e-12)
                notes.append(f"norm drift {drift:.2e} at tol {tol:.0e}; retrying with {new_tol:.0e}")
                tol = new_tol
                continue
            raise
    resp.notes = notes + resp.notes
    resp.wall_time = time.perf_counter() - t0
    return resp


def _run_factorized(config, tr, tol, backend, leakage_bound, norm_bound) -> GateResponse:
    fock = config.hilbert.initial_fock
    n_modes = len(config.modes)
    eig = np.array([mode_eigenvalues(config, j) for j in range(n_modes)])
    finals: dict[tuple[int, float], np.ndarray] = {}
    leak = drift = 0.0
    steps = 0
    be = ""
    for j in range(n_modes):
        for s in sorted(set(eig[j])):
            H = build_mode_hamiltonian(config, j, float(s), tr[j])
            vec = np.zeros(tr[j], dtype=complex)
            vec[fock[j]] = 1.0
            if H is not None:
                res = _evolve_checked(H, QuantumState(H.space, vec), tol, backend, leakage_bound, norm_bound)
                vec = res.final_state.amplitudes
                leak = max(leak, res.max_leakage)
                drift = max(drift, res.norm_drift)
                steps += res.steps_taken
                be = res.backend
            finals[(j, float(s))] = vec
    mem = memory_phases(config)
    K = np.ones((4, 4), dtype=complex)
    ret = np.exp(1j * mem).astype(complex)
    for j in range(n_modes):
        vs = [finals[(j, float(eig[j][s]))] for s in range(4)]
        K *= np.array([[np.vdot(vs[s], vs[u]) for u in range(4)] for s in range(4)])
        ret *= np.array([vs[s][fock[j]] for s in range(4)])
    K *= np.exp(1j * (mem[None, :] - mem[:, None]))
    return GateResponse(_diag_gram(K), ret, leak, drift, steps, "factorized", tuple(tr), backend=be)


def _run_full_space(config, tr, tol, backend, leakage_bound, norm_bound, strategy) -> GateResponse:
    space = build_space(config.ion_levels, tr)
    H = build_hamiltonian(config, space)
    fock = config.hilbert.initial_fock
    comp_idx = [computational_spin_index(space.ion_levels, s) for s in range(4)]
    if strategy == "sector" and not _sector_preserving(H):
        strategy = "full"
    motion_index = space.index((0,) * space.n_ions + tuple(fock)) // space.spin_dimension

    def split(vec):
        t = vec.reshape(space.motional_dimension, space.spin_dimension)
        return t

    if strategy == "sector":
        spin = np.zeros(space.spin_dimension, dtype=complex)
        spin[comp_idx] = 0.5
        res = _evolve_checked(H, product_state(space, spin, fock), tol, backend, leakage_bound, norm_bound)
        psi = res.final_state.amplitudes
        masks = qubit_sector_projectors(space)
        Phi = np.zeros((4, 4, space.motional_dimension), dtype=complex)
        for s, (_, mask) in enumerate(masks):
            t = split(2 * np.where(mask, psi, 0))
            for sp_ in range(4):
                Phi[s, sp_] = t[:, comp_idx[sp_]]
        leak, drift, steps, be = res.max_leakage, res.norm_drift, res.steps_taken, res.backend
    else:
        Phi = np.zeros((4, 4, space.motional_dimension), dtype=complex)
        leak = drift = 0.0
        steps = 0
        for s in range(4):
            spin = np.zeros(space.spin_dimension, dtype=complex)
            spin[comp_idx[s]] = 1.0
            res = _evolve_checked(H, product_state(space, spin, fock), tol, backend, leakage_bound, norm_bound)
            t = split(res.final_state.amplitudes)
            for sp_ in range(4):
                Phi[s, sp_] = t[:, comp_idx[sp_]]
            leak, drift = max(leak, res.max_leakage), max(drift, res.norm_drift)
            steps += res.steps_taken
            be = res.backend
    flat = Phi.reshape(16, -1)
    G = flat.conj() @ flat.T
    ret = np.array([Phi[s, s, motion_index] for s in range(4)])
    return GateResponse(G, ret, leak, drift, steps, strategy, tuple(tr), backend=be)
