"""Adaptive Dormand-Prince 5(4) propagation of  i d(psi)/dt = H(t) psi.

Step control uses an error-per-unit-step rule in the problem's natural time
unit 1/Lambda (Lambda = ``H.frequency_scale``): a step of size h is accepted
when the max-norm local error estimate is at most ``tol * h * Lambda``.
Steps are taken in fixed-size blocks so all stage coefficients of a block are
evaluated in one vectorised call; every single step is still error-checked.
The state is never renormalised; norm drift is reported and bounded.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..hilbert import HilbertError, QuantumState, leakage
from .backend import get_kernels
from .hamiltonian import TimeDependentHamiltonian

STAGE_C = np.array([1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
TOL_RANGE = (1e-12, 1e-6)
LEAKAGE_BOUND = 1e-8
NORM_BOUND = 1e-9
MIN_SAMPLES = 100


class PropagationError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass
class PropagationResult:
    final_state: QuantumState
    max_leakage: float
    steps_taken: int
    norm_drift: float
    rejected_steps: int = 0
    sample_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    leakage_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    trajectory: list | None = None
    backend: str = ""
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.max_leakage < LEAKAGE_BOUND and self.norm_drift < NORM_BOUND


def evolve(
    H: TimeDependentHamiltonian,
    psi0: QuantumState,
    t_g: float | None = None,
    tol: float = 1e-10,
    *,
    samples: int = MIN_SAMPLES,
    store_trajectory: bool = False,
    leakage_bound: float = LEAKAGE_BOUND,
    norm_bound: float = NORM_BOUND,
    top_k: int = 2,
    backend: str | None = None,
    check: bool = True,
    block: int = 64,
) -> PropagationResult:
    """Integrate psi0 from 0 to t_g under H.

    Raises PropagationError (with a ``diagnostics`` dict) when ``check`` is set
    and the leakage or norm-drift bound is exceeded.
    """
    t_start = time.perf_counter()
    if psi0.space != H.space:
        raise HilbertError("initial state and Hamiltonian live on different spaces")
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise ValueError(f"tol={tol} outside {TOL_RANGE}")
    t_g = H.t_final if t_g is None else float(t_g)
    if not 0 < t_g <= H.t_final * (1 + 1e-12):
        raise ValueError("t_g must lie in (0, H.t_final]")
    norm0 = psi0.norm
    if abs(norm0 - 1.0) > 1e-9:
        raise HilbertError(f"initial state not normalised (norm={norm0!r})")
    samples = max(int(samples), MIN_SAMPLES)

    kern, backend_name = get_kernels(backend)
    comp = H.compile()
    lam = H.frequency_scale
    space = H.space
    y = psi0.amplitudes.copy()
    sample_times = np.linspace(0.0, t_g, samples + 1)[1:]
    leak = np.zeros(samples)
    traj = [(0.0, QuantumState(space, y.copy()))] if store_trajectory else None
    steps = rejected = 0
    drift = 0.0

    if lam == 0.0 or comp.n_slots == 0:
        lk = leakage(y, top_k, space)
        leak[:] = lk
        if store_trajectory:
            traj.extend((float(ts), QuantumState(space, y.copy())) for ts in sample_times)
    else:
        k1 = kern.rhs(comp.indptr, comp.indices, comp.vals, comp.slots, comp.coefficients([0.0])[0], y)
        k1 = np.ascontiguousarray(k1)
        work = np.zeros((8, comp.dimension), dtype=np.complex128)
        h = min(t_g / samples, 0.05 / lam)
        h_min = 1e-4 / lam
        t = 0.0
        for si, t_s in enumerate(sample_times):
            while t_s - t > 1e-13 * t_g:
                remaining = t_s - t
                n_need = math.ceil(remaining / h * (1 - 1e-12))
                if n_need <= block:
                    k_steps, hh = n_need, remaining / n_need
                else:
                    k_steps, hh = block, h
                times = t + (np.arange(k_steps)[:, None] + STAGE_C[None, :]) * hh
                C = np.ascontiguousarray(comp.coefficients(times.ravel()))
                allowed = tol * hh * lam
                acc, max_err, rej = kern.run_block(
                    comp.indptr, comp.indices, comp.vals, comp.slots, C, y, k1, hh, allowed, work
                )
                steps += acc
                t = t_s if (acc == k_steps and n_need <= block) else t + acc * hh
                if rej >= 0:
                    rejected += 1
                    h = hh * max(0.2, 0.9 * (allowed / rej) ** 0.2)
                else:
                    fac = 5.0 if max_err == 0 else min(5.0, max(0.2, 0.9 * (allowed / max_err) ** 0.2))
                    h = max(h, hh) * fac if fac > 1 else hh * fac
                if h < h_min:
                    raise PropagationError(
                        f"step size {h:.3e} fell below floor {h_min:.3e} at t={t:.6e}",
                        {"t": t, "steps": steps, "rejected": rejected},
                    )
            leak[si] = leakage(y, top_k, space)
            drift = max(drift, abs(float(np.linalg.norm(y)) - norm0))
            if store_trajectory:
                traj.append((float(t_s), QuantumState(space, y.copy())))

    result = PropagationResult(
        final_state=QuantumState(space, y),
        max_leakage=float(leak.max()),
        steps_taken=steps,
        norm_drift=drift,
        rejected_steps=rejected,
        sample_times=sample_times,
        leakage_trace=leak,
        trajectory=traj,
        backend=backend_name,
        wall_time=time.perf_counter() - t_start,
    )
    if check and not (result.max_leakage < leakage_bound and result.norm_drift < norm_bound):
        raise PropagationError(
            f"run failed bounds: max leakage {result.max_leakage:.3e} (bound {leakage_bound:.0e}), "
            f"norm drift {result.norm_drift:.3e} (bound {norm_bound:.0e})",
            {
                "max_leakage": result.max_leakage,
                "norm_drift": result.norm_drift,
                "steps": steps,
                "rejected": rejected,
                "result": result,
            },
        )
    return result
