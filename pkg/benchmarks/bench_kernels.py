"""Compare the compiled and numpy stepping kernels on representative gate runs.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
from __future__ import annotations

import argparse
import math
import statistics
import time

import numpy as np

from aese.drives import EnvelopeSpec, ShelvingSchedule
from aese.engine import compiled_available, evolve
from aese.hilbert import build_space, product_state
from aese.models import CA40, GateConfig, GateDrive, HilbertSpec, ModeSpec, build_hamiltonian

TWO_PI = 2 * math.pi


def _cases():
    com = ModeSpec("com", TWO_PI * 3e6, (1, 1))
    st = ModeSpec("str", TWO_PI * 1e6, (1, -1))
    rf = GateConfig(CA40, (com, st), GateDrive(300.0, TWO_PI * 1.4e6, EnvelopeSpec("sin2_full", 60e-6)))
    dc = GateConfig(CA40, (st,), GateDrive(50.0, 0.0, EnvelopeSpec("sin2_ramp_hold", 100e-6, 20e-6)))
    sh = GateConfig(
        CA40,
        (ModeSpec("str", TWO_PI * 250e3, (1, -1)),),
        GateDrive(50.0, 0.0, EnvelopeSpec("constant", 170e-6)),
        ShelvingSchedule("rabi", 10e-6, 170e-6),
        HilbertSpec((0,)),
        calibration=1 / math.sqrt(2),
    )
    yield "rf two-mode, 12x12", rf, (12, 12)
    yield "dc one-mode, 24", dc, (24,)
    yield "rabi shelving, 3-level, 16", sh, (16,)


def _time(H, psi0, backend, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = evolve(H, psi0, tol=1e-10, backend=backend)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), res


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not compiled_available():
        print("compiled kernel not built; only the python backend is available")
    print(f"{'case':<28} {'dim':>5} {'steps':>7} {'python s':>10} {'cython s':>10} {'speedup':>8} {'max |dpsi|':>11}")
    for label, cfg, tr in _cases():
        space = build_space(cfg.ion_levels, tr)
        spin = np.zeros(space.spin_dimension, dtype=complex)
        spin[[0, 1, cfg.ion_levels[0], cfg.ion_levels[0] + 1]] = 0.5
        psi0 = product_state(space, spin, (0,) * len(tr))
        H = build_hamiltonian(cfg, space)
        tp, rp = _time(H, psi0, "python", args.repeat)
        if compiled_available():
            tc, rc = _time(H, psi0, "cython", args.repeat)
            diff = float(np.max(np.abs(rp.final_state.amplitudes - rc.final_state.amplitudes)))
            print(f"{label:<28} {space.dimension:>5} {rp.steps_taken:>7} {tp:>10.3f} {tc:>10.3f} {tp / tc:>7.1f}x {diff:>11.1e}")
        else:
            print(f"{label:<28} {space.dimension:>5} {rp.steps_taken:>7} {tp:>10.3f} {'-':>10} {'-':>8} {'-':>11}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
