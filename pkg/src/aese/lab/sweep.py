"""Sweep orchestration: independent points, bounded pool, ordered output."""
from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import __version__
from ..engine import BACKEND
from ..engine.analytic import (
    analytic_gate,
    drive_frequency_for_angle,
    gate_time_for_angle,
    residual_infidelity_closed_form,
)
from ..engine.gate_run import simulate_gate
from ..metrics import budget, gate_infidelity
from ..models import GateConfig
from .config import LoadedConfig, SweepSpec, apply_override, resolve

CSV_COLUMNS = (
    "sweep_value",
    "initial_n",
    "infidelity_numeric",
    "infidelity_stderr",
    "residual_closed_form",
    "leakage",
    "wall_time_s",
    "status",
)


class SweepError(RuntimeError):
    def __init__(self, message: str, record: "RunRecord | None" = None):
        super().__init__(message)
        self.record = record


@dataclass
class PointResult:
    index: int
    sweep_value: float
    initial_n: int
    infidelity: float = math.nan
    stderr: float = math.nan
    residual_closed_form: float = math.nan
    leakage: float = math.nan
    wall_time: float = 0.0
    status: str = "ok"
    derived: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    budget: dict | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class RunRecord:
    config_hash: str
    config: dict
    resolved: dict
    sweep: dict
    seed: int
    code_version: str
    backend: str
    started: str
    points: list[PointResult]

    @property
    def all_ok(self) -> bool:
        return all(p.ok for p in self.points)

    def curve(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """(sweep values, infidelities) for one initial Fock number."""
        pts = [p for p in self.points if p.initial_n == n]
        return np.array([p.sweep_value for p in pts]), np.array([p.infidelity for p in pts])

    def as_dict(self) -> dict:
        d = asdict(self)
        for p in d["points"]:
            p["config_hash"] = self.config_hash
        return d


def _fmt(x: float) -> str:
    # shortest round-trip decimal
    return repr(float(x))


def point_config(loaded: LoadedConfig, sweep: SweepSpec, value: float) -> tuple[GateConfig, dict]:
    """Resolve the config at one grid value and apply the derived setting."""
    cfg = resolve(apply_override(loaded.raw, sweep.parameter, value)).config
    derived: dict = {}
    if sweep.derive == "drive_frequency":
        bracket = sweep.bracket
        if bracket is None:
            omegas = sorted(m.omega for m in cfg.modes)
            bracket = (omegas[0], omegas[-1]) if len(omegas) > 1 else (omegas[0], 2 * omegas[0])
        cfg = cfg.with_drive_frequency(drive_frequency_for_angle(cfg, bracket))
        derived["drive_frequency_hz"] = cfg.drive.omega_g / (2 * math.pi)
    elif sweep.derive == "gate_time":
        cfg = cfg.with_gate_time(gate_time_for_angle(cfg))
    derived["gate_time_s"] = cfg.t_g
    return cfg, derived


def _closed_form(cfg: GateConfig) -> float:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return residual_infidelity_closed_form(cfg)
    except ValueError:
        return math.nan


def evaluate_point(
    loaded: LoadedConfig,
    sweep: SweepSpec,
    index: int,
    n: int,
    seed: int,
    tolerance: float | None = None,
) -> PointResult:
    """Run one (grid value, initial n) job; failures are captured, never raised."""
    value = float(sweep.values[index])
    res = PointResult(index, value, int(n))
    t0 = time.perf_counter()
    try:
        cfg, derived = point_config(loaded, sweep, value)
        cfg = cfg.with_initial_fock(n)
        res.derived = derived
        res.residual_closed_form = _closed_form(cfg)
        resp = simulate_gate(
            cfg,
            tol=tolerance or sweep.tolerance,
            strategy=sweep.strategy,
            max_regrow=sweep.max_regrow,
        )
        averaging = replace(sweep.averaging, seed=_point_seed(seed, index, n))
        val, err = gate_infidelity(resp, analytic_gate(cfg), averaging, sweep.compensate_local)
        res.infidelity, res.stderr = val, err
        res.leakage = resp.max_leakage
        res.notes = list(resp.notes)
        res.derived["truncations"] = list(resp.truncations)
        if cfg.noise is not None and cfg.shelving is None:
            res.budget = budget(cfg).as_dict()
    except Exception as exc:  # one bad point must not sink the sweep
        res.status = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
    res.wall_time = time.perf_counter() - t0
    return res


def _point_seed(seed: int, index: int, n: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(index, n))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _job(args):
    return evaluate_point(*args)


def run_sweep(
    loaded: LoadedConfig,
    sweep: SweepSpec | None = None,
    *,
    seed: int | None = None,
    workers: int = 1,
    tolerance: float | None = None,
    progress=None,
) -> RunRecord:
    """Execute every (value, n) point and return them in grid order.

    Raises SweepError (carrying the record) only when every point failed.
    """
    sweep = sweep or loaded.sweep
    if sweep is None:
        raise SweepError("config has no [sweep] table")
    seed = sweep.averaging.seed if seed is None else int(seed)
    jobs = [
        (loaded, sweep, i, n, seed, tolerance)
        for i in range(len(sweep.values))
        for n in sweep.initial_fock
    ]
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = []
            for p in pool.map(_job, jobs):
                points.append(p)
                if progress:
                    progress(p)
    else:
        points = []
        for job in jobs:
            p = _job(job)
            points.append(p)
            if progress:
                progress(p)
    points.sort(key=lambda p: (p.index, sweep.initial_fock.index(p.initial_n)))
    record = RunRecord(
        config_hash=loaded.config_hash,
        config=loaded.raw,
        resolved=_resolved_snapshot(loaded.config),
        sweep=asdict(sweep),
        seed=seed,
        code_version=__version__,
        backend=BACKEND,
        started=started,
        points=points,
    )
    if not any(p.ok for p in points):
        raise SweepError("all sweep points failed", record)
    return record


def _resolved_snapshot(cfg: GateConfig) -> dict:
    return json.loads(json.dumps(asdict(cfg), default=repr))


def csv_text(record: RunRecord, reproducible: bool = False) -> str:
    """CSV body: one comment line (timestamp, hash, seed), header, rows.

    With ``reproducible`` the wall-time column is left empty so reruns are
    byte-identical apart from the first line.
    """
    buf = io.StringIO()
    buf.write(
        f"# aese {record.code_version} started={record.started} "
        f"config_hash={record.config_hash} seed={record.seed} backend={record.backend}\n"
    )
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in record.points:
        w.writerow(
            [
                _fmt(p.sweep_value),
                p.initial_n,
                _fmt(p.infidelity),
                _fmt(p.stderr),
                _fmt(p.residual_closed_form),
                _fmt(p.leakage),
                "" if reproducible else _fmt(p.wall_time),
                p.status,
            ]
        )
    return buf.getvalue()


def write_outputs(record: RunRecord, out_dir: str | Path, stem: str, reproducible: bool = False) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and the ``<stem>.json`` sidecar; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    csv_path.write_text(csv_text(record, reproducible))
    d = record.as_dict()
    if reproducible:
        d["started"] = None
        for p in d["points"]:
            p["wall_time"] = None
    json_path.write_text(json.dumps(d, indent=2, default=repr, allow_nan=True) + "\n")
    return csv_path, json_path


def gnuplot_stub(csv_name: str, sweep: SweepSpec, title: str = "") -> str:
    """Plain-text gnuplot recipe for infidelity vs the swept value, one line per n."""
    plots = ", ".join(
        f"'{csv_name}' using ($2=={n} ? $1 : 1/0):3 with linespoints title 'n={n}'" for n in sweep.initial_fock
    )
    return (
        "set datafile separator ','\n"
        "set datafile commentschars '#'\n"
        "set key autotitle columnhead\n"
        "set logscale y\n"
        f"set xlabel '{sweep.parameter}'\n"
        "set ylabel 'infidelity'\n"
        f"set title '{title}'\n"
        f"plot {plots}\n"
    )
