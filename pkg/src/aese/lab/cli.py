"""Command-line entry point: ``aese run|budget|preset``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .budget import budget_csv, budget_report, render_table
from .config import ConfigError, load_config
from .presets import DESCRIPTIONS, preset_names, preset_toml
from .sweep import SweepError, gnuplot_stub, run_sweep, write_outputs


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aese", description="AESE gate simulator")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("config_path", nargs="?", help="TOML config (or use --config)")
        sp.add_argument("--config", dest="config_flag", metavar="PATH")
        sp.add_argument("--out", default=".", metavar="DIR", help="output directory")
        sp.add_argument("--strict", action="store_true", help="reject unknown config keys")

    run = sub.add_parser("run", help="run the config's sweep")
    common(run)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--tolerance", type=float, default=None)
    run.add_argument("--gnuplot-stub", action="store_true", help="also write a gnuplot recipe")
    run.add_argument("--reproducible", action="store_true", help="omit wall times so reruns are byte-identical")
    run.add_argument("--quiet", action="store_true")

    bud = sub.add_parser("budget", help="closed-form error budget")
    common(bud)

    pre = sub.add_parser("preset", help="list or export presets")
    psub = pre.add_subparsers(dest="action", required=True)
    psub.add_parser("list")
    ex = psub.add_parser("export")
    ex.add_argument("name")
    ex.add_argument("--out", default=None, metavar="DIR", help="write <name>.toml here instead of stdout")
    return p


def _config_path(args) -> str:
    path = args.config_flag or args.config_path
    if not path:
        raise ConfigError("no config given (positional path or --config)")
    return path


def _stem(args, loaded) -> str:
    return loaded.config.name or Path(_config_path(args)).stem


def cmd_run(args) -> int:
    loaded = load_config(_config_path(args), strict=args.strict)
    if loaded.sweep is None:
        raise ConfigError("config has no [sweep] table", "sweep")
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")

    def progress(p):
        if not args.quiet:
            tag = "ok" if p.ok else p.status
            print(f"[{p.index:3d}] value={p.sweep_value!r} n={p.initial_n} I={p.infidelity:.3e} {tag}", file=sys.stderr)

    status = 0
    try:
        record = run_sweep(loaded, seed=args.seed, workers=args.workers, tolerance=args.tolerance, progress=progress)
    except SweepError as exc:
        if exc.record is None:
            raise
        record = exc.record
        status = 1
    stem = _stem(args, loaded)
    csv_path, json_path = write_outputs(record, args.out, stem, reproducible=args.reproducible)
    if args.gnuplot_stub:
        (Path(args.out) / f"{stem}.gp").write_text(gnuplot_stub(csv_path.name, loaded.sweep, stem))
    n_bad = sum(not p.ok for p in record.points)
    print(f"wrote {csv_path} and {json_path}; {len(record.points) - n_bad}/{len(record.points)} points ok")
    return 0 if (status == 0 and n_bad == 0) else 1


def cmd_budget(args) -> int:
    loaded = load_config(_config_path(args), strict=args.strict)
    report = budget_report(loaded.config)
    print(render_table(report, title=f"error budget: {loaded.config.name or _config_path(args)}"), end="")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{_stem(args, loaded)}_budget.csv"
    path.write_text(budget_csv(report))
    print(f"wrote {path}")
    return 0


def cmd_preset(args) -> int:
    if args.action == "list":
        for name in preset_names():
            print(f"{name:<12}  {DESCRIPTIONS.get(name, '')}")
        return 0
    text = preset_toml(args.name)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.name}.toml").write_text(text)
        print(f"wrote {out / (args.name + '.toml')}")
    else:
        sys.stdout.write(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    handler = {"run": cmd_run, "budget": cmd_budget, "preset": cmd_preset}[args.verb]
    try:
        return handler(args)
    except (ConfigError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
