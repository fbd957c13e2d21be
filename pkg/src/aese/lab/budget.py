"""Rendered error budgets (text table and CSV with a provenance column)."""
from __future__ import annotations

import csv
import io

from ..metrics import InfidelityReport, budget
from ..models import GateConfig

BUDGET_COLUMNS = ("mechanism", "infidelity", "provenance", "note")


def budget_report(config: GateConfig, numeric: tuple[float, float] | None = None) -> InfidelityReport:
    """Closed-form budget, optionally carrying a numeric SU(4) total alongside."""
    report = budget(config)
    if numeric is not None:
        report.numeric_total, report.numeric_stderr = numeric
    return report


def render_table(report: InfidelityReport, title: str = "") -> str:
    rows = report.rows()
    width = max(len(r[0]) for r in rows)
    lines = [title] if title else []
    lines.append(f"{'mechanism':<{width}}  {'infidelity':>12}  {'provenance':<11}  note")
    lines.append("-" * (width + 40))
    for name, value, prov, note in rows:
        lines.append(f"{name:<{width}}  {value:>12.3e}  {prov:<11}  {note}")
    return "\n".join(lines) + "\n"


def budget_csv(report: InfidelityReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BUDGET_COLUMNS)
    for name, value, prov, note in report.rows():
        w.writerow([name, repr(float(value)), prov, note])
    return buf.getvalue()
