"""Three-case comparison tables for the two benchmark examples."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

from .config import ScenarioConfig, example_case
from .metrics import MetricsReport
from .simulation import ScenarioDivergence, SimulationRecord, run_scenario

__all__ = ["ABSENT", "TableRow", "ComparisonTable", "table_columns", "run_table"]

ABSENT = "\\"


def table_columns(example: int) -> list[str]:
    cols = ["eps_max", "eps_l2", "theta_err_l2"]
    if example == 2:
        cols.append("p_err_l2")
    return cols + ["D_err_l2", "u_l2"]


@dataclass
class TableRow:
    case: str
    variant: str
    metrics: MetricsReport | None
    record: SimulationRecord | None = None
    error: str | None = None

    def cells(self, columns) -> list[str]:
        if self.metrics is None:
            return [f"diverged: {self.error}"] + [""] * (len(columns) - 1)
        out = []
        for c in columns:
            v = getattr(self.metrics, c)
            out.append(ABSENT if v is None else f"{v:.5g}")
        return out


@dataclass
class ComparisonTable:
    example: int
    rows: list[TableRow]

    @property
    def columns(self) -> list[str]:
        return table_columns(self.example)

    @property
    def ok(self) -> bool:
        return all(r.metrics is not None for r in self.rows)

    def render(self) -> str:
        head = ["case", "variant"] + self.columns
        body = [[r.case, r.variant] + r.cells(self.columns) for r in self.rows]
        widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
        lines = ["  ".join(cell.rjust(w) for cell, w in zip(row, widths)) for row in [head] + body]
        ref = next((r.metrics for r in self.rows if r.metrics is not None), None)
        if ref is not None:
            lines.append(f"2-norms: sqrt(sum of squares) over samples; h={ref.h:g}, horizon={ref.horizon:g}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["case", "variant"] + self.columns + ["h", "horizon", "status"])
        for r in self.rows:
            if r.metrics is None:
                wr.writerow([r.case, r.variant] + [""] * len(self.columns) + ["", "", f"diverged: {r.error}"])
                continue
            vals = [getattr(r.metrics, c) for c in self.columns]
            wr.writerow(
                [r.case, r.variant]
                + [ABSENT if v is None else repr(v) for v in vals]
                + [repr(r.metrics.h), repr(r.metrics.horizon), "ok"]
            )
        return buf.getvalue()


def _run_row(case: int, cfg: ScenarioConfig) -> TableRow:
    name = f"case {case}"
    try:
        rec, met = run_scenario(cfg)
    except ScenarioDivergence as exc:
        return TableRow(name, cfg.controller.variant, None, exc.last_good, str(exc))
    return TableRow(name, cfg.controller.variant, met, rec)


def run_table(example: int, horizon: float | None = None, h: float | None = None) -> ComparisonTable:
    """Run the theorem, corollary and baseline cases of ``example`` (1 or 2)."""
    if example not in (1, 2):
        raise ValueError(f"example must be 1 or 2, got {example}")
    rows = []
    for case in (1, 2, 3):
        cfg = example_case(example, case)
        if horizon is not None or h is not None:
            grid = replace(cfg.grid, **{k: v for k, v in (("horizon", horizon), ("h", h)) if v is not None})
            cfg = replace(cfg, grid=grid)
        rows.append(_run_row(case, cfg))
    return ComparisonTable(example, rows)
