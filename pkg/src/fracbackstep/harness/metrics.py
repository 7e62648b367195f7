"""Performance metrics and CSV round-tripping of simulation records."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .simulation import SimulationRecord, Truth

__all__ = [
    "MetricsReport",
    "compute_metrics",
    "csv_columns",
    "export_csv",
    "load_csv",
    "write_metrics",
    "read_truth",
]


def _l2(s: np.ndarray) -> float:
    # plain sample-wise norm sqrt(sum s_k^2); rows of a 2-d block are summed too
    return math.sqrt(math.fsum(np.square(np.asarray(s, dtype=float)).ravel()))


@dataclass(frozen=True)
class MetricsReport:
    eps_max: float
    eps_l2: float
    theta_err_l2: float
    p_err_l2: float | None
    D_err_l2: float | None
    u_l2: float
    h: float
    horizon: float
    n_samples: int

    def as_dict(self) -> dict:
        return asdict(self)

    def describe(self) -> str:
        def fmt(v):
            return "\\" if v is None else f"{v:.6g}"

        return (
            f"eps_max={fmt(self.eps_max)} eps_l2={fmt(self.eps_l2)} theta_err_l2={fmt(self.theta_err_l2)} "
            f"p_err_l2={fmt(self.p_err_l2)} D_err_l2={fmt(self.D_err_l2)} u_l2={fmt(self.u_l2)} "
            f"[2-norm = sqrt(sum of squares) over {self.n_samples} samples, h={self.h:g}, horizon={self.horizon:g}]"
        )


def compute_metrics(rec: SimulationRecord) -> MetricsReport:
    if len(rec) == 0:
        raise ValueError("cannot compute metrics of an empty record")
    tr = rec.truth
    report = MetricsReport(
        eps_max=float(np.max(np.abs(rec.eps))),
        eps_l2=_l2(rec.eps),
        theta_err_l2=_l2(tr.theta[None, :] - rec.theta_hat),
        p_err_l2=None if rec.p_hat is None else _l2(tr.p - rec.p_hat),
        D_err_l2=None if rec.D_hat is None else _l2(tr.D_bar - rec.D_hat),
        u_l2=_l2(rec.u),
        h=float(rec.h),
        horizon=float(rec.t[-1] - rec.t[0]),
        n_samples=len(rec),
    )
    values = [v for v in (report.eps_max, report.eps_l2, report.theta_err_l2, report.p_err_l2, report.D_err_l2, report.u_l2) if v is not None]
    if not all(math.isfinite(v) for v in values):
        raise FloatingPointError(f"non-finite metric in {report}")
    return report


def csv_columns(n: int, q: int) -> list[str]:
    cols = ["t"] + [f"x_{i}" for i in range(1, n + 1)]
    cols += ["y", "r", "eps", "v", "w", "u", "delta_w"]
    cols += [f"lambda_{i}" for i in range(1, n + 1)]
    cols += [f"theta_hat_{i}" for i in range(1, q + 1)]
    return cols + ["D_hat", "p_hat"]


def _cell(v) -> str:
    # repr of a Python float round-trips exactly
    return repr(float(v))


def export_csv(rec: SimulationRecord, path: str | Path) -> Path:
    """Write one row per grid point; absent signals are left blank."""
    path = Path(path)
    n, q = rec.x.shape[1], rec.theta_hat.shape[1]
    blank_lam = [""] * n
    try:
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(csv_columns(n, q))
            for k in range(len(rec)):
                row = [_cell(rec.t[k])] + [_cell(v) for v in rec.x[k]]
                row += [_cell(rec.x[k, 0]), _cell(rec.r[k]), _cell(rec.eps[k]), _cell(rec.v[k])]
                row += [_cell(rec.w[k]), _cell(rec.u[k]), _cell(rec.delta_w[k])]
                row += blank_lam if rec.lam is None else [_cell(v) for v in rec.lam[k]]
                row += [_cell(v) for v in rec.theta_hat[k]]
                row.append("" if rec.D_hat is None else _cell(rec.D_hat[k]))
                row.append("" if rec.p_hat is None else _cell(rec.p_hat[k]))
                wr.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def load_csv(path: str | Path, truth: Truth, h: float | None = None) -> SimulationRecord:
    """Rebuild a record from :func:`export_csv` output.

    A column that is blank in every row comes back as ``None``.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = sum(1 for c in header if c.startswith("x_"))
    q = sum(1 for c in header if c.startswith("theta_hat_"))
    if header != csv_columns(n, q):
        raise ValueError(f"{path}: unexpected header {header}")
    idx = {c: i for i, c in enumerate(header)}

    def col(name):
        cells = [row[idx[name]] for row in body]
        if body and all(c == "" for c in cells):
            return None
        return np.array([float(c) for c in cells])

    def block(prefix, count):
        cols = [col(f"{prefix}_{i}") for i in range(1, count + 1)]
        if any(c is None for c in cols):
            return None
        return np.column_stack(cols) if body else np.zeros((0, count))

    t = col("t") if body else np.zeros(0)
    if h is None:
        h = float(t[1] - t[0]) if t.size > 1 else 0.0
    return SimulationRecord(
        t=t,
        x=block("x", n),
        r=col("r"),
        eps=col("eps"),
        v=col("v"),
        w=col("w"),
        u=col("u"),
        delta_w=col("delta_w"),
        lam=block("lambda", n),
        theta_hat=block("theta_hat", q),
        D_hat=col("D_hat"),
        p_hat=col("p_hat"),
        truth=truth,
        h=h,
    )


def write_metrics(report: MetricsReport, truth: Truth, path: str | Path, **extra) -> Path:
    """JSON with the metrics plus the truth values needed to recompute them from the CSV."""
    path = Path(path)
    doc = {
        "metrics": report.as_dict(),
        "truth": {"theta": truth.theta.tolist(), "p": truth.p, "D_bar": truth.D_bar},
        **extra,
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def read_truth(path: str | Path) -> tuple[Truth, dict]:
    doc = json.loads(Path(path).read_text())
    tr = doc["truth"]
    return Truth(np.asarray(tr["theta"], dtype=float), tr["p"], tr["D_bar"]), doc["metrics"]
