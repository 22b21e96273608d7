"""Report rows, CSV emission, merging, and the comparison plot."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from ..data import atomic_write_text
from ..exceptions import MissingArtifactError

REPORT_COLUMNS = ("scenario", "method", "inv_r2_db", "mse_db", "sigma_db",
                  "runtime_s", "checkpoint")


@dataclass
class ReportRow:
    scenario: str
    method: str
    inv_r2_db: float
    mse_db: float
    sigma_db: float
    runtime_s: float
    checkpoint: str = "-"

    def as_csv(self) -> list[str]:
        return [self.scenario, self.method, f"{self.inv_r2_db:g}",
                f"{self.mse_db:.6f}", f"{self.sigma_db:.6f}",
                f"{self.runtime_s:.6f}", self.checkpoint]


def write_report(rows: list[ReportRow], path) -> Path:
    """Fixed column order and formatting; rows sorted for reproducibility."""
    path = Path(path)
    ordered = sorted(rows, key=lambda r: (r.scenario, r.inv_r2_db, r.method))
    lines = [",".join(REPORT_COLUMNS)]
    lines += [",".join(r.as_csv()) for r in ordered]
    atomic_write_text(path, "\n".join(lines) + "\n")
    return path


def read_report(path) -> list[ReportRow]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"no such report: {path}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(REPORT_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path} lacks report columns: {sorted(missing)}")
        for rec in reader:
            rows.append(ReportRow(
                scenario=rec["scenario"], method=rec["method"],
                inv_r2_db=float(rec["inv_r2_db"]), mse_db=float(rec["mse_db"]),
                sigma_db=float(rec["sigma_db"]), runtime_s=float(rec["runtime_s"]),
                checkpoint=rec["checkpoint"]))
    return rows


def merge_reports(report_rows: list[list[ReportRow]]) -> list[ReportRow]:
    """Concatenate reports after checking they describe one scenario."""
    merged = [row for rows in report_rows for row in rows]
    if not merged:
        return []
    scenarios = {row.scenario for row in merged}
    if len(scenarios) > 1:
        raise ValueError(f"reports mix scenarios: {sorted(scenarios)}")
    return merged


def plot_report(rows: list[ReportRow], path) -> Path:
    """Static vector chart: MSE [dB] versus the inverse observation noise [dB]."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    fig, axis = plt.subplots(figsize=(6.0, 4.0))
    methods = sorted({r.method for r in rows})
    for method in methods:
        pts = sorted([(r.inv_r2_db, r.mse_db) for r in rows if r.method == method])
        axis.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
    axis.set_xlabel(r"$1/r^2$ [dB]")
    axis.set_ylabel("MSE [dB]")
    axis.grid(True, alpha=0.4)
    axis.legend()
    scenario = rows[0].scenario if rows else ""
    axis.set_title(scenario)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path
