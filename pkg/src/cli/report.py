"""Evaluation reports: per-instance rows, aggregates and CSV output"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..scenario import watt_to_dbm

ROW_COLUMNS = ["instance", "power_w", "power_dbm", "cv", "feasible", "time_ms"]
SUMMARY_COLUMNS = [
    "label",
    "r_test",
    "target_reached",
    "instances",
    "reported",
    "mean_power_w",
    "mean_power_dbm",
    "mean_cv",
    "feasibility_rate",
    "median_time_ms",
]
REPORT_CV = 0.05


@dataclass
class EvalRow:
    """Outcome on one instance"""

    instance: int
    power_w: float
    cv: float
    time_ms: float

    @property
    def power_dbm(self) -> float:
        return float(watt_to_dbm(self.power_w)) if self.power_w > 0 else float("-inf")

    @property
    def feasible(self) -> bool:
        return self.cv == 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            "instance": self.instance,
            "power_w": self.power_w,
            "power_dbm": self.power_dbm,
            "cv": self.cv,
            "feasible": int(self.feasible),
            "time_ms": self.time_ms,
        }


@dataclass
class EvalReport:
    """
    Per-instance rows plus the aggregates derived from them

    Mean power only counts instances whose CV is at most report_cv.
    """

    label: str
    rows: List[EvalRow] = field(default_factory=list)
    r_test: Optional[int] = None
    target_reached: bool = True
    report_cv: float = REPORT_CV

    def _column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows], dtype=np.float64)

    @property
    def reported(self) -> List[EvalRow]:
        return [row for row in self.rows if row.cv <= self.report_cv]

    @property
    def mean_power_w(self) -> float:
        powers = [row.power_w for row in self.reported]
        return float(np.mean(powers)) if powers else float("nan")

    @property
    def mean_power_dbm(self) -> float:
        power = self.mean_power_w
        return float(watt_to_dbm(power)) if power > 0 else float("nan")

    @property
    def mean_cv(self) -> float:
        return float(np.mean(self._column("cv"))) if self.rows else float("nan")

    @property
    def feasibility_rate(self) -> float:
        return float(np.mean([row.feasible for row in self.rows])) if self.rows else float("nan")

    @property
    def median_time_ms(self) -> float:
        return float(np.median(self._column("time_ms"))) if self.rows else float("nan")

    def summary_row(self) -> Dict[str, object]:
        return {
            "label": self.label,
            "r_test": "" if self.r_test is None else self.r_test,
            "target_reached": int(self.target_reached),
            "instances": len(self.rows),
            "reported": len(self.reported),
            "mean_power_w": self.mean_power_w,
            "mean_power_dbm": self.mean_power_dbm,
            "mean_cv": self.mean_cv,
            "feasibility_rate": self.feasibility_rate,
            "median_time_ms": self.median_time_ms,
        }

    def summary(self) -> str:
        parts = [f"{self.label}: {len(self.rows)} instances"]
        if self.r_test is not None:
            parts.append(f"r_test {self.r_test}" + ("" if self.target_reached else " (CV target not reached)"))
        parts.append(f"mean CV {self.mean_cv:.4g}")
        parts.append(f"feasible {100 * self.feasibility_rate:.1f}%")
        parts.append(f"mean power {self.mean_power_dbm:.2f} dBm over {len(self.reported)} instances")
        parts.append(f"median time {self.median_time_ms:.3f} ms")
        return ", ".join(parts)

    def write_csv(self, path) -> Path:
        """One row per instance"""
        return write_rows(path, ROW_COLUMNS, [row.to_dict() for row in self.rows])


def write_rows(path, columns: Sequence[str], rows: Sequence[Dict[str, object]]) -> Path:
    """UTF-8 CSV with a header row"""
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)
    return path


def write_summaries(path, reports: Sequence[EvalReport], extra: Optional[Sequence[Dict[str, object]]] = None) -> Path:
    """One aggregate row per report, prefixed by optional per-report columns"""
    extra = list(extra) if extra is not None else [{} for _ in reports]
    rows = [{**prefix, **report.summary_row()} for prefix, report in zip(extra, reports)]
    columns = list(extra[0]) + SUMMARY_COLUMNS if reports else SUMMARY_COLUMNS
    return write_rows(path, columns, rows)
