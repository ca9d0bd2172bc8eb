"""
Aggregation of per-sub-sequence errors into per-aerial / per-horizon /
per-joint tables, plus CSV and plain-text rendering.
"""

import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from rich import box
from rich.console import Console
from rich.table import Table

from ..utils.common import ContractError, ParseError
from .errors import METRICS, ROLES, horizon_frames

logger = logging.getLogger(__name__)

AVG = "AVG"
REPORT_COLUMNS = ["variant", "metric", "role", "aerial", "horizon_ms", "joint", "value_mm"]


@dataclass(frozen=True)
class EvaluationRecord:
    """Errors of one test sub-sequence: metric -> role -> (T, J) array."""

    aerial: str
    errors: Mapping[str, Mapping[str, np.ndarray]]


def aerial_sort_key(label: str) -> Tuple[int, str]:
    digits = "".join(ch for ch in label if ch.isdigit())
    return (int(digits) if digits else 10 ** 9, label)


@dataclass
class MetricsReport:
    """
    Sums of per-sub-sequence means plus sub-sequence counts, so reports from
    disjoint test sets merge by addition.
    """

    horizons_ms: Tuple[int, ...]
    fps: float
    joint_names: Tuple[str, ...] = ()
    variant: str = ""
    sums: Dict[Tuple[str, str, str, int], float] = field(default_factory=lambda: defaultdict(float))
    joint_sums: Dict[Tuple[str, str, str], np.ndarray] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=lambda: defaultdict(int))

    @property
    def horizon_frames(self) -> Dict[int, int]:
        return {ms: horizon_frames(ms, self.fps) for ms in self.horizons_ms}

    @property
    def aerials(self) -> List[str]:
        return sorted(self.counts, key=aerial_sort_key)

    def add(self, record: EvaluationRecord) -> None:
        frames = self.horizon_frames
        for metric in METRICS:
            for role in ROLES:
                errors = np.asarray(record.errors[metric][role])
                longest = max(frames.values())
                if errors.shape[0] < longest:
                    raise ContractError(
                        f"{errors.shape[0]} predicted frames cannot cover a {longest}-frame horizon")
                for ms, count in frames.items():
                    self.sums[(metric, role, record.aerial, ms)] += float(errors[:count].mean())
                key = (metric, role, record.aerial)
                per_joint = errors[:longest].mean(axis=0)
                self.joint_sums[key] = self.joint_sums[key] + per_joint if key in self.joint_sums else per_joint
        self.counts[record.aerial] += 1

    def merge(self, other: "MetricsReport") -> "MetricsReport":
        merged = MetricsReport(self.horizons_ms, self.fps, self.joint_names, self.variant)
        for report in (self, other):
            for key, value in report.sums.items():
                merged.sums[key] += value
            for key, value in report.joint_sums.items():
                merged.joint_sums[key] = merged.joint_sums[key] + value if key in merged.joint_sums else value.copy()
            for key, value in report.counts.items():
                merged.counts[key] += value
        return merged

    def value(self, metric: str, role: str, aerial: str, horizon_ms: int) -> float:
        if aerial == AVG:
            total = sum(self.counts.values())
            if total == 0:
                raise ContractError("report is empty")
            return sum(self.sums[(metric, role, a, horizon_ms)] for a in self.counts) / total
        count = self.counts.get(aerial, 0)
        if count == 0:
            raise ContractError(f"no sub-sequences for aerial {aerial!r}")
        return self.sums[(metric, role, aerial, horizon_ms)] / count

    def joint_values(self, metric: str, role: str, aerial: str = AVG) -> np.ndarray:
        """Per-joint mean error over time and sub-sequences at the longest horizon."""
        if aerial == AVG:
            total = sum(self.counts.values())
            return sum(self.joint_sums[(metric, role, a)] for a in self.counts) / total
        return self.joint_sums[(metric, role, aerial)] / self.counts[aerial]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for metric in METRICS:
            for role in ROLES:
                for aerial in self.aerials + [AVG]:
                    for ms in self.horizons_ms:
                        rows.append((self.variant, metric, role, aerial, ms, "",
                                     self.value(metric, role, aerial, ms)))
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)

    def joints_frame(self) -> pd.DataFrame:
        rows = []
        longest = max(self.horizons_ms)
        names = self.joint_names
        for metric in METRICS:
            for role in ROLES:
                for aerial in self.aerials + [AVG]:
                    values = self.joint_values(metric, role, aerial)
                    for j, value in enumerate(values):
                        joint = names[j] if j < len(names) else str(j)
                        rows.append((self.variant, metric, role, aerial, longest, joint, float(value)))
        return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def breakdown(records: Iterable[EvaluationRecord], horizons_ms: Sequence[int], fps: float,
              joint_names: Sequence[str] = (), variant: str = "") -> MetricsReport:
    report = MetricsReport(tuple(horizons_ms), fps, tuple(joint_names), variant)
    for record in records:
        report.add(record)
    return report


def write_report_csv(frame: pd.DataFrame, handle) -> None:
    frame.to_csv(handle, index=False, lineterminator="\n")


def read_report_csv(path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, dtype={"joint": str, "aerial": str, "variant": str},
                            keep_default_na=False, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"metrics report {path}: {e}") from None
    missing = [column for column in REPORT_COLUMNS if column not in frame.columns]
    if missing:
        raise ParseError(f"metrics report {path} lacks columns {missing}")
    try:
        frame["value_mm"] = frame["value_mm"].astype(float)
        frame["horizon_ms"] = frame["horizon_ms"].astype(int)
    except ValueError as e:
        raise ParseError(f"metrics report {path}: {e}") from None
    return frame


def render_table(frame: pd.DataFrame, title: Optional[str] = None) -> str:
    """
    Plain-text tables, one per horizon: rows metric x role, columns the
    aerials followed by AVG.
    """
    frame = frame[frame["joint"].astype(str) == ""]
    aerials = sorted((a for a in frame["aerial"].unique() if a != AVG), key=aerial_sort_key) + [AVG]
    buffer = io.StringIO()
    console = Console(file=buffer, width=40 + 10 * len(aerials), color_system=None,
                      force_terminal=False, highlight=False)
    if title:
        console.print(title)

    for ms in sorted(frame["horizon_ms"].unique()):
        table = Table(title=f"{ms} ms", box=box.ASCII, title_justify="left")
        table.add_column("Metric")
        table.add_column("Role")
        for aerial in aerials:
            table.add_column(aerial, justify="right")
        at_horizon = frame[frame["horizon_ms"] == ms]
        for metric in METRICS:
            for role in ROLES:
                cells = at_horizon[(at_horizon["metric"] == metric) & (at_horizon["role"] == role)]
                if cells.empty:
                    continue
                by_aerial = dict(zip(cells["aerial"], cells["value_mm"]))
                table.add_row(metric, role, *(
                    f"{by_aerial[a]:.1f}" if a in by_aerial else "-" for a in aerials))
        console.print(table)
    return buffer.getvalue()
