"""Reader for the ddsim result CSV schema (version 1).

Layout: `# key=value` provenance comments, a fixed header row, then one row
per (parameter point, time, metric). Threshold-crossing summaries appear as
metric names like "T0.9" with the crossing time in the value column (inf
when the metric never crossed within the horizon).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

EXPECTED_COLUMNS = ["experiment", "point_id", "protocol", "omega", "tau",
                    "epsilon", "tau_c", "t", "metric", "value", "r", "seed"]


class SchemaError(ValueError):
    pass


@dataclass
class PointSeries:
    point_id: str
    protocol: str
    omega: float
    tau: float
    epsilon: float
    tau_c: float
    times: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    crossings: dict[str, float] = field(default_factory=dict)  # "T0.9" -> time


@dataclass
class ResultTable:
    meta: dict[str, str]
    metric: str
    points: dict[str, PointSeries]

    @property
    def point_ids(self) -> list[str]:
        return list(self.points)


def read_result_csv(path: str) -> ResultTable:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    meta: dict[str, str] = {}
    body_lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            stripped = line[1:].strip()
            if "=" in stripped:
                key, _, val = stripped.partition("=")
                meta[key.strip()] = val.strip()
            continue
        if line.strip():
            body_lines.append(line)
    if not body_lines:
        raise SchemaError(f"{path}: no data rows")
    reader = csv.reader(io.StringIO("\n".join(body_lines)))
    header = next(reader)
    if header != EXPECTED_COLUMNS:
        missing = set(EXPECTED_COLUMNS) - set(header)
        raise SchemaError(f"{path}: unexpected columns; missing {sorted(missing)}")

    metric_name = meta.get("metric", "")
    points: dict[str, PointSeries] = {}
    n_rows = 0
    for row in reader:
        if len(row) != len(EXPECTED_COLUMNS):
            raise SchemaError(f"{path}: malformed row {row}")
        rec = dict(zip(EXPECTED_COLUMNS, row))
        pid = rec["point_id"]
        if pid not in points:
            points[pid] = PointSeries(
                point_id=pid, protocol=rec["protocol"], omega=float(rec["omega"]),
                tau=float(rec["tau"]), epsilon=float(rec["epsilon"]),
                tau_c=float(rec["tau_c"]))
        p = points[pid]
        if rec["metric"].startswith("T") and rec["metric"] != metric_name:
            p.crossings[rec["metric"]] = float(rec["value"])
        else:
            p.times.append(float(rec["t"]))
            p.values.append(float(rec["value"]))
        n_rows += 1
    if n_rows == 0:
        raise SchemaError(f"{path}: empty selection")
    if not metric_name:
        raise SchemaError(f"{path}: header lacks the metric name")
    return ResultTable(meta=meta, metric=metric_name, points=points)
