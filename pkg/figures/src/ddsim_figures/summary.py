"""Threshold-crossing extraction, independently recomputed from the rows and
cross-checked against any crossing values the producer emitted."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .csvio import PointSeries, ResultTable


class ConsistencyError(RuntimeError):
    """Producer-emitted crossing disagrees with the recomputed one."""


def first_crossing(times, values, threshold: float, direction: str) -> float:
    """First threshold crossing, linearly interpolated between samples; the
    same rule the simulator uses: 0 when starting beyond the threshold, inf
    when never crossing."""
    if direction not in ("falling", "rising"):
        raise ValueError(direction)
    sign = 1.0 if direction == "falling" else -1.0
    rel = [sign * (v - threshold) for v in values]
    if not rel:
        raise ValueError("empty trajectory")
    if rel[0] <= 0.0:
        return 0.0
    for i in range(1, len(rel)):
        if rel[i] <= 0.0:
            t0, t1 = times[i - 1], times[i]
            v0, v1 = values[i - 1], values[i]
            return t0 + (threshold - v0) / (v1 - v0) * (t1 - t0)
    return math.inf


@dataclass
class SummaryRow:
    point_id: str
    protocol: str
    omega: float
    threshold: float
    crossing: float  # inf when not reached
    reported: float | None


def extract_summary(table: ResultTable, verify: bool = True) -> list[SummaryRow]:
    """Recompute crossings per point; when the CSV carries producer values,
    they must agree within one time step (hard failure otherwise)."""
    threshold = float(table.meta.get("threshold", "0.9"))
    direction = table.meta.get("direction", "falling")
    label = f"T{threshold:g}"
    out = []
    for p in table.points.values():
        recomputed = first_crossing(p.times, p.values, threshold, direction)
        reported = p.crossings.get(label)
        if verify and reported is not None:
            step = max((abs(b - a) for a, b in zip(p.times, p.times[1:])), default=0.0)
            both_inf = math.isinf(recomputed) and math.isinf(reported)
            if not both_inf and abs(recomputed - reported) > step + 1e-12:
                raise ConsistencyError(
                    f"point {p.point_id}: recomputed {label} = {recomputed} vs "
                    f"reported {reported} (step {step})")
        out.append(SummaryRow(point_id=p.point_id, protocol=p.protocol,
                              omega=p.omega, threshold=threshold,
                              crossing=recomputed, reported=reported))
    return out
