"""Figure rendering. The plotter restyles CSV rows and recomputes threshold
crossings as a consistency check; no physics is recomputed here."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .csvio import ResultTable, read_result_csv
from .summary import extract_summary

FIGURE_IDS = ("fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b",
              "fig4", "s1", "s2", "s3", "s4", "custom")

# resonance panels plot a crossing time against the bias frequency
RESONANCE_IDS = {"fig2b", "fig2d", "fig3b"}

METRIC_LABELS = {"spin_avg": "normalized spin average j/J",
                 "xi2": r"squeezing parameter $\xi^2$",
                 "fidelity": "worst-case fidelity"}

_STYLE_CYCLE = ["#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#e67e22",
                "#16a085", "#7f8c8d", "#2c3e50", "#d35400", "#9b59b6"]


@dataclass
class FigureSpec:
    figure_id: str
    csv_paths: list[str]
    out_path: str
    thresholds: tuple[float, ...] = ()
    log_time: bool | None = None  # default decided per figure
    title: str = ""

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure_id!r}; "
                             f"valid: {', '.join(FIGURE_IDS)}")
        if not self.csv_paths:
            raise ValueError("a figure needs at least one input CSV")


def _load(spec: FigureSpec) -> list[ResultTable]:
    return [read_result_csv(p) for p in spec.csv_paths]


def _guide(ax, level, horizontal=True):
    if horizontal:
        ax.axhline(level, color="#1e8449", linestyle="--", linewidth=1.0)
    else:
        ax.axvline(level, color="#1e8449", linestyle="--", linewidth=1.0)


def _render_trajectories(spec: FigureSpec, tables: list[ResultTable]):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    metric = tables[0].metric
    idx = 0
    drew = False
    for table in tables:
        for p in table.points.values():
            if not p.times:
                continue
            pos = [(t, v) for t, v in zip(p.times, p.values) if t > 0]
            if spec.log_time and not pos:
                continue
            ts, vs = zip(*pos) if spec.log_time else (p.times, p.values)
            ax.plot(ts, vs, label=p.point_id,
                    color=_STYLE_CYCLE[idx % len(_STYLE_CYCLE)],
                    linewidth=1.4)
            idx += 1
            drew = True
    if not drew:
        raise ValueError(f"{spec.figure_id}: no trajectory rows to draw")
    for th in spec.thresholds:
        _guide(ax, th)
    if spec.log_time:
        ax.set_xscale("log")
    ax.set_xlabel("time")
    ax.set_ylabel(METRIC_LABELS.get(metric, metric))
    ax.set_title(spec.title or spec.figure_id)
    ax.legend(fontsize=7, ncol=2)
    return fig


def _render_resonance(spec: FigureSpec, tables: list[ResultTable]):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    drew = False
    for table in tables:
        rows = [r for r in extract_summary(table) if r.protocol.startswith("uni")]
        rows.sort(key=lambda r: r.omega)
        if not rows:
            continue
        horizon = float(table.meta.get("horizon", "nan"))
        ys = [r.crossing if math.isfinite(r.crossing) else horizon for r in rows]
        xs = [r.omega for r in rows]
        ax.plot(xs, ys, marker="o", color=_STYLE_CYCLE[0], linewidth=1.4)
        peak = max(range(len(ys)), key=lambda i: ys[i])
        ax.annotate("peak", (xs[peak], ys[peak]),
                    textcoords="offset points", xytext=(6, -10))
        drew = True
    if not drew:
        raise ValueError(f"{spec.figure_id}: no scan rows to draw")
    ax.set_xlabel("bias Larmor frequency")
    th = spec.thresholds[0] if spec.thresholds else None
    ax.set_ylabel(f"T{th:g}" if th is not None else "crossing time")
    ax.set_yscale("log")
    ax.set_title(spec.title or spec.figure_id)
    return fig


def render(spec: FigureSpec) -> str:
    """Render the figure; returns the output path. Styles are fixed and no
    timestamps are embedded, so output bytes depend only on the input CSV."""
    tables = _load(spec)
    if not spec.thresholds:
        spec.thresholds = (float(tables[0].meta.get("threshold", "0.9")),)
    if spec.log_time is None:
        spec.log_time = spec.figure_id not in ("s1",)
    if spec.figure_id in RESONANCE_IDS:
        fig = _render_resonance(spec, tables)
    else:
        fig = _render_trajectories(spec, tables)
    fig.savefig(spec.out_path, dpi=150, metadata={"Software": "ddsim-plot"})
    plt.close(fig)
    return spec.out_path
