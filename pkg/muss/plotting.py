"""Stage-time chart for benchmark reports."""

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from muss.bench import BenchReport
from muss.errors import MussError

STAGE_ORDER = [
    "clustering",
    "summarize",
    "partition",
    "cluster_selection",
    "within_cluster",
    "within_partition",
    "top_k",
    "final",
]


def stage_time_chart(report: BenchReport, output_path: Path) -> list[str]:
    """
    Render mean per-stage wall time per method as stacked bars.

    Methods without stage timings get a single "total" segment.

    Returns:
        The stage names drawn, bottom to top
    """
    frame = report.frame()
    if frame.empty:
        raise MussError("Benchmark report has no rows to plot")
    ok = frame[~frame["failed"]]
    methods = list(dict.fromkeys(ok["method"]))
    stage_columns = [f"stage_{s}" for s in STAGE_ORDER if f"stage_{s}" in ok.columns]
    means = ok.groupby("method", sort=False)[stage_columns + ["wall_time_ms"]].mean()
    means = means.reindex(methods).fillna(0.0)
    staged = means[stage_columns].sum(axis=1)
    means["total"] = np.where(staged > 0, 0.0, means["wall_time_ms"])

    fig = Figure(figsize=(10, 4), dpi=100)
    ax = fig.add_subplot(111)
    positions = np.arange(len(methods))
    bottom = np.zeros(len(methods))
    drawn = []
    for column in stage_columns + ["total"]:
        heights = means[column].to_numpy(dtype=float)
        if not heights.any():
            continue
        label = column.removeprefix("stage_")
        ax.bar(positions, heights, bottom=bottom, label=label)
        bottom += heights
        drawn.append(label)

    ax.set_xticks(positions, methods)
    ax.set_ylabel("Mean wall time (ms)")
    ax.set_title("Time spent per stage")
    ax.grid(True, axis="y", alpha=0.3)
    if drawn:
        ax.legend()

    output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(output_path, bbox_inches="tight")
    return drawn
