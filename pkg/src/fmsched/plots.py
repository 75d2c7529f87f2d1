"""SVG charts: strategy bar charts and a Gantt view of a reservation CSV."""

from __future__ import annotations

import csv
from collections import OrderedDict


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_assignment_rates(rows, path: str) -> int:
    """One bar per strategy label; returns the number of bars drawn."""
    plt = _plt()
    labels = [f"{r.priority}-{r.selection}" if r.priority else r.selection for r in rows]
    rates = [r.assignment_rate for r in rows]
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(labels)), 3.2))
    ax.bar(labels, rates, color="#4878a8")
    ax.set_ylabel("assignment rate")
    ax.set_ylim(0, 1)
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return len(labels)


def plot_times(rows, path: str) -> int:
    """Grouped waiting/execution bars per strategy; returns group count."""
    plt = _plt()
    labels = [f"{r.priority}-{r.selection}" if r.priority else r.selection for r in rows]
    waits = [r.avg_waiting if r.avg_waiting is not None else 0.0 for r in rows]
    execs = [r.avg_execution if r.avg_execution is not None else 0.0 for r in rows]
    x = range(len(labels))
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(labels)), 3.2))
    ax.bar([i - 0.2 for i in x], waits, width=0.4, label="avg waiting", color="#c46f46")
    ax.bar([i + 0.2 for i in x], execs, width=0.4, label="avg execution", color="#4878a8")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=45)
    ax.set_ylabel("ticks")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return len(labels)


def plot_gantt(reservations_csv: str, path: str) -> tuple[int, int]:
    """Draw one horizontal bar per reservation, one lane per resource.

    Returns (bars, lanes) so callers can sanity-check the drawing.
    """
    plt = _plt()
    with open(reservations_csv) as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    lanes: "OrderedDict[str, int]" = OrderedDict()
    for r in sorted(rows, key=lambda r: r["resource"]):
        if r["resource"] not in lanes:
            lanes[r["resource"]] = len(lanes)
    workflows = sorted({r["workflow"] for r in rows})
    cmap = plt.cm.tab20
    color = {w: cmap(i % 20) for i, w in enumerate(workflows)}
    fig, ax = plt.subplots(figsize=(10, max(2.5, 0.3 * len(lanes))))
    bars = 0
    for r in rows:
        start, end = int(r["start"]), int(r["end"])
        ax.barh(
            lanes[r["resource"]],
            end - start,
            left=start,
            height=0.7,
            color=color[r["workflow"]],
            edgecolor="black",
            linewidth=0.3,
        )
        bars += 1
    ax.set_yticks(list(lanes.values()))
    ax.set_yticklabels(list(lanes.keys()), fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("ticks")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return bars, len(lanes)
