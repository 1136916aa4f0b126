"""Figures for the command line's report path.

The analysis modules only produce numbers and CSV; this module turns those
into image files and is imported by the CLI alone.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import BenchReport, InversionStats  # noqa: E402


def throughput_figure(reports: Sequence[BenchReport], path) -> None:
    """Throughput against thread count, one line per (structure, mix)."""
    series = defaultdict(list)
    for r in reports:
        series[(r.structure, str(r.mix))].append((r.threads, r.throughput_ops_per_us))
    fig, ax = plt.subplots(figsize=(6, 4))
    for (structure, mix), points in sorted(series.items()):
        points.sort()
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.plot(xs, ys, marker="o", label=f"{structure} ({mix})")
    ax.set_xlabel("threads")
    ax.set_ylabel("method calls per microsecond")
    ax.set_ylim(bottom=0)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def inversion_figure(stats: InversionStats, path, title: str = "") -> None:
    """Bar chart of the inversion-count distribution, entropy in the title."""
    xs = sorted(stats.distribution)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(xs, [stats.distribution[x] for x in xs], width=0.8)
    ax.set_xlabel("inversions per item")
    ax.set_ylabel("probability")
    label = f"H = {stats.entropy_bits:.4f} bits"
    ax.set_title(f"{title}: {label}" if title else label)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
