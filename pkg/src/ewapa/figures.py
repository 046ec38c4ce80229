"""Matplotlib figure rendering for the HTML report and --figures output.

All renderers return raw PNG bytes and take already-aggregated values, so
they stay trivially testable. Rendering is deterministic: the Agg backend,
a fixed dpi, sorted iteration orders, and pinned PNG metadata (matplotlib
otherwise stamps its version string into the file).
"""

from __future__ import annotations

import io
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be forced first)

from .analysis import ClassShares, proportion_breakdown
from .model import IO_CLASSES, EventClass, SessionResult, WorkloadKind
from .report import write_bytes

_DPI = 100
_PNG_METADATA = {"Software": "ewapa"}

#: Which workload exercises each I/O class; proportion figures pick their
#: session cells through this mapping.
CLASS_WORKLOADS = {
    EventClass.READ: WorkloadKind.FREAD,
    EventClass.WRITE: WorkloadKind.FWRITE,
    EventClass.SEEK: WorkloadKind.FSEEK,
    EventClass.OPEN: WorkloadKind.OPENCLOSE,
    EventClass.CLOSE: WorkloadKind.OPENCLOSE,
}


def _to_png(fig) -> bytes:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=_DPI, metadata=_PNG_METADATA)
    plt.close(fig)
    return buf.getvalue()


def render_proportion_figure(shares: dict[str, ClassShares], event_class: EventClass) -> bytes:
    """Stacked WASI/other bars per runtime with the syscall share overlaid.

    The syscall bar is drawn inside the WASI segment rather than stacked on
    it: syscall time largely nests inside WASI time, so stacking would
    double-count it.
    """
    runtimes = sorted(shares)
    xs = range(len(runtimes))
    wasi = [shares[r].wasi_share for r in runtimes]
    other = [shares[r].other_share for r in runtimes]
    syscall = [shares[r].syscall_share for r in runtimes]

    fig, ax = plt.subplots(figsize=(7.5, 3.6))
    ax.bar(xs, wasi, width=0.6, label="WASI", color="#1f77b4")
    ax.bar(xs, other, width=0.6, bottom=wasi, label="other", color="#d0d0d0")
    ax.bar(xs, syscall, width=0.28, label="syscall (within WASI)", color="#ff7f0e")
    for x, r in zip(xs, runtimes):
        if shares[r].over_unity:
            ax.annotate("async", (x, wasi[x]), ha="center", va="bottom", fontsize=8)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(runtimes, rotation=20, ha="right")
    ax.set_ylabel("share of total run time")
    ax.set_title(f"{event_class.value}: time in WASI and syscalls")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return _to_png(fig)


def render_startup_figure(startups: dict[str, float]) -> bytes:
    """Startup time per runtime, log scale (the spread covers ~3 decades)."""
    runtimes = sorted(startups)
    values = [startups[r] / 1e6 for r in runtimes]
    fig, ax = plt.subplots(figsize=(7.5, 3.2))
    ax.bar(range(len(runtimes)), values, width=0.6, color="#2ca02c")
    ax.set_yscale("log")
    ax.set_xticks(range(len(runtimes)))
    ax.set_xticklabels(runtimes, rotation=20, ha="right")
    ax.set_ylabel("startup time (ms, log)")
    ax.set_title("runtime initialization to module load")
    fig.tight_layout()
    return _to_png(fig)


def render_trend_figure(kind: WorkloadKind, series: dict[str, list[tuple[int, float]]]) -> bytes:
    """Total run time against file size, one line per runtime."""
    fig, ax = plt.subplots(figsize=(7.5, 3.6))
    for runtime in sorted(series):
        points = sorted(series[runtime])
        ax.plot(
            [s for s, _ in points],
            [t / 1e9 for _, t in points],
            marker="o",
            label=runtime,
        )
    ax.set_xscale("log")
    ax.set_xlabel("file size (bytes)")
    ax.set_ylabel("total time (s)")
    ax.set_title(f"{kind.value}: growth with file size")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _to_png(fig)


def render_all_figures(results: Sequence[SessionResult]) -> dict[str, bytes]:
    """Everything the report embeds, keyed by stable names.

    Proportion figures use the largest cell per runtime for the workload
    that exercises the class; startup uses the mean across every repetition
    that captured one; trends need at least two sizes per runtime.
    """
    figures: dict[str, bytes] = {}
    if not results:
        return figures

    by_kind: dict[WorkloadKind, dict[str, SessionResult]] = {}
    for result in results:
        cells = by_kind.setdefault(result.workload.kind, {})
        prev = cells.get(result.runtime)
        if prev is None or result.workload.file_size_bytes > prev.workload.file_size_bytes:
            cells[result.runtime] = result

    for cls in IO_CLASSES:
        cells = by_kind.get(CLASS_WORKLOADS[cls], {})
        shares: dict[str, ClassShares] = {}
        for runtime, cell in cells.items():
            breakdown = proportion_breakdown(cell)
            if cls in breakdown:
                shares[runtime] = breakdown[cls]
        if shares:
            figures[f"proportion_{cls.value}"] = render_proportion_figure(shares, cls)

    startups: dict[str, float] = {}
    for runtime, values in sorted(_startups_by_runtime(results).items()):
        startups[runtime] = sum(values) / len(values)
    if len(startups) >= 2:
        figures["startup"] = render_startup_figure(startups)

    for kind in WorkloadKind:
        series: dict[str, list[tuple[int, float]]] = {}
        for result in results:
            if result.workload.kind is kind:
                series.setdefault(result.runtime, []).append(
                    (result.workload.file_size_bytes, result.mean_total_ns)
                )
        series = {r: pts for r, pts in series.items() if len({s for s, _ in pts}) >= 2}
        if series:
            figures[f"trend_{kind.value}"] = render_trend_figure(kind, series)
    return figures


def _startups_by_runtime(results: Sequence[SessionResult]) -> dict[str, list[int]]:
    startups: dict[str, list[int]] = {}
    for result in results:
        for rep in result.repetitions:
            if rep.startup_ns is not None and rep.startup_ns > 0:
                startups.setdefault(result.runtime, []).append(rep.startup_ns)
    return startups


def save_figures(figures: dict[str, bytes], directory) -> list[str]:
    """Write each figure as ``<name>.png`` under ``directory``."""
    written = []
    for name in sorted(figures):
        path = f"{directory}/{name}.png"
        write_bytes(path, figures[name])
        written.append(path)
    return written
