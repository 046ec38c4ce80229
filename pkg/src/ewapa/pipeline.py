"""Turns ordered trace-event streams into per-probe interval aggregates.

Pairing policy: per (tid, probe_id), an entry pushes onto a LIFO stack and an
exit pops the most recent entry. That is the only policy consistent with
function entry/exit semantics and it handles recursion for free. Orphan exits
and leftover entries are dropped but always counted, so conservation can be
checked: ``matched*2 + orphans + unmatched + clock_violations*2 == events``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MissingInit, MissingLoad, NegativeInterval, ZeroTotal
from .model import (
    IO_CLASSES,
    EventClass,
    EventKind,
    IntervalMetric,
    ProbeSpace,
    RuntimeProfile,
    TraceEvent,
)


def filter_process(stream: list[TraceEvent], selector: int | str) -> list[TraceEvent]:
    """Keep events belonging to one process.

    An int selector matches pid exactly; a string selector matches comm over
    its 15-byte prefix (the kernel truncates comm to 15 chars + NUL, so a
    longer observed name still matches its truncated filter and vice versa).
    """
    if isinstance(selector, int):
        return [ev for ev in stream if ev.pid == selector]
    if not selector:
        raise ValueError("selector must be non-empty")
    prefix = selector[:15]
    return [ev for ev in stream if ev.comm[:15] == prefix]


@dataclass
class PairingDiagnostics:
    """Bookkeeping for events that did not form a clean interval."""

    events_consumed: int = 0
    matched_pairs: int = 0
    orphan_exits: int = 0
    unmatched_entries: int = 0
    clock_violations: int = 0
    lost_events: int = 0

    def conserved(self) -> bool:
        return (
            self.matched_pairs * 2
            + self.orphan_exits
            + self.unmatched_entries
            + self.clock_violations * 2
            == self.events_consumed
        )


def pair_intervals(stream: list[TraceEvent]) -> tuple[dict[str, IntervalMetric], PairingDiagnostics]:
    """Match entry/exit events into per-probe IntervalMetrics.

    Events are stably sorted by (tid, ts_ns) first: kernel per-CPU buffers may
    deliver cross-CPU events out of order, but within one tid timestamps are
    monotonic. A matched pair whose exit precedes its entry (impossible after
    sorting, kept as a guard) is dropped and counted as a clock violation.
    """
    ordered = sorted(stream, key=lambda ev: (ev.tid, ev.ts_ns))
    metrics: dict[str, IntervalMetric] = {}
    stacks: dict[tuple[int, str], list[TraceEvent]] = {}
    diag = PairingDiagnostics(events_consumed=len(ordered))

    for ev in ordered:
        key = (ev.tid, ev.probe_id)
        if ev.kind is EventKind.ENTRY:
            stacks.setdefault(key, []).append(ev)
            continue
        stack = stacks.get(key)
        if not stack:
            diag.orphan_exits += 1
            continue
        entry = stack.pop()
        if ev.ts_ns < entry.ts_ns:
            diag.clock_violations += 1
            continue
        metric = metrics.get(ev.probe_id)
        if metric is None:
            metric = IntervalMetric(probe_id=ev.probe_id, event_class=entry.event_class, space=entry.space)
        metrics[ev.probe_id] = metric.observe(ev.ts_ns - entry.ts_ns)
        diag.matched_pairs += 1

    diag.unmatched_entries = sum(len(stack) for stack in stacks.values())
    return metrics, diag


def compute_startup(stream: list[TraceEvent], profile: RuntimeProfile) -> int:
    """Interval from the first init-symbol entry to the first load-symbol entry.

    Both events must come from the same pid; some runtimes re-enter init-like
    symbols, so first occurrences (earliest timestamps) are authoritative.
    """
    ordered = sorted(stream, key=lambda ev: ev.ts_ns)
    init_ev = _first_entry(ordered, profile.init_symbol)
    if init_ev is None:
        raise MissingInit(f"no entry event matching init symbol {profile.init_symbol!r}")
    load_ev = _first_entry(ordered, profile.load_symbol, pid=init_ev.pid)
    if load_ev is None:
        raise MissingLoad(f"no entry event matching load symbol {profile.load_symbol!r}")
    if load_ev.ts_ns < init_ev.ts_ns:
        raise NegativeInterval(
            f"load symbol entered at {load_ev.ts_ns} before init at {init_ev.ts_ns}"
        )
    return load_ev.ts_ns - init_ev.ts_ns


def _first_entry(ordered: list[TraceEvent], pattern: str, pid: int | None = None) -> TraceEvent | None:
    # Exact probe names win over substring hits; otherwise a short load
    # symbol like "main" would match an init probe like "__libc_start_main".
    fallback = None
    for ev in ordered:
        if ev.kind is not EventKind.ENTRY:
            continue
        if pid is not None and ev.pid != pid:
            continue
        if ev.probe_id == pattern:
            return ev
        if fallback is None and pattern in ev.probe_id:
            fallback = ev
    return fallback


@dataclass(frozen=True)
class ClassSummary:
    """User-side (WASI) and kernel-side (syscall) aggregates for one class."""

    wasi_total_ns: int = 0
    wasi_count: int = 0
    syscall_total_ns: int = 0
    syscall_count: int = 0

    @property
    def wasi_avg_ns(self) -> float:
        return self.wasi_total_ns / self.wasi_count if self.wasi_count else 0.0

    @property
    def syscall_avg_ns(self) -> float:
        return self.syscall_total_ns / self.syscall_count if self.syscall_count else 0.0


@dataclass(frozen=True)
class SessionSummary:
    total_ns: int
    per_class: dict[EventClass, ClassSummary] = field(default_factory=dict)


def summarize(metrics: dict[str, IntervalMetric], total_ns: int) -> SessionSummary:
    """Collapse per-probe metrics into per-class WASI/syscall totals.

    Probes in user space feed the WASI side, kernel space the syscall side.
    All five I/O classes are always present (zeros when unobserved); INIT and
    LOAD appear only if probed.
    """
    if total_ns <= 0:
        raise ZeroTotal("total_ns must be positive")
    acc: dict[EventClass, dict[str, int]] = {
        cls: {"wt": 0, "wc": 0, "st": 0, "sc": 0} for cls in IO_CLASSES
    }
    for metric in metrics.values():
        cell = acc.setdefault(metric.event_class, {"wt": 0, "wc": 0, "st": 0, "sc": 0})
        if metric.space is ProbeSpace.USER:
            cell["wt"] += metric.total_ns
            cell["wc"] += metric.count
        else:
            cell["st"] += metric.total_ns
            cell["sc"] += metric.count
    per_class = {
        cls: ClassSummary(
            wasi_total_ns=cell["wt"],
            wasi_count=cell["wc"],
            syscall_total_ns=cell["st"],
            syscall_count=cell["sc"],
        )
        for cls, cell in acc.items()
    }
    return SessionSummary(total_ns=total_ns, per_class=per_class)
