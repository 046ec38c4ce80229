"""Shared test helpers: event factories and a well-nested stream generator.

The generator records every interval's duration at construction time, so the
expected per-probe aggregates come from bookkeeping that is independent of
the pairing implementation under test.
"""

from __future__ import annotations

import random
from collections import defaultdict
from pathlib import Path

from ewapa.model import IO_CLASSES, EventClass, EventKind, ProbeSpace, TraceEvent

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO_ROOT / "fixtures"
RUNTIMES = ("native", "wasm3", "wasmtime", "wasmtime_preview2", "wasmer", "wamr")


def make_event(
    ts,
    probe,
    kind,
    cls=EventClass.READ,
    space=ProbeSpace.USER,
    pid=7,
    tid=None,
    comm="case",
    size=None,
):
    return TraceEvent(
        ts_ns=ts,
        pid=pid,
        tid=tid if tid is not None else pid,
        comm=comm,
        probe_id=probe,
        event_class=cls,
        kind=kind,
        space=space,
        size_bytes=size,
    )


def entry(ts, probe, **kw):
    return make_event(ts, probe, EventKind.ENTRY, **kw)


def exit_(ts, probe, **kw):
    return make_event(ts, probe, EventKind.EXIT, **kw)


def build_nested_stream(
    rng: random.Random,
    *,
    n_tids: int = 4,
    n_probes: int = 4,
    max_events: int = 2000,
    max_depth: int = 4,
    max_children: int = 3,
):
    """Random well-nested entry/exit stream across several threads.

    Returns (events, expected, probe_defs) where expected maps probe name to
    the list of interval durations created for it, in creation order.
    """
    probes = [f"probe_{i}" for i in range(n_probes)]
    defs = {
        p: (IO_CLASSES[i % len(IO_CLASSES)], ProbeSpace.USER if i % 2 == 0 else ProbeSpace.KERNEL)
        for i, p in enumerate(probes)
    }
    events: list[TraceEvent] = []
    expected: dict[str, list[int]] = defaultdict(list)
    budget = [max_events]

    def interval(tid: int, t: int, depth: int) -> int:
        probe = probes[rng.randrange(len(probes))]
        cls, space = defs[probe]
        budget[0] -= 2
        entry_ts = t
        events.append(make_event(entry_ts, probe, EventKind.ENTRY, cls, space, pid=100 + tid, tid=100 + tid))
        t += 1
        if depth < max_depth:
            for _ in range(rng.randrange(max_children + 1)):
                if budget[0] < 2:
                    break
                t = interval(tid, t, depth + 1)
        t += rng.randrange(0, 40)
        events.append(make_event(t, probe, EventKind.EXIT, cls, space, pid=100 + tid, tid=100 + tid))
        expected[probe].append(t - entry_ts)
        return t + 1 + rng.randrange(0, 20)

    clocks = {tid: 1 + rng.randrange(0, 1000) for tid in range(n_tids)}
    while budget[0] >= 2:
        tid = rng.randrange(n_tids)
        clocks[tid] = interval(tid, clocks[tid], 1)
    rng.shuffle(events)
    return events, expected, defs
