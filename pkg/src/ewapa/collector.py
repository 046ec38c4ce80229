"""Live tracing: attaches the probe program to a runtime binary and the
kernel, launches the target, and drains events into TraceEvent streams.

Everything here needs root and a working BCC install; attach() verifies both
up front so misconfiguration surfaces as a typed error instead of a loader
stack trace mid-run. The replay backend covers every other environment.
"""

from __future__ import annotations

import ctypes as ct
import errno
import os
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import (
    Ambiguous,
    CollectorError,
    CollectorUnavailable,
    KernelSymbolMissing,
    NotFound,
    PermissionDenied,
    ProbeLimitExceeded,
    SpawnFailure,
    SymbolResolution,
    Timeout,
    UseAfterDetach,
)
from .model import (
    EventClass,
    EventKind,
    IntervalMetric,
    ProbeSpace,
    RuntimeProfile,
    TraceEvent,
)
from .symbols import demangle, list_symbols, resolve_symbol

#: Seconds of perf-buffer polling after target exit, to drain per-CPU rings.
DRAIN_GRACE_S = 0.2

_KALLSYMS = "/proc/kallsyms"


@dataclass(frozen=True)
class ProbeSite:
    """One attachment point and how its events are labeled."""

    probe_id: str
    event_class: EventClass
    space: ProbeSpace
    symbol: str
    address: int | None = None
    entry_only: bool = False


@dataclass
class CollectorHandle:
    profile: RuntimeProfile
    sites: list[ProbeSite]
    accumulate: bool
    target_pid: int | None
    bpf: object | None = None
    attached: bool = False


@dataclass
class Capture:
    """Sealed result of one traced execution."""

    events: list[TraceEvent]
    exit_code: int
    wall_ns: int
    lost_events: int = 0
    timed_out: bool = False
    accumulated: dict[str, IntervalMetric] | None = None
    kernel_dropped: int = 0
    kernel_orphans: int = 0


class _RawEvent(ct.Structure):
    _fields_ = [
        ("ts", ct.c_uint64),
        ("pid", ct.c_uint32),
        ("tid", ct.c_uint32),
        ("comm", ct.c_char * 16),
        ("probe", ct.c_uint32),
        ("kind", ct.c_uint8),
        ("space", ct.c_uint8),
        ("pad", ct.c_uint16),
    ]


def plan_sites(profile: RuntimeProfile, symbol_table) -> list[ProbeSite]:
    """Resolve every hook pattern to a concrete probe site.

    User hooks and the init/load symbols resolve against the binary's symbol
    table; kernel hooks pass through as literal symbol names. Resolution
    failures are wrapped in SymbolResolution so callers see one error type.
    """
    sites: list[ProbeSite] = []
    for hook in profile.wasi_hooks:
        name, address = _resolve(symbol_table, hook.symbol_pattern, profile)
        sites.append(
            ProbeSite(
                probe_id=demangle(name) or name,
                event_class=hook.event_class,
                space=ProbeSpace.USER,
                symbol=name,
                address=address,
            )
        )
    for hook in profile.syscall_hooks:
        sites.append(
            ProbeSite(
                probe_id=hook.kernel_symbol,
                event_class=hook.event_class,
                space=ProbeSpace.KERNEL,
                symbol=hook.kernel_symbol,
            )
        )
    for cls, pattern in ((EventClass.INIT, profile.init_symbol), (EventClass.LOAD, profile.load_symbol)):
        name, address = _resolve(symbol_table, pattern, profile)
        sites.append(
            ProbeSite(
                probe_id=demangle(name) or name,
                event_class=cls,
                space=ProbeSpace.USER,
                symbol=name,
                address=address,
                entry_only=True,
            )
        )
    return sites


def _resolve(symbol_table, pattern: str, profile: RuntimeProfile) -> tuple[str, int]:
    try:
        return resolve_symbol(symbol_table, pattern)
    except (NotFound, Ambiguous) as exc:
        raise SymbolResolution(
            f"cannot resolve {pattern!r} in {profile.binary_path!r}: {exc}"
        ) from exc


def build_program(sites: list[ProbeSite], comm_filter: str, accumulate: bool) -> str:
    """Assemble the BPF C program: config macros, shared core, trampolines."""
    core = (resources.files("ewapa") / "bpf" / "probes.c").read_text(encoding="utf-8")
    header = [
        f"#define FILTER_ENABLED {1 if comm_filter else 0}",
        f'#define COMM_FILTER "{comm_filter}"',
        f"#define ACCUMULATE {1 if accumulate else 0}",
    ]
    trampolines = []
    for index, site in enumerate(sites):
        space = 0 if site.space is ProbeSpace.USER else 1
        trampolines.append(
            f"int trace_entry_{index}(struct pt_regs *ctx)"
            f" {{ return handle_entry(ctx, {index}, {space}); }}"
        )
        if not site.entry_only:
            trampolines.append(
                f"int trace_exit_{index}(struct pt_regs *ctx)"
                f" {{ return handle_exit(ctx, {index}, {space}); }}"
            )
    return "\n".join(header) + "\n" + core + "\n" + "\n".join(trampolines) + "\n"


def kernel_symbols() -> set[str]:
    """Names exported by the running kernel; empty when unreadable."""
    try:
        with open(_KALLSYMS, encoding="ascii", errors="replace") as fh:
            return {parts[2] for line in fh if len(parts := line.split()) >= 3}
    except OSError:
        return set()


def attach(
    profile: RuntimeProfile,
    target_pid: int | None = None,
    accumulate: bool = False,
) -> CollectorHandle:
    """Load the probe program and attach every hook in the profile.

    Checks are ordered cheapest-first: privilege, BCC availability, user
    symbol resolution, kernel symbol existence, then the actual attachments.
    """
    if os.geteuid() != 0:
        raise PermissionDenied("tracing requires root (or CAP_BPF + CAP_PERFMON)")
    try:
        from bcc import BPF
    except ImportError as exc:
        raise CollectorUnavailable(f"BCC is not importable: {exc}") from exc

    table = list_symbols(profile.binary_path)
    sites = plan_sites(profile, table)

    exported = kernel_symbols()
    if exported:
        for site in sites:
            if site.space is ProbeSpace.KERNEL and site.symbol not in exported:
                raise KernelSymbolMissing(
                    f"kernel does not export {site.symbol!r}; check the profile's syscall_hooks"
                )

    program = build_program(sites, profile.comm_filter, accumulate)
    handle = CollectorHandle(
        profile=profile, sites=sites, accumulate=accumulate, target_pid=target_pid
    )
    try:
        bpf = BPF(text=program)
        for index, site in enumerate(sites):
            if site.space is ProbeSpace.USER:
                bpf.attach_uprobe(
                    name=profile.binary_path, addr=site.address, fn_name=f"trace_entry_{index}"
                )
                if not site.entry_only:
                    bpf.attach_uretprobe(
                        name=profile.binary_path, addr=site.address, fn_name=f"trace_exit_{index}"
                    )
            else:
                bpf.attach_kprobe(event=site.symbol, fn_name=f"trace_entry_{index}")
                if not site.entry_only:
                    bpf.attach_kretprobe(event=site.symbol, fn_name=f"trace_exit_{index}")
    except Exception as exc:
        _cleanup_bpf(locals().get("bpf"))
        raise _map_attach_error(exc) from exc
    handle.bpf = bpf
    handle.attached = True
    return handle


def _map_attach_error(exc: Exception) -> CollectorError:
    message = str(exc)
    number = getattr(exc, "errno", None)
    if number in (errno.ENOSPC, errno.EMFILE, errno.E2BIG) or "ENOSPC" in message:
        return ProbeLimitExceeded(f"kernel rejected probe attachment: {message}")
    return CollectorError(f"probe attachment failed: {message}")


def _cleanup_bpf(bpf) -> None:
    if bpf is not None:
        try:
            bpf.cleanup()
        except Exception:
            pass


def run_and_collect(handle: CollectorHandle, command: str, timeout_s: float = 3600.0) -> Capture:
    """Spawn the command under the attached probes and drain its events.

    The stream is sealed after the process exits plus a short grace period;
    perf ring losses are counted, never silently ignored.
    """
    if not handle.attached or handle.bpf is None:
        raise UseAfterDetach("collector handle is detached")
    bpf = handle.bpf
    events: list[TraceEvent] = []
    lost = [0]

    def on_event(cpu, data, size):
        raw = ct.cast(data, ct.POINTER(_RawEvent)).contents
        site = handle.sites[raw.probe] if raw.probe < len(handle.sites) else None
        if site is None:
            lost[0] += 1
            return
        events.append(
            TraceEvent(
                ts_ns=raw.ts,
                pid=raw.pid,
                tid=raw.tid,
                comm=raw.comm.decode("utf-8", "replace"),
                probe_id=site.probe_id,
                event_class=site.event_class,
                kind=EventKind.ENTRY if raw.kind == 0 else EventKind.EXIT,
                space=site.space,
            )
        )

    def on_lost(cpu, count):
        lost[0] += count

    bpf["events"].open_perf_buffer(on_event, lost_cb=on_lost, page_cnt=256)
    try:
        proc = subprocess.Popen(
            shlex.split(command), stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL
        )
    except (OSError, ValueError) as exc:
        raise SpawnFailure(f"cannot spawn {command!r}: {exc}") from exc

    start = time.monotonic_ns()
    deadline = start + int(timeout_s * 1e9)
    timed_out = False
    while proc.poll() is None:
        bpf.perf_buffer_poll(timeout=100)
        if time.monotonic_ns() > deadline:
            proc.kill()
            proc.wait()
            timed_out = True
            break
    wall_ns = time.monotonic_ns() - start

    grace_end = time.monotonic_ns() + int(DRAIN_GRACE_S * 1e9)
    while time.monotonic_ns() < grace_end:
        bpf.perf_buffer_poll(timeout=50)

    scoped = _scope_events(events, handle, proc.pid)
    capture = Capture(
        events=scoped,
        exit_code=proc.returncode if proc.returncode is not None else -1,
        wall_ns=wall_ns,
        lost_events=lost[0],
        timed_out=timed_out,
        accumulated=_read_accumulators(handle) if handle.accumulate else None,
        kernel_dropped=_read_counter(bpf, "dropped"),
        kernel_orphans=_read_counter(bpf, "orphans"),
    )
    if timed_out:
        raise Timeout(f"target exceeded {timeout_s:.0f}s and was killed", partial=capture)
    return capture


def _scope_events(events: list[TraceEvent], handle: CollectorHandle, spawned_pid: int) -> list[TraceEvent]:
    """The kernel filter already enforces comm; without one, fall back to the
    spawned pid (or an explicit target pid) so host noise stays out."""
    if handle.profile.comm_filter:
        return events
    wanted = handle.target_pid if handle.target_pid is not None else spawned_pid
    return [ev for ev in events if ev.pid == wanted]


def _read_accumulators(handle: CollectorHandle) -> dict[str, IntervalMetric]:
    out: dict[str, IntervalMetric] = {}
    table = handle.bpf["accum"]
    for key, value in table.items():
        index = key.value
        if index >= len(handle.sites):
            continue
        site = handle.sites[index]
        out[site.probe_id] = IntervalMetric(
            probe_id=site.probe_id,
            event_class=site.event_class,
            space=site.space,
            count=value.count,
            total_ns=value.total_ns,
            min_ns=value.min_ns,
            max_ns=value.max_ns,
        )
    return out


def _read_counter(bpf, name: str) -> int:
    try:
        return sum(v.value for v in bpf[name].values())
    except Exception:
        return 0


def detach(handle: CollectorHandle) -> None:
    """Remove every probe and free kernel maps; safe to call twice."""
    if not handle.attached:
        return
    _cleanup_bpf(handle.bpf)
    handle.bpf = None
    handle.attached = False
