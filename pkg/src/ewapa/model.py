"""Core domain types: probe configuration, trace events, and aggregates.

All types here are immutable value objects; they validate on construction
and are safe to share across threads. Averages are always derived as
``total_ns / count`` and never stored, so count/total/average can never
disagree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import DuplicateClass, EmptySymbol, MissingPlaceholder, ProfileError

#: Width of the kernel's fixed task command-name field (15 chars + NUL).
COMM_MAX = 15


class EventClass(Enum):
    """What a probe observes. INIT and LOAD exist only for startup timing
    and are never paired with a syscall hook."""

    READ = "read"
    WRITE = "write"
    SEEK = "seek"
    OPEN = "open"
    CLOSE = "close"
    INIT = "init"
    LOAD = "load"

    @classmethod
    def from_wire(cls, value: str) -> "EventClass":
        for member in cls:
            if member.value == value:
                return member
        raise ValueError(f"unknown event class {value!r}")


#: Classes that may carry WASI or syscall hooks in a profile.
IO_CLASSES = (EventClass.READ, EventClass.WRITE, EventClass.SEEK, EventClass.OPEN, EventClass.CLOSE)


class EventKind(Enum):
    ENTRY = "entry"
    EXIT = "exit"


class ProbeSpace(Enum):
    USER = "user"
    KERNEL = "kernel"


@dataclass(frozen=True)
class WasiHook:
    """User-space probe: a symbol pattern resolved against the runtime binary."""

    event_class: EventClass
    symbol_pattern: str


@dataclass(frozen=True)
class SyscallHook:
    """Kernel-space probe: a literal kernel symbol such as ``__x64_sys_readv``."""

    event_class: EventClass
    kernel_symbol: str


@dataclass(frozen=True)
class RuntimeProfile:
    """Everything needed to probe one runtime: hook symbols, startup symbols,
    and how to launch it.

    ``command_template`` must contain ``{module}``; ``{args}`` and ``{binary}``
    are substituted when present. ``comm_filter`` is capped at 15 bytes to
    match the kernel's fixed-width process name field.
    """

    name: str
    binary_path: str
    wasi_hooks: tuple[WasiHook, ...]
    syscall_hooks: tuple[SyscallHook, ...]
    init_symbol: str
    load_symbol: str
    command_template: str
    comm_filter: str

    def __post_init__(self):
        validate_profile(self)

    def wasi_hook(self, event_class: EventClass) -> WasiHook | None:
        for hook in self.wasi_hooks:
            if hook.event_class is event_class:
                return hook
        return None

    def syscall_hook(self, event_class: EventClass) -> SyscallHook | None:
        for hook in self.syscall_hooks:
            if hook.event_class is event_class:
                return hook
        return None

    def with_comm_filter(self, comm: str) -> "RuntimeProfile":
        return replace(self, comm_filter=comm[:COMM_MAX])


def validate_profile(profile: RuntimeProfile) -> RuntimeProfile:
    """Check every RuntimeProfile invariant; returns the profile unchanged.

    Raises DuplicateClass, EmptySymbol, or MissingPlaceholder.
    """
    if not profile.name:
        raise ProfileError("profile name must be non-empty")
    seen: set[EventClass] = set()
    for hook in profile.wasi_hooks:
        if hook.event_class not in IO_CLASSES:
            raise ProfileError(f"wasi hook class {hook.event_class.value!r} is startup-only")
        if hook.event_class in seen:
            raise DuplicateClass(f"two wasi hooks for class {hook.event_class.value!r}")
        seen.add(hook.event_class)
        if not hook.symbol_pattern:
            raise EmptySymbol(f"empty symbol pattern for class {hook.event_class.value!r}")
    seen = set()
    for hook in profile.syscall_hooks:
        if hook.event_class not in IO_CLASSES:
            raise ProfileError(f"syscall hook class {hook.event_class.value!r} is startup-only")
        if hook.event_class in seen:
            raise DuplicateClass(f"two syscall hooks for class {hook.event_class.value!r}")
        seen.add(hook.event_class)
        if not hook.kernel_symbol:
            raise EmptySymbol(f"empty kernel symbol for class {hook.event_class.value!r}")
    if not profile.init_symbol:
        raise EmptySymbol("init_symbol must be non-empty")
    if not profile.load_symbol:
        raise EmptySymbol("load_symbol must be non-empty")
    if "{module}" not in profile.command_template:
        raise MissingPlaceholder("command_template must contain {module}")
    if len(profile.comm_filter.encode()) > COMM_MAX:
        raise ProfileError(f"comm_filter exceeds {COMM_MAX} bytes: {profile.comm_filter!r}")
    return profile


@dataclass(frozen=True)
class TraceEvent:
    """One timestamped probe fire, from user or kernel space.

    ``size_bytes`` is the payload size of the I/O operation when the probe
    captures it; kernel exit probes may not, so it is optional.
    """

    ts_ns: int
    pid: int
    tid: int
    comm: str
    probe_id: str
    event_class: EventClass
    kind: EventKind
    space: ProbeSpace
    size_bytes: int | None = None

    def __post_init__(self):
        if self.ts_ns <= 0:
            raise ValueError(f"ts_ns must be positive, got {self.ts_ns}")
        if not 0 <= self.pid < 2**32 or not 0 <= self.tid < 2**32:
            raise ValueError("pid/tid out of u32 range")
        if len(self.comm.encode()) > 16:
            raise ValueError(f"comm exceeds 16 bytes: {self.comm!r}")
        if self.size_bytes is not None and self.size_bytes < 0:
            raise ValueError("size_bytes must be non-negative")


@dataclass(frozen=True)
class IntervalMetric:
    """Per-probe aggregate over matched entry/exit pairs.

    The average is ``total_ns / count`` via :attr:`avg_ns`, never stored.
    """

    probe_id: str
    event_class: EventClass
    space: ProbeSpace
    count: int = 0
    total_ns: int = 0
    min_ns: int = 0
    max_ns: int = 0

    def __post_init__(self):
        if self.count < 0 or self.total_ns < 0:
            raise ValueError("count and total_ns must be non-negative")
        if self.count == 0 and self.total_ns != 0:
            raise ValueError("count = 0 requires total_ns = 0")
        if self.count > 0 and not (self.min_ns <= self.total_ns / self.count <= self.max_ns):
            raise ValueError(
                f"min {self.min_ns} <= avg {self.total_ns / self.count:.1f} <= max {self.max_ns} violated"
            )

    @property
    def avg_ns(self) -> float:
        return self.total_ns / self.count if self.count else 0.0

    def observe(self, duration_ns: int) -> "IntervalMetric":
        """Fold one matched interval into the aggregate."""
        if duration_ns < 0:
            raise ValueError("duration must be non-negative")
        if self.count == 0:
            return replace(self, count=1, total_ns=duration_ns, min_ns=duration_ns, max_ns=duration_ns)
        return replace(
            self,
            count=self.count + 1,
            total_ns=self.total_ns + duration_ns,
            min_ns=min(self.min_ns, duration_ns),
            max_ns=max(self.max_ns, duration_ns),
        )

    def merge(self, other: "IntervalMetric") -> "IntervalMetric":
        """Combine two partial aggregates for the same probe.

        Associative and commutative, so split points in the event stream
        do not affect the result.
        """
        if (self.probe_id, self.event_class, self.space) != (other.probe_id, other.event_class, other.space):
            raise ValueError("cannot merge metrics for different probes")
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        return replace(
            self,
            count=self.count + other.count,
            total_ns=self.total_ns + other.total_ns,
            min_ns=min(self.min_ns, other.min_ns),
            max_ns=max(self.max_ns, other.max_ns),
        )


class WorkloadKind(Enum):
    FREAD = "fread"
    FWRITE = "fwrite"
    FSEEK = "fseek"
    OPENCLOSE = "openclose"


#: Kinds driven by a fixed-count auxiliary loop rather than file size.
AUXILIARY_KINDS = (WorkloadKind.FSEEK, WorkloadKind.OPENCLOSE)

DEFAULT_LOOP_COUNT = 50


@dataclass(frozen=True)
class WorkloadSpec:
    """One test case: what to run, against which file, with which chunking."""

    kind: WorkloadKind
    file_size_bytes: int
    chunk_bytes: int
    loop_count: int = DEFAULT_LOOP_COUNT
    source_path: str = ""
    wasm_module: str = ""
    native_binary: str = ""

    def __post_init__(self):
        if self.file_size_bytes <= 0:
            raise ValueError("file_size_bytes must be positive")
        if self.chunk_bytes <= 0:
            raise ValueError("chunk_bytes must be positive")
        if self.kind in AUXILIARY_KINDS and self.loop_count <= 0:
            raise ValueError(f"{self.kind.value} workloads need loop_count > 0")


@dataclass(frozen=True)
class RepetitionRecord:
    """Measurements from one execution of a workload cell."""

    total_ns: int
    startup_ns: int | None
    metrics: dict[str, IntervalMetric]
    unmatched_entries: int = 0
    orphan_exits: int = 0

    def __post_init__(self):
        if self.total_ns < 0:
            raise ValueError("total_ns must be non-negative")


@dataclass(frozen=True)
class SessionResult:
    """One runtime x workload cell: its repetitions plus their mean/stddev.

    ``stddev_total_ns`` uses the n-1 denominator; with a single repetition it
    is recorded as 0 with ``stddev_defined`` cleared.
    """

    runtime: str
    workload: WorkloadSpec
    repetitions: tuple[RepetitionRecord, ...]
    mean_total_ns: float
    stddev_total_ns: float
    stddev_defined: bool = True

    @classmethod
    def from_repetitions(
        cls, runtime: str, workload: WorkloadSpec, repetitions: list[RepetitionRecord]
    ) -> "SessionResult":
        if not repetitions:
            raise ValueError("at least one repetition required")
        totals = [rep.total_ns for rep in repetitions]
        mean = sum(totals) / len(totals)
        if len(totals) > 1:
            var = sum((t - mean) ** 2 for t in totals) / (len(totals) - 1)
            stddev, defined = math.sqrt(var), True
        else:
            stddev, defined = 0.0, False
        return cls(
            runtime=runtime,
            workload=workload,
            repetitions=tuple(repetitions),
            mean_total_ns=mean,
            stddev_total_ns=stddev,
            stddev_defined=defined,
        )


class AnomalyKind(Enum):
    SYSCALL_DOUBLING = "syscall_doubling"
    SUPERLINEAR_GROWTH = "superlinear_growth"
    STARTUP_OUTLIER = "startup_outlier"
    BUFFER_RATIO_DIVERGENCE = "buffer_ratio_divergence"
    NATIVE_INVERSION = "native_inversion"


@dataclass(frozen=True)
class AnomalyFinding:
    """A detector verdict: the evidence values and the threshold that fired."""

    kind: AnomalyKind
    subject: str
    evidence: dict[str, float]
    threshold: float
    message: str

    def __post_init__(self):
        if not self.evidence:
            raise ValueError("evidence must be non-empty")
