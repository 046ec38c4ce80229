"""Probe-based profiling of WASI file I/O in standalone WebAssembly runtimes.

The package splits into a pure analysis core (model, pipeline, analysis,
report) that runs anywhere, and a Linux-only live collector that attaches
user- and kernel-space probes to measure real executions. Recorded event
logs make every analysis reproducible without the tracing stack.
"""

from .errors import EwapaError
from .model import (
    AnomalyFinding,
    AnomalyKind,
    EventClass,
    EventKind,
    IntervalMetric,
    ProbeSpace,
    RepetitionRecord,
    RuntimeProfile,
    SessionResult,
    SyscallHook,
    TraceEvent,
    WasiHook,
    WorkloadKind,
    WorkloadSpec,
)
from .pipeline import compute_startup, filter_process, pair_intervals, summarize
from .profiles import builtin_profile, builtin_profiles, load_profile, save_profile

__version__ = "0.1.0"

__all__ = [
    "EwapaError",
    "AnomalyFinding",
    "AnomalyKind",
    "EventClass",
    "EventKind",
    "IntervalMetric",
    "ProbeSpace",
    "RepetitionRecord",
    "RuntimeProfile",
    "SessionResult",
    "SyscallHook",
    "TraceEvent",
    "WasiHook",
    "WorkloadKind",
    "WorkloadSpec",
    "compute_startup",
    "filter_process",
    "pair_intervals",
    "summarize",
    "builtin_profile",
    "builtin_profiles",
    "load_profile",
    "save_profile",
    "__version__",
]
