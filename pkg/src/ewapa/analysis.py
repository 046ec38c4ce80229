"""Trend, proportion, and anomaly analysis over collected session data.

Detectors consume plain counts and times, so they work identically over live
captures and replayed logs. Threshold defaults are artifact choices (the
observations they encode were reported without numeric cutoffs); every
threshold is overridable and recorded in the finding it produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    EmptyRuntimeSet,
    InsufficientRuntimes,
    NonIncreasingSizes,
    NonPositiveStartup,
    TooFewPoints,
    ZeroChunk,
    ZeroCount,
    ZeroTotal,
    ZeroWasiCount,
)
from .model import AnomalyFinding, AnomalyKind, EventClass, ProbeSpace, SessionResult

DEFAULT_SUPERLINEAR_THETA = 1.25
DEFAULT_DOUBLING_TOL = 0.05
DEFAULT_RATIO_SNAP = 0.25
DEFAULT_STARTUP_FACTOR = 10.0
DEFAULT_AUX_EXTREME_FACTOR = 1000.0
#: Native-vs-wasm buffering ratios further apart than this factor indicate
#: different buffering mechanisms.
BUFFER_MECHANISM_FACTOR = 2.0


@dataclass(frozen=True)
class ClassShares:
    """Share of the total run spent in WASI and in syscalls for one class.

    ``wasi_share`` may exceed 1 when async worker threads run syscalls in
    parallel with the main thread; that is reported verbatim with
    ``over_unity`` set, never clamped.
    """

    wasi_share: float
    syscall_share: float
    other_share: float
    over_unity: bool


def proportion_breakdown(result: SessionResult) -> dict[EventClass, ClassShares]:
    """Per-class WASI and syscall time as a fraction of mean total time.

    The syscall share is reported alongside the WASI share, never subtracted
    from it: async runtimes issue syscalls on separate threads, so nesting
    cannot be assumed.
    """
    if result.mean_total_ns <= 0:
        raise ZeroTotal(f"cell {result.runtime} has non-positive mean total")
    n = len(result.repetitions)
    totals: dict[EventClass, dict[ProbeSpace, float]] = {}
    for rep in result.repetitions:
        for metric in rep.metrics.values():
            cell = totals.setdefault(metric.event_class, {ProbeSpace.USER: 0.0, ProbeSpace.KERNEL: 0.0})
            cell[metric.space] += metric.total_ns
    shares: dict[EventClass, ClassShares] = {}
    for cls, cell in totals.items():
        wasi = cell[ProbeSpace.USER] / n / result.mean_total_ns
        sys = cell[ProbeSpace.KERNEL] / n / result.mean_total_ns
        shares[cls] = ClassShares(
            wasi_share=wasi,
            syscall_share=sys,
            other_share=max(0.0, 1.0 - wasi),
            over_unity=wasi > 1.0,
        )
    return shares


@dataclass(frozen=True)
class GrowthTrend:
    """Marginal time per byte between consecutive sizes, and the verdict."""

    slopes: tuple[float, ...]
    slope_ratios: tuple[float, ...]
    superlinear: bool
    non_monotonic: bool


def growth_trend(
    series: list[tuple[int, float]], theta: float = DEFAULT_SUPERLINEAR_THETA
) -> GrowthTrend:
    """Flag superlinear growth: any consecutive slope ratio above theta.

    Ratios whose denominator slope is zero or negative are skipped and the
    series flagged non-monotonic instead (measurement noise at small sizes
    can produce decreasing marginal times, which is not superlinearity).
    """
    if len(series) < 2:
        raise TooFewPoints(f"need at least 2 points, got {len(series)}")
    sizes = [s for s, _ in series]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise NonIncreasingSizes(f"sizes must be strictly increasing: {sizes}")
    slopes = [
        (t1 - t0) / (s1 - s0) for (s0, t0), (s1, t1) in zip(series, series[1:])
    ]
    ratios: list[float] = []
    superlinear = False
    non_monotonic = False
    for prev, cur in zip(slopes, slopes[1:]):
        if prev <= 0:
            non_monotonic = True
            continue
        ratio = cur / prev
        ratios.append(ratio)
        if ratio > theta:
            superlinear = True
    return GrowthTrend(
        slopes=tuple(slopes),
        slope_ratios=tuple(ratios),
        superlinear=superlinear,
        non_monotonic=non_monotonic,
    )


def detect_syscall_doubling(
    wasi_count: int,
    syscall_count: int,
    tol: float = DEFAULT_DOUBLING_TOL,
    subject: str = "",
) -> AnomalyFinding | None:
    """Fire when syscalls outnumber WASI calls by a factor of two.

    The signature of an async backend splitting each vectored syscall into
    two plain ones; the verdict depends only on the count ratio, not on
    which kernel symbol produced it.
    """
    if wasi_count <= 0:
        raise ZeroWasiCount("wasi_count must be positive")
    ratio = syscall_count / wasi_count
    if abs(ratio - 2.0) > tol:
        return None
    return AnomalyFinding(
        kind=AnomalyKind.SYSCALL_DOUBLING,
        subject=subject,
        evidence={
            "ratio": ratio,
            "wasi_count": float(wasi_count),
            "syscall_count": float(syscall_count),
        },
        threshold=tol,
        message=f"syscall count is {ratio:.3f}x the WASI call count (expected ~1x)",
    )


@dataclass(frozen=True)
class BufferRatioEstimate:
    """Library-call : WASI-call : syscall ratio, snapped when near-integer."""

    libc_to_wasi: float
    wasi_to_syscall: float
    presentation: str
    native_libc_to_syscall: float | None
    finding: AnomalyFinding | None


def _snap_term(value: float, snap: float) -> tuple[str, int | None]:
    nearest = round(value)
    if nearest >= 1 and abs(value - nearest) <= snap:
        return str(nearest), nearest
    return f"{value:.2f}", None


def estimate_buffer_ratio(
    libc_count: int,
    wasi_count: int,
    syscall_count: int,
    snap: float = DEFAULT_RATIO_SNAP,
    native_syscall_count: int | None = None,
    subject: str = "",
) -> BufferRatioEstimate:
    """Estimate the user-space buffering ratio from call counts.

    ``r1 = libc/wasi`` snapping to an integer above 1 means the runtime
    batches several library calls into one WASI call. When the native-side
    ratio ``libc/native_syscall`` is available and differs from r1 by more
    than 2x, the two environments flush their buffers by different
    mechanisms, which distorts any naive time comparison between them.
    """
    if wasi_count <= 0 or syscall_count <= 0:
        raise ZeroCount("wasi_count and syscall_count must be positive")
    if libc_count <= 0:
        raise ZeroCount("libc_count must be positive")
    r1 = libc_count / wasi_count
    r2 = wasi_count / syscall_count
    third = syscall_count / wasi_count
    r1_text, r1_int = _snap_term(r1, snap)
    third_text, _ = _snap_term(third, snap)
    presentation = f"{r1_text}:1:{third_text}"

    native_ratio = None
    if native_syscall_count is not None:
        if native_syscall_count <= 0:
            raise ZeroCount("native_syscall_count must be positive")
        native_ratio = libc_count / native_syscall_count

    buffered = r1_int is not None and r1_int > 1
    mechanism_mismatch = native_ratio is not None and (
        native_ratio / r1 > BUFFER_MECHANISM_FACTOR or r1 / native_ratio > BUFFER_MECHANISM_FACTOR
    )
    finding = None
    if buffered or mechanism_mismatch:
        evidence = {
            "libc_to_wasi": r1,
            "wasi_to_syscall": r2,
            "libc_count": float(libc_count),
            "wasi_count": float(wasi_count),
            "syscall_count": float(syscall_count),
        }
        reasons = []
        if buffered:
            evidence["snapped_libc_to_wasi"] = float(r1_int)
            reasons.append(f"runtime buffers ~{r1_int} library calls per WASI call")
        if native_ratio is not None:
            evidence["native_libc_to_syscall"] = native_ratio
        if mechanism_mismatch:
            evidence["mechanism_factor"] = max(native_ratio / r1, r1 / native_ratio)
            reasons.append(
                f"native batches ~{native_ratio:.1f} library calls per syscall "
                f"vs ~{r1:.1f} per WASI call here"
            )
        finding = AnomalyFinding(
            kind=AnomalyKind.BUFFER_RATIO_DIVERGENCE,
            subject=subject,
            evidence=evidence,
            threshold=snap,
            message=f"buffering ratio {presentation}: " + "; ".join(reasons),
        )
    return BufferRatioEstimate(
        libc_to_wasi=r1,
        wasi_to_syscall=r2,
        presentation=presentation,
        native_libc_to_syscall=native_ratio,
        finding=finding,
    )


def detect_startup_outlier(
    startups: dict[str, int], factor: float = DEFAULT_STARTUP_FACTOR
) -> list[AnomalyFinding]:
    """Flag runtimes whose startup exceeds the fastest one by ``factor``."""
    if len(startups) < 2:
        raise InsufficientRuntimes("need startups for at least 2 runtimes")
    if any(v <= 0 for v in startups.values()):
        raise NonPositiveStartup("all startup times must be positive")
    min_runtime = min(sorted(startups), key=lambda name: startups[name])
    min_ns = startups[min_runtime]
    findings = []
    for runtime in sorted(startups):
        ratio = startups[runtime] / min_ns
        if ratio > factor:
            findings.append(
                AnomalyFinding(
                    kind=AnomalyKind.STARTUP_OUTLIER,
                    subject=runtime,
                    evidence={
                        "ratio": ratio,
                        "startup_ns": float(startups[runtime]),
                        "min_ns": float(min_ns),
                    },
                    threshold=factor,
                    message=f"startup is {ratio:.0f}x the fastest runtime ({min_runtime})",
                )
            )
    return findings


def detect_native_inversion(
    native_time_ns: float, runtime_times: dict[str, float], subject: str = ""
) -> AnomalyFinding | None:
    """Fire when native library-call time exceeds every runtime's WASI time.

    Counter-intuitive on its face; usually a symptom of the native side
    timing many buffer-only library calls that the runtimes batch away.
    """
    if not runtime_times:
        raise EmptyRuntimeSet("need at least one runtime time")
    if native_time_ns <= 0 or any(v <= 0 for v in runtime_times.values()):
        raise ValueError("all times must be positive")
    if native_time_ns <= max(runtime_times.values()):
        return None
    evidence = {f"ratio_vs_{name}": native_time_ns / t for name, t in sorted(runtime_times.items())}
    evidence["native_ns"] = float(native_time_ns)
    slowest = max(sorted(runtime_times), key=lambda name: runtime_times[name])
    return AnomalyFinding(
        kind=AnomalyKind.NATIVE_INVERSION,
        subject=subject,
        evidence=evidence,
        threshold=1.0,
        message=f"native time exceeds every runtime's WASI time (slowest runtime: {slowest})",
    )


def expected_call_count(file_size_bytes: int, chunk_bytes: int) -> int:
    """Chunked-read call count for a file: ceil(size/chunk) plus the final
    read that observes EOF."""
    if chunk_bytes <= 0:
        raise ZeroChunk("chunk_bytes must be positive")
    if file_size_bytes < 0:
        raise ValueError("file_size_bytes must be non-negative")
    return math.ceil(file_size_bytes / chunk_bytes) + 1


@dataclass(frozen=True)
class AuxiliaryCell:
    total: float
    ratio_to_min: float
    extreme: bool


def compare_auxiliary(
    results: dict[str, dict[EventClass, float]],
    extreme_factor: float = DEFAULT_AUX_EXTREME_FACTOR,
) -> dict[EventClass, dict[str, AuxiliaryCell]]:
    """Per-class WASI totals for the auxiliary calls, with ratio-to-minimum.

    Input maps runtime name to per-class WASI time (open/close/seek cells).
    Ratios far beyond the pack (``extreme_factor``) are flagged; they usually
    mean one runtime elides the underlying syscall entirely.
    """
    columns: dict[EventClass, dict[str, float]] = {}
    for runtime, per_class in results.items():
        for cls, total in per_class.items():
            columns.setdefault(cls, {})[runtime] = total
    table: dict[EventClass, dict[str, AuxiliaryCell]] = {}
    for cls, col in columns.items():
        positive = [v for v in col.values() if v > 0]
        floor = min(positive) if positive else 0.0
        table[cls] = {}
        for runtime in sorted(col):
            total = col[runtime]
            ratio = total / floor if floor > 0 else 1.0
            table[cls][runtime] = AuxiliaryCell(
                total=total, ratio_to_min=ratio, extreme=ratio > extreme_factor
            )
    return table
