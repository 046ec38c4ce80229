"""Command-line entry point.

Subcommands: ``profile`` (live matrix run), ``replay`` (pipeline over
recorded logs), ``analyze`` (CSV + findings + figures + HTML from saved
sessions), ``gen-input``, ``symbols``. Exit codes: 0 success, 1 operational
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis
from .errors import EwapaError, ParseError
from .harness import (
    DEFAULT_CHUNK_BYTES,
    DEFAULT_RECORD_WIDTH,
    DEFAULT_REPS,
    LiveBackend,
    ReplayBackend,
    load_matrix_config,
    parse_size,
    plan_matrix,
    run_cell,
)
from .model import (
    IO_CLASSES,
    AnomalyFinding,
    AnomalyKind,
    EventClass,
    ProbeSpace,
    SessionResult,
    WorkloadKind,
    WorkloadSpec,
)
from .profiles import resolve_profile_arg
from .report import (
    emit_findings,
    emit_html_report,
    emit_metrics_csv,
    load_sessions,
    save_session,
    session_filename,
)
from .symbols import demangle, list_symbols, resolve_symbol

_KIND_CLASSES = {
    WorkloadKind.FREAD: (EventClass.READ,),
    WorkloadKind.FWRITE: (EventClass.WRITE,),
    WorkloadKind.FSEEK: (EventClass.SEEK,),
    WorkloadKind.OPENCLOSE: (EventClass.OPEN, EventClass.CLOSE),
}

#: Workloads whose dominant class supports buffering-ratio estimation.
_BUFFER_CLASS = {
    WorkloadKind.FREAD: EventClass.READ,
    WorkloadKind.FWRITE: EventClass.WRITE,
}

_KIND_CHUNK = {
    WorkloadKind.FREAD: DEFAULT_CHUNK_BYTES,
    WorkloadKind.FWRITE: DEFAULT_RECORD_WIDTH,
    WorkloadKind.FSEEK: DEFAULT_CHUNK_BYTES,
    WorkloadKind.OPENCLOSE: DEFAULT_CHUNK_BYTES,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EwapaError as exc:
        print(f"ewapa: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ewapa: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewapa",
        description="Probe-based WASI I/O profiling and anomaly analysis for Wasm runtimes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="run the live workload matrix under tracing")
    p.add_argument("--profile", required=True, help="builtin profile name or profile file path")
    p.add_argument("--workload", required=True, help="matrix config file")
    p.add_argument("--reps", type=int, default=None, help="repetitions per cell")
    p.add_argument("--out", required=True, help="output directory for sessions and logs")
    p.add_argument("--accumulate", action="store_true", help="pair intervals in the kernel")
    p.add_argument("--timeout", type=float, default=3600.0, help="per-repetition timeout (s)")
    p.set_defaults(func=_cmd_profile)

    p = sub.add_parser("replay", help="run the pipeline over recorded event logs")
    p.add_argument("--log", required=True, help="one log file or a directory of *.log files")
    p.add_argument("--profile", required=True, help="builtin profile name or profile file path")
    p.add_argument("--out", required=True, help="output directory for session files")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("analyze", help="emit CSV, findings, figures, and the HTML report")
    p.add_argument("--sessions", required=True, help="directory of session files")
    p.add_argument("--csv", required=True, help="metrics CSV output path")
    p.add_argument("--findings", required=True, help="findings output path")
    p.add_argument("--html", required=True, help="HTML report output path")
    p.add_argument("--figures", default=None, help="figure directory (default: next to the CSV)")
    p.add_argument("--threshold-superlinear", type=float, default=analysis.DEFAULT_SUPERLINEAR_THETA)
    p.add_argument("--threshold-doubling-tol", type=float, default=analysis.DEFAULT_DOUBLING_TOL)
    p.add_argument("--threshold-ratio-snap", type=float, default=analysis.DEFAULT_RATIO_SNAP)
    p.add_argument("--threshold-startup-factor", type=float, default=analysis.DEFAULT_STARTUP_FACTOR)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("gen-input", help="generate a deterministic input file")
    p.add_argument("--size", required=True, help="bytes, or a KiB/MiB/GiB-suffixed size")
    p.add_argument("--record-width", type=int, default=DEFAULT_RECORD_WIDTH)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_input)

    p = sub.add_parser("symbols", help="list or resolve symbols in a runtime binary")
    p.add_argument("--binary", required=True)
    p.add_argument("--pattern", default=None, help="resolve this pattern instead of listing")
    p.set_defaults(func=_cmd_symbols)

    return parser


# --- subcommands ----------------------------------------------------------


def _cmd_profile(args) -> int:
    profile = resolve_profile_arg(args.profile)
    config = load_matrix_config(args.workload)
    reps = args.reps if args.reps is not None else (config.reps or DEFAULT_REPS)
    out_dir = Path(args.out)
    backend = LiveBackend(
        work_dir=out_dir / "work",
        toolchains=config.toolchains,
        timeout_s=args.timeout,
        accumulate=args.accumulate,
    )
    from dataclasses import replace

    cells = plan_matrix(replace(config, runtimes=(profile.name,)))
    for _, spec in cells:
        result, manifest = run_cell(profile, spec, reps, backend)
        _persist(result, manifest, out_dir)
        print(f"{profile.name} {spec.kind.value} {spec.file_size_bytes}: "
              f"mean {result.mean_total_ns / 1e6:.2f} ms over {reps} rep(s)")
    return 0


def _cmd_replay(args) -> int:
    profile = resolve_profile_arg(args.profile)
    source = Path(args.log)
    out_dir = Path(args.out)
    for spec, reps in discover_replay_cells(source):
        result, manifest = run_cell(profile, spec, reps, ReplayBackend(source))
        _persist(result, manifest, out_dir)
        print(f"{profile.name} {spec.kind.value} {spec.file_size_bytes}: "
              f"replayed {reps} log(s), mean {result.mean_total_ns / 1e6:.2f} ms")
    return 0


def discover_replay_cells(source: Path) -> list[tuple[WorkloadSpec, int]]:
    """Group recorded logs into cells by their ``<kind>__<size>__rep<k>.log``
    names; a single file forms a one-repetition cell."""
    paths = sorted(source.glob("*.log")) if source.is_dir() else [source]
    if not paths:
        raise ParseError(f"no *.log files under {source}")
    groups: dict[tuple[WorkloadKind, int], int] = {}
    for path in paths:
        kind, size = _parse_log_name(path)
        groups[(kind, size)] = groups.get((kind, size), 0) + 1
    cells = []
    for (kind, size), count in sorted(groups.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
        spec = WorkloadSpec(kind=kind, file_size_bytes=size, chunk_bytes=_KIND_CHUNK[kind])
        cells.append((spec, count))
    return cells


def _parse_log_name(path: Path) -> tuple[WorkloadKind, int]:
    parts = path.name.removesuffix(".log").split("__")
    if len(parts) != 3 or not parts[2].startswith("rep"):
        raise ParseError(
            "log name must be <kind>__<size-bytes>__rep<k>.log", path=str(path)
        )
    try:
        return WorkloadKind(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ParseError(f"bad log name: {exc}", path=str(path)) from exc


def _persist(result: SessionResult, manifest: dict, out_dir: Path) -> None:
    save_session(result, out_dir)
    manifest_path = out_dir / session_filename(result).replace(".json", ".manifest.json")
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _cmd_analyze(args) -> int:
    from .figures import render_all_figures, save_figures

    sessions = load_sessions(args.sessions)
    findings = collect_findings(
        sessions,
        theta=args.threshold_superlinear,
        doubling_tol=args.threshold_doubling_tol,
        ratio_snap=args.threshold_ratio_snap,
        startup_factor=args.threshold_startup_factor,
    )
    emit_metrics_csv(sessions, args.csv)
    emit_findings(findings, args.findings)
    figures = render_all_figures(sessions)
    figure_dir = args.figures if args.figures is not None else str(Path(args.csv).parent)
    save_figures(figures, figure_dir)
    emit_html_report(sessions, findings, args.html, figures=figures)
    print(f"{len(sessions)} session cell(s), {len(findings)} finding(s), "
          f"{len(figures)} figure(s)")
    return 0


def _cmd_gen_input(args) -> int:
    from .harness import generate_input

    size = parse_size(args.size)
    path = generate_input(args.out, size, args.record_width)
    print(f"{path}: {size} bytes, record width {args.record_width}")
    return 0


def _cmd_symbols(args) -> int:
    table = list_symbols(args.binary)
    if args.pattern is None:
        for name in sorted(demangle(e.name) or e.name for e in table.entries):
            print(name)
        return 0
    name, address = resolve_symbol(table, args.pattern)
    print(f"{demangle(name) or name} @ {address:#x}")
    return 0


# --- finding orchestration ------------------------------------------------


def class_counts(result: SessionResult) -> dict[EventClass, dict[str, int]]:
    """Summed per-class counts and totals across repetitions, split by
    probe space (user-side hook calls vs kernel-side syscalls)."""
    acc: dict[EventClass, dict[str, int]] = {}
    for rep in result.repetitions:
        for metric in rep.metrics.values():
            cell = acc.setdefault(
                metric.event_class,
                {"wasi_count": 0, "wasi_total": 0, "syscall_count": 0, "syscall_total": 0},
            )
            if metric.space is ProbeSpace.USER:
                cell["wasi_count"] += metric.count
                cell["wasi_total"] += metric.total_ns
            else:
                cell["syscall_count"] += metric.count
                cell["syscall_total"] += metric.total_ns
    return acc


def collect_findings(
    sessions: list[SessionResult],
    theta: float = analysis.DEFAULT_SUPERLINEAR_THETA,
    doubling_tol: float = analysis.DEFAULT_DOUBLING_TOL,
    ratio_snap: float = analysis.DEFAULT_RATIO_SNAP,
    startup_factor: float = analysis.DEFAULT_STARTUP_FACTOR,
) -> list[AnomalyFinding]:
    """Run every detector over the session set, in a fixed order so the
    findings file is deterministic."""
    ordered = sorted(sessions, key=lambda r: (r.runtime, r.workload.kind.value, r.workload.file_size_bytes))
    counts = {(r.runtime, r.workload.kind, r.workload.file_size_bytes): class_counts(r) for r in ordered}
    findings: list[AnomalyFinding] = []

    # Syscall doubling, per cell and class.
    for result in ordered:
        key = (result.runtime, result.workload.kind, result.workload.file_size_bytes)
        for cls in IO_CLASSES:
            cell = counts[key].get(cls)
            if not cell or cell["wasi_count"] <= 0 or cell["syscall_count"] <= 0:
                continue
            finding = analysis.detect_syscall_doubling(
                cell["wasi_count"],
                cell["syscall_count"],
                tol=doubling_tol,
                subject=_subject(result, cls),
            )
            if finding:
                findings.append(finding)

    # Buffering ratio, wasm cell against the native cell of the same shape.
    for result in ordered:
        if result.runtime == "native":
            continue
        cls = _BUFFER_CLASS.get(result.workload.kind)
        if cls is None:
            continue
        key = (result.runtime, result.workload.kind, result.workload.file_size_bytes)
        native_key = ("native", result.workload.kind, result.workload.file_size_bytes)
        cell = counts[key].get(cls)
        native_cell = counts.get(native_key, {}).get(cls)
        if not cell or not native_cell:
            continue
        if min(cell["wasi_count"], cell["syscall_count"], native_cell["wasi_count"]) <= 0:
            continue
        estimate = analysis.estimate_buffer_ratio(
            libc_count=native_cell["wasi_count"],
            wasi_count=cell["wasi_count"],
            syscall_count=cell["syscall_count"],
            snap=ratio_snap,
            native_syscall_count=native_cell["syscall_count"] or None,
            subject=_subject(result, cls),
        )
        if estimate.finding:
            findings.append(estimate.finding)

    # Startup outliers across runtimes.
    startups: dict[str, list[int]] = {}
    for result in ordered:
        for rep in result.repetitions:
            if rep.startup_ns is not None and rep.startup_ns > 0:
                startups.setdefault(result.runtime, []).append(rep.startup_ns)
    means = {name: round(sum(vals) / len(vals)) for name, vals in startups.items()}
    if len(means) >= 2:
        findings.extend(analysis.detect_startup_outlier(means, factor=startup_factor))

    # Native inversion, per workload shape and class.
    shapes = sorted({(r.workload.kind, r.workload.file_size_bytes) for r in ordered},
                    key=lambda s: (s[0].value, s[1]))
    for kind, size in shapes:
        native_cell = counts.get(("native", kind, size))
        if not native_cell:
            continue
        for cls in _KIND_CLASSES[kind]:
            native_total = native_cell.get(cls, {}).get("wasi_total", 0)
            runtime_totals = {}
            for result in ordered:
                if result.runtime == "native" or result.workload.kind is not kind:
                    continue
                if result.workload.file_size_bytes != size:
                    continue
                total = counts[(result.runtime, kind, size)].get(cls, {}).get("wasi_total", 0)
                if total > 0:
                    runtime_totals[result.runtime] = float(total)
            if native_total > 0 and runtime_totals:
                finding = analysis.detect_native_inversion(
                    float(native_total), runtime_totals, subject=f"{kind.value}:{size}:{cls.value}"
                )
                if finding:
                    findings.append(finding)

    # Superlinear growth per runtime and workload kind.
    series: dict[tuple[str, WorkloadKind], list[tuple[int, float]]] = {}
    for result in ordered:
        series.setdefault((result.runtime, result.workload.kind), []).append(
            (result.workload.file_size_bytes, result.mean_total_ns)
        )
    for (runtime, kind), points in sorted(series.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        points = sorted(points)
        if len(points) < 3 or len({s for s, _ in points}) != len(points):
            continue
        trend = analysis.growth_trend(points, theta=theta)
        if trend.superlinear:
            evidence = {f"slope_{i}": s for i, s in enumerate(trend.slopes)}
            evidence.update({f"slope_ratio_{i}": r for i, r in enumerate(trend.slope_ratios)})
            findings.append(
                AnomalyFinding(
                    kind=AnomalyKind.SUPERLINEAR_GROWTH,
                    subject=f"{runtime}:{kind.value}",
                    evidence=evidence,
                    threshold=theta,
                    message=(
                        f"marginal time per byte grows {max(trend.slope_ratios):.2f}x "
                        f"between consecutive sizes (threshold {theta:g})"
                    ),
                )
            )
    return findings


def _subject(result: SessionResult, cls: EventClass) -> str:
    return f"{result.runtime}:{result.workload.kind.value}:{result.workload.file_size_bytes}:{cls.value}"


if __name__ == "__main__":
    sys.exit(main())
