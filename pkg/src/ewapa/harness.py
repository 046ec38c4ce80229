"""Workload harness: input generation, external compilation, matrix planning,
and per-cell execution over the live or replay backend.

Sizes are binary throughout (GiB = 2^30): the expected chunked-read count for
a 100 GiB file at 4 KiB chunks only comes out right under that reading.
"""

from __future__ import annotations

import errno
import hashlib
import re
import shlex
import subprocess
import time
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import (
    CompileFailed,
    DiskFull,
    EmptyConfig,
    ParseError,
    PathNotWritable,
    PipelineError,
    ReplayLogMissing,
    ToolchainMissing,
)
from .model import (
    DEFAULT_LOOP_COUNT,
    RepetitionRecord,
    RuntimeProfile,
    SessionResult,
    WorkloadKind,
    WorkloadSpec,
)
from .pipeline import compute_startup, filter_process, pair_intervals
from .profiles import profile_to_dict
from .report import read_event_log, write_event_log

KiB = 1 << 10
MiB = 1 << 20
GiB = 1 << 30

DEFAULT_CHUNK_BYTES = 4096
DEFAULT_RECORD_WIDTH = 61
DEFAULT_REPS = 10
SEEK_STRIDE_BYTES = 1_000_000

#: Full-scale size presets (binary units).
FREAD_SIZES = (1 * GiB, 10 * GiB, 100 * GiB)
FWRITE_SIZES = (48 * MiB, round(4.7 * GiB), 11 * GiB, 99 * GiB)
FSEEK_SIZE = 1 * GiB
OPENCLOSE_SIZE = round(4.7 * GiB)

#: Desk-scale presets for machines where a 100 GiB pass is unreasonable.
DESK_SIZES = (64 * MiB, 256 * MiB, 1 * GiB)

_SIZE_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(B|KIB|MIB|GIB)?\s*$", re.IGNORECASE)
_SIZE_UNITS = {None: 1, "B": 1, "KIB": KiB, "MIB": MiB, "GIB": GiB}


def parse_size(text: str | int) -> int:
    """``"64 MiB"`` / ``"4.7GiB"`` / ``"1037"`` to bytes (binary units)."""
    if isinstance(text, int):
        return text
    m = _SIZE_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse size {text!r} (expected e.g. '1037', '64 MiB', '4.7 GiB')")
    value = float(m.group(1))
    unit = m.group(2).upper() if m.group(2) else None
    result = value * _SIZE_UNITS[unit]
    if result != int(result) and unit is None:
        raise ValueError(f"fractional byte count {text!r}")
    return round(result)


# --- input generation -----------------------------------------------------

_ALPHABET = np.frombuffer(bytes(range(33, 127)), dtype=np.uint8)
_MIX = np.uint64(2654435761)
_WRITE_CHUNK = 8 * MiB


def generate_input(path: str | Path, size_bytes: int, record_width: int) -> Path:
    """Write a text file of exactly ``size_bytes`` deterministic bytes.

    Records are ``record_width`` bytes: ``record_width - 1`` printable bytes
    derived from the absolute file offset, then a newline. A final partial
    record is cut at the size limit. Pure function of (size, width), so two
    invocations anywhere produce byte-identical files.
    """
    if size_bytes <= 0:
        raise ValueError("size_bytes must be positive")
    if record_width < 2:
        raise ValueError("record_width must be at least 2 (payload byte + newline)")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as fh:
            for start in range(0, size_bytes, _WRITE_CHUNK):
                n = min(_WRITE_CHUNK, size_bytes - start)
                offsets = np.arange(start, start + n, dtype=np.uint64)
                mixed = (offsets * _MIX) >> np.uint64(7)
                payload = _ALPHABET[(mixed % np.uint64(len(_ALPHABET))).astype(np.intp)]
                block = np.where(offsets % np.uint64(record_width) == np.uint64(record_width - 1),
                                 np.uint8(ord("\n")), payload)
                fh.write(block.tobytes())
    except OSError as exc:
        if exc.errno == errno.ENOSPC:
            raise DiskFull(f"out of space writing {path}") from exc
        raise PathNotWritable(f"cannot write {path}: {exc}") from exc
    return path


# --- external compilation -------------------------------------------------


class Target(Enum):
    WASM = "wasm"
    NATIVE = "native"


@dataclass(frozen=True)
class CompiledArtifact:
    path: str
    command: str


_CASE_SOURCES = {
    WorkloadKind.FREAD: "fread_case.c",
    WorkloadKind.FWRITE: "fwrite_case.c",
    WorkloadKind.FSEEK: "fseek_case.c",
    WorkloadKind.OPENCLOSE: "openclose_case.c",
}


def case_source(kind: WorkloadKind) -> Path:
    """Path of the bundled C source for a workload kind."""
    return Path(str(resources.files("ewapa") / "cases" / _CASE_SOURCES[kind]))


def compile_case(
    spec: WorkloadSpec,
    target: Target,
    toolchain_config: dict[str, str],
    out_dir: str | Path | None = None,
) -> CompiledArtifact:
    """Invoke the configured external compiler for one test program.

    ``toolchain_config`` maps target name to a command template with
    ``{src}`` and ``{out}`` slots, e.g.
    ``clang --target=wasm32-wasi -O3 {src} -o {out}``.
    """
    template = toolchain_config.get(target.value)
    if not template:
        raise ToolchainMissing(f"no compiler command template for target {target.value!r}")
    src = Path(spec.source_path) if spec.source_path else case_source(spec.kind)
    out_dir = Path(out_dir) if out_dir is not None else src.parent
    suffix = ".wasm" if target is Target.WASM else ""
    out = out_dir / (src.stem + suffix)
    command = template.format(src=src, out=out)
    try:
        proc = subprocess.run(shlex.split(command), capture_output=True, text=True)
    except FileNotFoundError as exc:
        raise ToolchainMissing(f"compiler not found: {exc.filename}") from exc
    if proc.returncode != 0:
        raise CompileFailed(command, proc.stderr or proc.stdout)
    return CompiledArtifact(path=str(out), command=command)


# --- matrix planning ------------------------------------------------------


@dataclass(frozen=True)
class WorkloadPlan:
    kind: WorkloadKind
    sizes: tuple[int, ...]
    chunk_bytes: int = DEFAULT_CHUNK_BYTES
    record_width: int = DEFAULT_RECORD_WIDTH
    loop_count: int = DEFAULT_LOOP_COUNT


@dataclass(frozen=True)
class MatrixConfig:
    runtimes: tuple[str, ...]
    workloads: tuple[WorkloadPlan, ...]
    reps: int = DEFAULT_REPS
    backend: str = "live"
    log_dir: str = ""
    toolchains: dict[str, str] = field(default_factory=dict)


def full_scale_config(runtimes: tuple[str, ...]) -> MatrixConfig:
    """Full-scale matrix: read {1,10,100} GiB, write {48 MiB, 4.7/11/99 GiB},
    seek on 1 GiB, open/close on 4.7 GiB, 50-iteration auxiliary loops."""
    return MatrixConfig(
        runtimes=runtimes,
        workloads=(
            WorkloadPlan(WorkloadKind.FREAD, FREAD_SIZES),
            WorkloadPlan(WorkloadKind.FWRITE, FWRITE_SIZES, chunk_bytes=DEFAULT_RECORD_WIDTH),
            WorkloadPlan(WorkloadKind.FSEEK, (FSEEK_SIZE,)),
            WorkloadPlan(WorkloadKind.OPENCLOSE, (OPENCLOSE_SIZE,)),
        ),
    )


def desk_default_config(runtimes: tuple[str, ...]) -> MatrixConfig:
    return MatrixConfig(
        runtimes=runtimes,
        workloads=(
            WorkloadPlan(WorkloadKind.FREAD, DESK_SIZES),
            WorkloadPlan(WorkloadKind.FWRITE, DESK_SIZES, chunk_bytes=DEFAULT_RECORD_WIDTH),
            WorkloadPlan(WorkloadKind.FSEEK, (DESK_SIZES[0],)),
            WorkloadPlan(WorkloadKind.OPENCLOSE, (DESK_SIZES[0],)),
        ),
    )


def load_matrix_config(path: str | Path) -> MatrixConfig:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(str(exc), path=str(path), line=mark.line + 1 if mark else None) from exc
    if not isinstance(doc, dict):
        raise ParseError("matrix config must be a mapping", path=str(path))
    try:
        workloads = tuple(
            WorkloadPlan(
                kind=WorkloadKind(w["kind"]),
                sizes=tuple(parse_size(s) for s in w["sizes"]),
                chunk_bytes=parse_size(w.get("chunk_bytes", DEFAULT_CHUNK_BYTES)),
                record_width=int(w.get("record_width", DEFAULT_RECORD_WIDTH)),
                loop_count=int(w.get("loop_count", DEFAULT_LOOP_COUNT)),
            )
            for w in doc.get("workloads", [])
        )
        config = MatrixConfig(
            runtimes=tuple(doc.get("runtimes", [])),
            workloads=workloads,
            reps=int(doc.get("reps", DEFAULT_REPS)),
            backend=str(doc.get("backend", "live")),
            log_dir=str(doc.get("log_dir", "")),
            toolchains=dict(doc.get("toolchains", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed matrix config: {exc}", path=str(path)) from exc
    return config


def plan_matrix(config: MatrixConfig) -> list[tuple[str, WorkloadSpec]]:
    """Cartesian product runtimes x kinds x sizes, in declaration order."""
    if not config.runtimes:
        raise EmptyConfig("matrix config lists no runtimes")
    if not config.workloads:
        raise EmptyConfig("matrix config lists no workloads")
    cells = []
    for runtime in config.runtimes:
        for plan in config.workloads:
            for size in plan.sizes:
                cells.append(
                    (
                        runtime,
                        WorkloadSpec(
                            kind=plan.kind,
                            file_size_bytes=size,
                            chunk_bytes=plan.chunk_bytes,
                            loop_count=plan.loop_count,
                        ),
                    )
                )
    return cells


# --- cell execution -------------------------------------------------------


@dataclass(frozen=True)
class ReplayBackend:
    """Re-run the pipeline over recorded event logs instead of tracing."""

    log_source: str | Path


@dataclass(frozen=True)
class LiveBackend:
    """Trace freshly spawned processes; needs root and a BCC install."""

    work_dir: str | Path
    toolchains: dict[str, str] = field(default_factory=dict)
    timeout_s: float = 3600.0
    accumulate: bool = False


_REP_RE = re.compile(r"__rep(\d+)\.log$")


def _rep_ordinal(path: Path) -> int:
    m = _REP_RE.search(path.name)
    return int(m.group(1)) if m else 0


def cell_log_name(spec: WorkloadSpec, rep: int) -> str:
    return f"{spec.kind.value}__{spec.file_size_bytes}__rep{rep}.log"


def run_cell(
    profile: RuntimeProfile,
    spec: WorkloadSpec,
    reps: int,
    backend: ReplayBackend | LiveBackend,
) -> tuple[SessionResult, dict]:
    """Execute one runtime x workload cell; returns the result and its
    manifest (commands, log paths, input hashes, wall-clock timestamp)."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if isinstance(backend, ReplayBackend):
        return _run_replay(profile, spec, reps, backend)
    return _run_live(profile, spec, reps, backend)


def _run_replay(
    profile: RuntimeProfile, spec: WorkloadSpec, reps: int, backend: ReplayBackend
) -> tuple[SessionResult, dict]:
    source = Path(backend.log_source)
    if source.is_dir():
        pattern = f"{spec.kind.value}__{spec.file_size_bytes}__rep*.log"
        logs = sorted(source.glob(pattern), key=_rep_ordinal)
    else:
        logs = [source]
    if len(logs) < reps:
        raise ReplayLogMissing(
            f"need {reps} recorded log(s) for {spec.kind.value}@{spec.file_size_bytes} "
            f"under {source}, found {len(logs)}"
        )
    records = [replay_repetition(log, profile) for log in logs[:reps]]
    result = SessionResult.from_repetitions(profile.name, spec, records)
    manifest = _manifest(
        profile,
        spec,
        command="",
        compile_commands=[],
        inputs={str(p): _sha256(p) for p in logs[:reps]},
        logs=[str(p) for p in logs[:reps]],
    )
    return result, manifest


def replay_repetition(log_path: str | Path, profile: RuntimeProfile) -> RepetitionRecord:
    """One repetition from one recorded log: scope to the traced process,
    pair intervals, and take the log's time span as the total."""
    events = read_event_log(log_path)
    scoped = filter_process(events, profile.comm_filter) if profile.comm_filter else events
    metrics, diag = pair_intervals(scoped)
    total = max((ev.ts_ns for ev in scoped), default=0) - min((ev.ts_ns for ev in scoped), default=0)
    try:
        startup = compute_startup(events, profile)
    except PipelineError:
        startup = None
    return RepetitionRecord(
        total_ns=total,
        startup_ns=startup,
        metrics=metrics,
        unmatched_entries=diag.unmatched_entries,
        orphan_exits=diag.orphan_exits,
    )


def _run_live(
    profile: RuntimeProfile, spec: WorkloadSpec, reps: int, backend: LiveBackend
) -> tuple[SessionResult, dict]:
    from . import collector

    work_dir = Path(backend.work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    compile_commands: list[str] = []
    spec = _ensure_artifacts(profile, spec, backend, compile_commands)
    if not profile.binary_path:
        # The native control hooks libc symbols inside the compiled case
        # binary itself, so the profile only learns its uprobe target now.
        from dataclasses import replace

        profile = replace(profile, binary_path=spec.native_binary)
    input_path, command = _render_command(profile, spec, work_dir)
    records: list[RepetitionRecord] = []
    log_paths: list[str] = []
    for rep in range(1, reps + 1):
        handle = collector.attach(profile, accumulate=backend.accumulate)
        try:
            capture = collector.run_and_collect(handle, command, timeout_s=backend.timeout_s)
        finally:
            collector.detach(handle)
        if backend.accumulate:
            # Kernel-side pairing: no event stream to log or re-pair, and no
            # startup interval (the init/load markers are entry-only probes).
            records.append(
                RepetitionRecord(
                    total_ns=capture.wall_ns,
                    startup_ns=None,
                    metrics=capture.accumulated or {},
                    orphan_exits=capture.kernel_orphans,
                )
            )
            continue
        log_path = work_dir / cell_log_name(spec, rep)
        write_event_log(capture.events, log_path, comments=[f"cell {profile.name} {command}"])
        log_paths.append(str(log_path))
        metrics, diag = pair_intervals(capture.events)
        try:
            startup = compute_startup(capture.events, profile)
        except PipelineError:
            startup = None
        records.append(
            RepetitionRecord(
                total_ns=capture.wall_ns,
                startup_ns=startup,
                metrics=metrics,
                unmatched_entries=diag.unmatched_entries,
                orphan_exits=diag.orphan_exits,
            )
        )
    result = SessionResult.from_repetitions(profile.name, spec, records)
    manifest = _manifest(
        profile,
        spec,
        command=command,
        compile_commands=compile_commands,
        inputs={str(input_path): _sha256(input_path)},
        logs=log_paths,
    )
    return result, manifest


def _ensure_artifacts(
    profile: RuntimeProfile, spec: WorkloadSpec, backend: LiveBackend, compile_commands: list[str]
) -> WorkloadSpec:
    """Compile the test program for the profile's target if not supplied."""
    from dataclasses import replace

    work_dir = Path(backend.work_dir)
    if profile.name == "native":
        if not spec.native_binary:
            artifact = compile_case(spec, Target.NATIVE, backend.toolchains, out_dir=work_dir)
            compile_commands.append(artifact.command)
            spec = replace(spec, native_binary=artifact.path)
    elif not spec.wasm_module:
        artifact = compile_case(spec, Target.WASM, backend.toolchains, out_dir=work_dir)
        compile_commands.append(artifact.command)
        spec = replace(spec, wasm_module=artifact.path)
    return spec


def _render_command(
    profile: RuntimeProfile, spec: WorkloadSpec, work_dir: Path
) -> tuple[Path, str]:
    """Generate the input file the workload needs and build the launch line."""
    if spec.kind is WorkloadKind.FWRITE:
        input_path = work_dir / f"records_{DEFAULT_RECORD_WIDTH}.txt"
        if not input_path.exists():
            generate_input(input_path, 17 * DEFAULT_RECORD_WIDTH, DEFAULT_RECORD_WIDTH)
        args = f"{input_path} {work_dir / 'out.bin'} {spec.file_size_bytes}"
    else:
        input_path = work_dir / f"input_{spec.file_size_bytes}.txt"
        if not input_path.exists():
            generate_input(input_path, spec.file_size_bytes, DEFAULT_RECORD_WIDTH)
        if spec.kind is WorkloadKind.FREAD:
            args = f"{input_path} {spec.chunk_bytes}"
        else:
            args = f"{input_path} {spec.loop_count}"
    module = spec.native_binary if profile.name == "native" else spec.wasm_module
    command = profile.command_template.format(
        binary=profile.binary_path, module=module, args=args
    )
    return input_path, command


def _manifest(
    profile: RuntimeProfile,
    spec: WorkloadSpec,
    command: str,
    compile_commands: list[str],
    inputs: dict[str, str],
    logs: list[str],
) -> dict:
    return {
        "runtime": profile.name,
        "profile": profile_to_dict(profile),
        "workload": {
            "kind": spec.kind.value,
            "file_size_bytes": spec.file_size_bytes,
            "chunk_bytes": spec.chunk_bytes,
            "loop_count": spec.loop_count,
        },
        "command": command,
        "compile_commands": compile_commands,
        "input_sha256": inputs,
        "event_logs": logs,
        "created_unix": time.time(),
    }


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()
