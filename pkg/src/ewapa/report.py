"""Persistence formats: event logs, session results, metrics CSV, findings,
and the self-contained HTML report.

Every emitter is a deterministic function of its input (runtimes sorted
alphabetically, classes in enum order, probes alphabetically), so replaying
the same logs twice yields byte-identical outputs. Log and session files
carry a ``# format: ewapa/1`` / ``"format": "ewapa/1"`` marker.
"""

from __future__ import annotations

import base64
import csv
import html
import io
import json
from pathlib import Path
from typing import Sequence

from .errors import ParseError, PathNotWritable, UnknownClass, UnknownKind
from .model import (
    IO_CLASSES,
    AnomalyFinding,
    AnomalyKind,
    EventClass,
    EventKind,
    IntervalMetric,
    ProbeSpace,
    RepetitionRecord,
    SessionResult,
    TraceEvent,
    WorkloadKind,
    WorkloadSpec,
)

FORMAT_TAG = "ewapa/1"

_KIND_VALUES = {k.value for k in EventKind}
_CLASS_VALUES = {c.value for c in EventClass}
_SPACE_VALUES = {s.value for s in ProbeSpace}


# --- event logs -----------------------------------------------------------


def write_event_log(stream: Sequence[TraceEvent], path: str | Path, comments: Sequence[str] = ()) -> None:
    lines = [f"# format: {FORMAT_TAG}"]
    for comment in comments:
        lines.append("# " + comment)
    for ev in stream:
        record = {
            "ts": ev.ts_ns,
            "pid": ev.pid,
            "tid": ev.tid,
            "comm": ev.comm,
            "probe": ev.probe_id,
            "class": ev.event_class.value,
            "kind": ev.kind.value,
            "space": ev.space.value,
        }
        if ev.size_bytes is not None:
            record["size"] = ev.size_bytes
        lines.append(json.dumps(record, separators=(",", ":")))
    _write_text(path, "\n".join(lines) + "\n")


def read_event_log(path: str | Path) -> list[TraceEvent]:
    path = Path(path)
    events: list[TraceEvent] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"not a JSON object: {exc.msg}", path=str(path), line=lineno) from exc
            events.append(_event_from_record(record, path=str(path), lineno=lineno))
    return events


def _event_from_record(record: dict, *, path: str, lineno: int) -> TraceEvent:
    if not isinstance(record, dict):
        raise ParseError("event line must be an object", path=path, line=lineno)
    for key in ("ts", "pid", "tid", "comm", "probe", "class", "kind", "space"):
        if key not in record:
            raise ParseError(f"missing key {key!r}", path=path, line=lineno, field=key)
    kind = record["kind"]
    if kind not in _KIND_VALUES:
        raise UnknownKind(f"unknown event kind {kind!r}", path=path, line=lineno, field="kind")
    cls = record["class"]
    if cls not in _CLASS_VALUES:
        raise UnknownClass(f"unknown event class {cls!r}", path=path, line=lineno, field="class")
    space = record["space"]
    if space not in _SPACE_VALUES:
        raise ParseError(f"unknown probe space {space!r}", path=path, line=lineno, field="space")
    try:
        return TraceEvent(
            ts_ns=int(record["ts"]),
            pid=int(record["pid"]),
            tid=int(record["tid"]),
            comm=str(record["comm"]),
            probe_id=str(record["probe"]),
            event_class=EventClass.from_wire(cls),
            kind=EventKind(kind),
            space=ProbeSpace(space),
            size_bytes=int(record["size"]) if "size" in record and record["size"] is not None else None,
        )
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc), path=path, line=lineno) from exc


# --- session results ------------------------------------------------------


def session_to_dict(result: SessionResult) -> dict:
    return {
        "format": FORMAT_TAG,
        "runtime": result.runtime,
        "workload": {
            "kind": result.workload.kind.value,
            "file_size_bytes": result.workload.file_size_bytes,
            "chunk_bytes": result.workload.chunk_bytes,
            "loop_count": result.workload.loop_count,
            "source_path": result.workload.source_path,
            "wasm_module": result.workload.wasm_module,
            "native_binary": result.workload.native_binary,
        },
        "mean_total_ns": result.mean_total_ns,
        "stddev_total_ns": result.stddev_total_ns,
        "stddev_defined": result.stddev_defined,
        "repetitions": [
            {
                "total_ns": rep.total_ns,
                "startup_ns": rep.startup_ns,
                "unmatched_entries": rep.unmatched_entries,
                "orphan_exits": rep.orphan_exits,
                "metrics": [
                    {
                        "probe": m.probe_id,
                        "class": m.event_class.value,
                        "space": m.space.value,
                        "count": m.count,
                        "total_ns": m.total_ns,
                        "min_ns": m.min_ns,
                        "max_ns": m.max_ns,
                    }
                    for m in sorted(rep.metrics.values(), key=lambda m: m.probe_id)
                ],
            }
            for rep in result.repetitions
        ],
    }


def session_from_dict(doc: dict, *, source: str = "<memory>") -> SessionResult:
    try:
        workload = WorkloadSpec(
            kind=WorkloadKind(doc["workload"]["kind"]),
            file_size_bytes=doc["workload"]["file_size_bytes"],
            chunk_bytes=doc["workload"]["chunk_bytes"],
            loop_count=doc["workload"].get("loop_count", 50),
            source_path=doc["workload"].get("source_path", ""),
            wasm_module=doc["workload"].get("wasm_module", ""),
            native_binary=doc["workload"].get("native_binary", ""),
        )
        repetitions = tuple(
            RepetitionRecord(
                total_ns=rep["total_ns"],
                startup_ns=rep["startup_ns"],
                unmatched_entries=rep.get("unmatched_entries", 0),
                orphan_exits=rep.get("orphan_exits", 0),
                metrics={
                    m["probe"]: IntervalMetric(
                        probe_id=m["probe"],
                        event_class=EventClass.from_wire(m["class"]),
                        space=ProbeSpace(m["space"]),
                        count=m["count"],
                        total_ns=m["total_ns"],
                        min_ns=m["min_ns"],
                        max_ns=m["max_ns"],
                    )
                    for m in rep["metrics"]
                },
            )
            for rep in doc["repetitions"]
        )
        return SessionResult(
            runtime=doc["runtime"],
            workload=workload,
            repetitions=repetitions,
            mean_total_ns=doc["mean_total_ns"],
            stddev_total_ns=doc["stddev_total_ns"],
            stddev_defined=doc["stddev_defined"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed session document: {exc}", path=source) from exc


def session_filename(result: SessionResult) -> str:
    return f"{result.runtime}__{result.workload.kind.value}__{result.workload.file_size_bytes}.json"


def save_session(result: SessionResult, directory: str | Path) -> Path:
    directory = Path(directory)
    path = directory / session_filename(result)
    _write_text(path, json.dumps(session_to_dict(result), indent=2, sort_keys=True) + "\n")
    return path


def load_session(path: str | Path) -> SessionResult:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc.msg}", path=str(path), line=exc.lineno) from exc
    return session_from_dict(doc, source=str(path))


def load_sessions(directory: str | Path) -> list[SessionResult]:
    directory = Path(directory)
    paths = [p for p in sorted(directory.glob("*.json")) if not p.name.endswith(".manifest.json")]
    results = [load_session(p) for p in paths]
    results.sort(key=lambda r: (r.runtime, r.workload.kind.value, r.workload.file_size_bytes))
    return results


# --- metrics CSV ----------------------------------------------------------

CSV_HEADER = ["runtime", "workload", "file_size_bytes", "class", "space", "probe", "count", "total_ns", "avg_ns", "rep"]

_CLASS_ORDER = {cls: i for i, cls in enumerate(EventClass)}
_SPACE_ORDER = {ProbeSpace.USER: 0, ProbeSpace.KERNEL: 1}


def _avg_field(count: float, total: float) -> str:
    return str(round(total / count)) if count > 0 else ""


def emit_metrics_csv(results: Sequence[SessionResult], path: str | Path) -> None:
    """One row per (cell, repetition, probe), then mean and stddev rows.

    avg_ns is recomputed from the count and total fields as they appear in
    the row, so the count/total/avg consistency invariant holds even on
    aggregate rows where count and total are fractional.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for result in sorted(results, key=lambda r: (r.runtime, r.workload.kind.value, r.workload.file_size_bytes)):
        probes = _probe_index(result)
        base = [result.runtime, result.workload.kind.value, str(result.workload.file_size_bytes)]
        for rep_no, rep in enumerate(result.repetitions, start=1):
            for probe_id, (cls, space) in probes:
                metric = rep.metrics.get(probe_id)
                count = metric.count if metric else 0
                total = metric.total_ns if metric else 0
                writer.writerow(
                    base + [cls.value, space.value, probe_id, str(count), str(total), _avg_field(count, total), str(rep_no)]
                )
        n = len(result.repetitions)
        for probe_id, (cls, space) in probes:
            counts = [rep.metrics[probe_id].count if probe_id in rep.metrics else 0 for rep in result.repetitions]
            totals = [rep.metrics[probe_id].total_ns if probe_id in rep.metrics else 0 for rep in result.repetitions]
            mean_count = f"{sum(counts) / n:.3f}"
            mean_total = f"{sum(totals) / n:.3f}"
            writer.writerow(
                base + [cls.value, space.value, probe_id, mean_count, mean_total,
                        _avg_field(float(mean_count), float(mean_total)), "mean"]
            )
            sd_count = f"{_stddev(counts):.3f}"
            sd_total = f"{_stddev(totals):.3f}"
            writer.writerow(
                base + [cls.value, space.value, probe_id, sd_count, sd_total,
                        _avg_field(float(sd_count), float(sd_total)), "stddev"]
            )
    _write_text(path, buf.getvalue())


def _probe_index(result: SessionResult) -> list[tuple[str, tuple[EventClass, ProbeSpace]]]:
    """Union of probes across repetitions, ordered class-then-space-then-name."""
    seen: dict[str, tuple[EventClass, ProbeSpace]] = {}
    for rep in result.repetitions:
        for metric in rep.metrics.values():
            seen.setdefault(metric.probe_id, (metric.event_class, metric.space))
    return sorted(seen.items(), key=lambda kv: (_CLASS_ORDER[kv[1][0]], _SPACE_ORDER[kv[1][1]], kv[0]))


def _stddev(values: list[int]) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    mean = sum(values) / n
    return (sum((v - mean) ** 2 for v in values) / (n - 1)) ** 0.5


# --- findings -------------------------------------------------------------


def emit_findings(findings: Sequence[AnomalyFinding], path: str | Path) -> None:
    lines = []
    for finding in findings:
        lines.append(
            json.dumps(
                {
                    "kind": finding.kind.value,
                    "subject": finding.subject,
                    "threshold": finding.threshold,
                    "evidence": {k: finding.evidence[k] for k in sorted(finding.evidence)},
                    "message": finding.message,
                },
                separators=(",", ":"),
            )
        )
    _write_text(path, "".join(line + "\n" for line in lines))


def read_findings(path: str | Path) -> list[AnomalyFinding]:
    path = Path(path)
    findings: list[AnomalyFinding] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                doc = json.loads(line)
                findings.append(
                    AnomalyFinding(
                        kind=AnomalyKind(doc["kind"]),
                        subject=doc["subject"],
                        evidence=dict(doc["evidence"]),
                        threshold=doc["threshold"],
                        message=doc["message"],
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"malformed finding: {exc}", path=str(path), line=lineno) from exc
    return findings


# --- HTML report ----------------------------------------------------------

_STYLE = """
body { font-family: sans-serif; margin: 2em auto; max-width: 960px; color: #222; }
h1 { border-bottom: 2px solid #444; padding-bottom: 0.2em; }
h2 { margin-top: 2em; }
table { border-collapse: collapse; margin: 1em 0; }
th, td { border: 1px solid #999; padding: 0.3em 0.7em; text-align: right; }
th { background: #eee; }
td.name, th.name { text-align: left; }
.finding { margin: 0.5em 0; padding: 0.5em 0.8em; background: #fff3e0; border-left: 4px solid #e65100; }
.placeholder { color: #777; font-style: italic; }
img { max-width: 100%; }
"""


def emit_html_report(
    results: Sequence[SessionResult],
    findings: Sequence[AnomalyFinding],
    path: str | Path,
    figures: dict[str, bytes] | None = None,
) -> None:
    """Write a single static HTML file; figures are embedded as data URIs so
    the report opens offline with no external fetches."""
    if figures is None:
        from .figures import render_all_figures

        figures = render_all_figures(results)
    parts: list[str] = []
    parts.append("<!DOCTYPE html>")
    parts.append("<html><head><meta charset='utf-8'>")
    parts.append("<title>WASI I/O profile report</title>")
    parts.append(f"<style>{_STYLE}</style></head><body>")
    parts.append("<h1>WASI I/O profile report</h1>")
    parts.append(f"<p>format {FORMAT_TAG}; {len(results)} session cell(s), {len(findings)} finding(s).</p>")

    parts.append("<h2>Findings</h2>")
    if findings:
        for finding in findings:
            parts.append(
                "<div class='finding'><b>{kind}</b> [{subject}]: {message}</div>".format(
                    kind=html.escape(finding.kind.value),
                    subject=html.escape(finding.subject or "-"),
                    message=html.escape(finding.message),
                )
            )
    else:
        parts.append("<p class='placeholder'>no findings</p>")

    parts.append("<h2>Time proportions by class</h2>")
    any_fig = False
    for cls in IO_CLASSES:
        key = f"proportion_{cls.value}"
        if key in figures:
            any_fig = True
            parts.append(f"<h3>{cls.value}</h3>")
            parts.append(_img(figures[key], f"{cls.value} time proportions"))
    if not any_fig:
        parts.append("<p class='placeholder'>no data</p>")

    parts.append("<h2>Startup time</h2>")
    if "startup" in figures:
        parts.append(_img(figures["startup"], "startup time by runtime"))
    else:
        parts.append("<p class='placeholder'>no data</p>")

    parts.append("<h2>Growth trends</h2>")
    trend_keys = sorted(k for k in figures if k.startswith("trend_"))
    for key in trend_keys:
        parts.append(f"<h3>{html.escape(key.removeprefix('trend_'))}</h3>")
        parts.append(_img(figures[key], key))
    parts.append(_trend_tables(results))
    if not trend_keys:
        parts.append("<p class='placeholder'>no data</p>")

    parts.append("<h2>Session cells</h2>")
    parts.append(_session_table(results))

    parts.append("</body></html>")
    _write_text(path, "\n".join(parts) + "\n")


def _img(png: bytes, alt: str) -> str:
    encoded = base64.b64encode(png).decode("ascii")
    return f"<img alt='{html.escape(alt)}' src='data:image/png;base64,{encoded}'>"


def _session_table(results: Sequence[SessionResult]) -> str:
    if not results:
        return "<p class='placeholder'>no data</p>"
    rows = ["<table><tr><th class='name'>runtime</th><th class='name'>workload</th>"
            "<th>file size (bytes)</th><th>reps</th><th>mean total (ms)</th><th>stddev (ms)</th></tr>"]
    for r in sorted(results, key=lambda r: (r.runtime, r.workload.kind.value, r.workload.file_size_bytes)):
        sd = f"{r.stddev_total_ns / 1e6:.3f}" if r.stddev_defined else "n/a"
        rows.append(
            "<tr><td class='name'>{rt}</td><td class='name'>{wk}</td><td>{sz}</td>"
            "<td>{n}</td><td>{mean:.3f}</td><td>{sd}</td></tr>".format(
                rt=html.escape(r.runtime),
                wk=html.escape(r.workload.kind.value),
                sz=r.workload.file_size_bytes,
                n=len(r.repetitions),
                mean=r.mean_total_ns / 1e6,
                sd=sd,
            )
        )
    rows.append("</table>")
    return "".join(rows)


def _trend_tables(results: Sequence[SessionResult]) -> str:
    series: dict[tuple[str, str], list[tuple[int, float]]] = {}
    for r in results:
        series.setdefault((r.runtime, r.workload.kind.value), []).append(
            (r.workload.file_size_bytes, r.mean_total_ns)
        )
    rows: list[str] = []
    for (runtime, kind), points in sorted(series.items()):
        points.sort()
        if len(points) < 2:
            continue
        rows.append(f"<h4>{html.escape(runtime)} / {html.escape(kind)}</h4>")
        rows.append("<table><tr><th>file size (bytes)</th><th>mean total (ms)</th></tr>")
        for size, total in points:
            rows.append(f"<tr><td>{size}</td><td>{total / 1e6:.3f}</td></tr>")
        rows.append("</table>")
    return "".join(rows)


# --- shared plumbing ------------------------------------------------------


def _write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise PathNotWritable(f"cannot write {path}: {exc}") from exc


def write_bytes(path: str | Path, payload: bytes) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as exc:
        raise PathNotWritable(f"cannot write {path}: {exc}") from exc


def iter_log_paths(target: str | Path) -> list[Path]:
    """A single log file, or every ``*.log`` inside a directory, sorted."""
    target = Path(target)
    if target.is_dir():
        return sorted(target.glob("*.log"))
    return [target]


__all__ = [
    "FORMAT_TAG",
    "CSV_HEADER",
    "write_event_log",
    "read_event_log",
    "session_to_dict",
    "session_from_dict",
    "session_filename",
    "save_session",
    "load_session",
    "load_sessions",
    "emit_metrics_csv",
    "emit_findings",
    "read_findings",
    "emit_html_report",
    "write_bytes",
    "iter_log_paths",
]
