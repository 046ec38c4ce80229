/**
 * Serializes drained per-event records into the ewapa/1 event log format,
 * the line-delimited JSON the analysis CLI replays. Probe indices are a
 * kernel-side detail; the log speaks in probe names and I/O classes, so an
 * emitting caller supplies one binding per trampoline index.
 */

import { writeFileSync } from "fs";

import { RawEvent } from "./layout";

export const FORMAT_TAG = "ewapa/1";

export type EventClassName =
  | "read"
  | "write"
  | "seek"
  | "open"
  | "close"
  | "init"
  | "load";

export interface ProbeBinding {
  /** Trampoline index, as carried in the binary records. */
  index: number;
  /** Probe name written to the log (typically the hooked symbol). */
  probe: string;
  eventClass: EventClassName;
}

// JSON numbers above 2^53-1 would silently lose nanoseconds on the
// consuming side, so refuse to emit them.
const MAX_SAFE = BigInt(Number.MAX_SAFE_INTEGER);

export function formatEventLog(
  events: RawEvent[],
  bindings: ProbeBinding[],
  comments: string[] = [],
): string {
  const byIndex = new Map<number, ProbeBinding>();
  for (const binding of bindings) {
    if (byIndex.has(binding.index)) {
      throw new RangeError(`duplicate binding for probe index ${binding.index}`);
    }
    byIndex.set(binding.index, binding);
  }
  const lines = [`# format: ${FORMAT_TAG}`];
  for (const comment of comments) {
    if (comment.includes("\n")) {
      throw new RangeError("comments must be single lines");
    }
    lines.push(`# ${comment}`);
  }
  for (const ev of events) {
    const binding = byIndex.get(ev.probe);
    if (!binding) {
      throw new RangeError(`no binding for probe index ${ev.probe}`);
    }
    if (ev.tsNs > MAX_SAFE) {
      throw new RangeError(`timestamp ${ev.tsNs} exceeds the safe JSON integer range`);
    }
    // Key order is part of the format; object literal order carries it.
    lines.push(
      JSON.stringify({
        ts: Number(ev.tsNs),
        pid: ev.pid,
        tid: ev.tid,
        comm: ev.comm,
        probe: binding.probe,
        class: binding.eventClass,
        kind: ev.kind,
        space: ev.space,
      }),
    );
  }
  return lines.join("\n") + "\n";
}

export function writeEventLog(
  path: string,
  events: RawEvent[],
  bindings: ProbeBinding[],
  comments: string[] = [],
): void {
  writeFileSync(path, formatEventLog(events, bindings, comments), "utf8");
}
