/**
 * Userland reference implementation of the probe program's control flow.
 *
 * `onEntry`/`onExit` follow handle_entry/handle_exit in the C source
 * branch for branch: the same comm prefix filter, the same per-(tid, probe)
 * depth counter with the 16-level cap, the same dropped/orphan counters,
 * and the same min/max/count/total accumulator updates. Per-event mode
 * models the perf ring as a bounded queue so lost-record accounting can be
 * exercised without a kernel.
 *
 * u64 map values stay bigint throughout; timestamps wrap like the kernel's
 * would rather than losing precision in doubles.
 */

import {
  AccumulatorRecord,
  MAX_DEPTH,
  RawEvent,
  decodeEvent,
  encodeEvent,
} from "./layout";

/** What bpf_get_current_* would report at the moment a probe fires. */
export interface FireContext {
  tsNs: bigint;
  pid: number;
  tid: number;
  comm: string;
}

export interface SimulatorOptions {
  /** Empty string disables filtering, mirroring FILTER_ENABLED 0. */
  commFilter?: string;
  /** Pair in the "kernel" instead of emitting per-event records. */
  accumulate?: boolean;
  /**
   * Per-event mode only: capacity of the modeled perf ring. Records pushed
   * while the ring is full are counted as lost, exactly once each.
   */
  ringCapacity?: number;
}

const U64_MASK = (1n << 64n) - 1n;

function lifoKey(tid: number, probe: number, depth: number): string {
  return `${tid}:${probe}:${depth}`;
}

function depthKey(tid: number, probe: number): string {
  return `${tid}:${probe}`;
}

export class ProbeProgram {
  private readonly commFilter: string;
  private readonly accumulate: boolean;
  private readonly ringCapacity: number;

  private readonly entryTs = new Map<string, bigint>();
  private readonly depths = new Map<string, number>();
  private readonly accum = new Map<number, AccumulatorRecord>();
  private readonly ring: Uint8Array[] = [];

  private droppedCount = 0n;
  private orphanCount = 0n;
  private lostCount = 0n;

  constructor(options: SimulatorOptions = {}) {
    this.commFilter = options.commFilter ?? "";
    this.accumulate = options.accumulate ?? false;
    this.ringCapacity = options.ringCapacity ?? Number.POSITIVE_INFINITY;
    if (this.ringCapacity < 1) {
      throw new RangeError(`ring capacity must be at least 1, got ${this.ringCapacity}`);
    }
    if (this.commFilter.length > 15) {
      throw new RangeError(`comm filter exceeds 15 bytes: ${this.commFilter}`);
    }
  }

  /** dropped: depth-cap hits at entry. orphans: exits without an entry. */
  get counters(): { dropped: bigint; orphans: bigint; lost: bigint } {
    return { dropped: this.droppedCount, orphans: this.orphanCount, lost: this.lostCount };
  }

  onEntry(probe: number, space: "user" | "kernel", ctx: FireContext): void {
    if (!this.commAllowed(ctx.comm)) return;
    const ts = ctx.tsNs & U64_MASK;
    if (this.accumulate) {
      const dk = depthKey(ctx.tid, probe);
      const depth = this.depths.get(dk) ?? 0;
      if (depth >= MAX_DEPTH) {
        this.droppedCount += 1n;
        return;
      }
      this.entryTs.set(lifoKey(ctx.tid, probe, depth), ts);
      this.depths.set(dk, depth + 1);
      return;
    }
    this.submit(probe, "entry", space, ts, ctx);
  }

  onExit(probe: number, space: "user" | "kernel", ctx: FireContext): void {
    if (!this.commAllowed(ctx.comm)) return;
    const ts = ctx.tsNs & U64_MASK;
    if (this.accumulate) {
      const dk = depthKey(ctx.tid, probe);
      const depth = this.depths.get(dk);
      if (depth === undefined || depth === 0) {
        this.orphanCount += 1n;
        return;
      }
      const popped = depth - 1;
      this.depths.set(dk, popped);
      const lk = lifoKey(ctx.tid, probe, popped);
      const entry = this.entryTs.get(lk);
      if (entry === undefined) {
        this.orphanCount += 1n;
        return;
      }
      const delta = (ts - entry) & U64_MASK;
      this.entryTs.delete(lk);
      const acc = this.accum.get(probe) ?? { count: 0n, totalNs: 0n, minNs: 0n, maxNs: 0n };
      if (acc.count === 0n || delta < acc.minNs) acc.minNs = delta;
      if (delta > acc.maxNs) acc.maxNs = delta;
      acc.count = (acc.count + 1n) & U64_MASK;
      acc.totalNs = (acc.totalNs + delta) & U64_MASK;
      this.accum.set(probe, acc);
      return;
    }
    this.submit(probe, "exit", space, ts, ctx);
  }

  /** Pop every record currently in the ring, oldest first. */
  drain(): RawEvent[] {
    const out = this.ring.map((raw) => decodeEvent(raw));
    this.ring.length = 0;
    return out;
  }

  /** Snapshot of the per-probe accumulators (accumulation mode). */
  readAccumulators(): Map<number, AccumulatorRecord> {
    const out = new Map<number, AccumulatorRecord>();
    for (const [probe, acc] of this.accum) {
      out.set(probe, { ...acc });
    }
    return out;
  }

  private commAllowed(comm: string): boolean {
    if (!this.commFilter) return true;
    // The C loop compares exactly the filter's bytes, so this is a prefix
    // match against the (already 15-byte-capped) task comm.
    return comm.startsWith(this.commFilter);
  }

  private submit(
    probe: number,
    kind: "entry" | "exit",
    space: "user" | "kernel",
    ts: bigint,
    ctx: FireContext,
  ): void {
    if (this.ring.length >= this.ringCapacity) {
      this.lostCount += 1n;
      return;
    }
    // Round-trip through the wire format so layout mistakes surface here,
    // not only in the separate codec tests.
    this.ring.push(
      encodeEvent({
        tsNs: ts,
        pid: ctx.pid,
        tid: ctx.tid,
        comm: ctx.comm.slice(0, 15),
        probe,
        kind,
        space,
      }),
    );
  }
}
