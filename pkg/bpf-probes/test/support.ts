/**
 * Deterministic workload generator for the simulator tests. Intervals are
 * recorded at construction time, so expected per-probe aggregates come from
 * bookkeeping that is independent of the pairing logic under test.
 */

import { FireContext } from "../src/simulator";

export interface Fire {
  probe: number;
  space: "user" | "kernel";
  kind: "entry" | "exit";
  ctx: FireContext;
}

export interface WorkloadProbe {
  index: number;
  space: "user" | "kernel";
}

export interface Workload {
  fires: Fire[];
  /** Probe index -> interval durations in creation order. */
  expected: Map<number, bigint[]>;
  pairs: number;
}

/** mulberry32: small, seedable, good enough for test-shape decisions. */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function buildNestedWorkload(
  rand: () => number,
  options: {
    probes: WorkloadProbe[];
    tids?: number[];
    pid?: number;
    comm?: string;
    maxPairs?: number;
    maxDepth?: number;
    maxChildren?: number;
  },
): Workload {
  const tids = options.tids ?? [101, 102, 103];
  const pid = options.pid ?? 4242;
  const comm = options.comm ?? "sim_case";
  const maxPairs = options.maxPairs ?? 200;
  const maxDepth = options.maxDepth ?? 4;
  const maxChildren = options.maxChildren ?? 3;
  const probes = options.probes;

  const fires: Fire[] = [];
  const expected = new Map<number, bigint[]>();
  let pairs = 0;

  const pick = () => probes[Math.floor(rand() * probes.length)]!;
  const small = () => BigInt(1 + Math.floor(rand() * 40));

  function interval(tid: number, t: bigint, depth: number): bigint {
    const probe = pick();
    pairs += 1;
    const entryTs = t;
    fires.push({
      probe: probe.index,
      space: probe.space,
      kind: "entry",
      ctx: { tsNs: entryTs, pid, tid, comm },
    });
    let inner = t + small();
    if (depth < maxDepth) {
      const children = Math.floor(rand() * (maxChildren + 1));
      for (let c = 0; c < children && pairs < maxPairs; c++) {
        inner = interval(tid, inner, depth + 1);
      }
    }
    const exitTs = inner + small();
    fires.push({
      probe: probe.index,
      space: probe.space,
      kind: "exit",
      ctx: { tsNs: exitTs, pid, tid, comm },
    });
    const bucket = expected.get(probe.index) ?? [];
    bucket.push(exitTs - entryTs);
    expected.set(probe.index, bucket);
    return exitTs + small();
  }

  for (const tid of tids) {
    let t = 1000n;
    while (pairs < maxPairs) {
      t = interval(tid, t, 1);
      if (tids.length > 1 && pairs >= maxPairs / tids.length && tid !== tids[tids.length - 1]) {
        break; // spread the budget over the remaining threads
      }
    }
  }
  return { fires, expected, pairs };
}

/** Pump every fire through a simulator callback pair in causal order. */
export function replayFires(
  fires: Fire[],
  sink: {
    onEntry(probe: number, space: "user" | "kernel", ctx: FireContext): void;
    onExit(probe: number, space: "user" | "kernel", ctx: FireContext): void;
  },
): void {
  for (const fire of fires) {
    if (fire.kind === "entry") sink.onEntry(fire.probe, fire.space, fire.ctx);
    else sink.onExit(fire.probe, fire.space, fire.ctx);
  }
}
