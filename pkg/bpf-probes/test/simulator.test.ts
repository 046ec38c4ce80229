import { describe, expect, it } from "vitest";

import { MAX_DEPTH } from "../src/layout";
import { ProbeProgram } from "../src/simulator";
import { buildNestedWorkload, replayFires, rng } from "./support";

const ctx = (tsNs: bigint, overrides: Partial<{ pid: number; tid: number; comm: string }> = {}) => ({
  tsNs,
  pid: overrides.pid ?? 7,
  tid: overrides.tid ?? 7,
  comm: overrides.comm ?? "wasmtime",
});

describe("comm filter", () => {
  it("passes a matching comm through", () => {
    const sim = new ProbeProgram({ commFilter: "wasmtime" });
    sim.onEntry(0, "user", ctx(10n));
    expect(sim.drain()).toHaveLength(1);
  });

  it("silences foreign processes entirely", () => {
    const sim = new ProbeProgram({ commFilter: "wasmtime", accumulate: true });
    sim.onEntry(0, "user", ctx(10n, { comm: "bash" }));
    sim.onExit(0, "user", ctx(20n, { comm: "bash" }));
    expect(sim.readAccumulators().size).toBe(0);
    // Not even the orphan counter moves: the filter runs before any map.
    expect(sim.counters.orphans).toBe(0n);
  });

  it("matches on the filter-length prefix, like the fixed-width kernel comm", () => {
    const sim = new ProbeProgram({ commFilter: "wasm" });
    sim.onEntry(0, "user", ctx(10n, { comm: "wasmtime" }));
    expect(sim.drain()).toHaveLength(1);
  });
});

describe("per-event mode", () => {
  it("emits one record per fire, through the binary wire format", () => {
    const sim = new ProbeProgram();
    sim.onEntry(3, "kernel", ctx(100n, { pid: 10, tid: 11 }));
    sim.onExit(3, "kernel", ctx(250n, { pid: 10, tid: 11 }));
    const records = sim.drain();
    expect(records).toEqual([
      { tsNs: 100n, pid: 10, tid: 11, comm: "wasmtime", probe: 3, kind: "entry", space: "kernel" },
      { tsNs: 250n, pid: 10, tid: 11, comm: "wasmtime", probe: 3, kind: "exit", space: "kernel" },
    ]);
    expect(sim.drain()).toHaveLength(0);
  });

  it("counts records lost to a full ring, once each", () => {
    const sim = new ProbeProgram({ ringCapacity: 3 });
    for (let i = 0; i < 5; i++) sim.onEntry(0, "user", ctx(BigInt(i + 1)));
    expect(sim.counters.lost).toBe(2n);
    expect(sim.drain()).toHaveLength(3);
    sim.onEntry(0, "user", ctx(99n));
    expect(sim.drain()).toHaveLength(1);
    expect(sim.counters.lost).toBe(2n);
  });

  it("truncates comm to the kernel's 15 visible bytes", () => {
    const sim = new ProbeProgram();
    sim.onEntry(0, "user", ctx(10n, { comm: "a".repeat(20) }));
    expect(sim.drain()[0]!.comm).toBe("a".repeat(15));
  });
});

describe("accumulation mode", () => {
  it("one pair: count 1, total delta, min = max = delta", () => {
    const sim = new ProbeProgram({ accumulate: true });
    sim.onEntry(4, "user", ctx(1_000n));
    sim.onExit(4, "user", ctx(1_750n));
    expect(sim.readAccumulators().get(4)).toEqual({
      count: 1n,
      totalNs: 750n,
      minNs: 750n,
      maxNs: 750n,
    });
    expect(sim.counters).toEqual({ dropped: 0n, orphans: 0n, lost: 0n });
  });

  it("an exit with no entry only bumps the orphan counter", () => {
    const sim = new ProbeProgram({ accumulate: true });
    sim.onExit(4, "user", ctx(1_000n));
    expect(sim.counters.orphans).toBe(1n);
    expect(sim.readAccumulators().size).toBe(0);
  });

  it("drops the 17th nested entry and keeps the other 16 pairable", () => {
    const sim = new ProbeProgram({ accumulate: true });
    for (let i = 0; i < MAX_DEPTH + 1; i++) {
      sim.onEntry(0, "user", ctx(BigInt(i + 1)));
    }
    expect(sim.counters.dropped).toBe(1n);
    for (let i = 0; i < MAX_DEPTH; i++) {
      sim.onExit(0, "user", ctx(BigInt(100 + i)));
    }
    const acc = sim.readAccumulators().get(0)!;
    expect(acc.count).toBe(BigInt(MAX_DEPTH));
    // The dropped entry left nothing behind: one more exit is an orphan.
    sim.onExit(0, "user", ctx(500n));
    expect(sim.counters.orphans).toBe(1n);
    expect(sim.readAccumulators().get(0)!.count).toBe(BigInt(MAX_DEPTH));
  });

  it("pairs LIFO within a (tid, probe) key: recursion nests correctly", () => {
    const sim = new ProbeProgram({ accumulate: true });
    sim.onEntry(0, "user", ctx(10n));
    sim.onEntry(0, "user", ctx(20n)); // recursive call
    sim.onExit(0, "user", ctx(110n)); // closes the inner interval: 90
    sim.onExit(0, "user", ctx(130n)); // closes the outer interval: 120
    const acc = sim.readAccumulators().get(0)!;
    expect(acc.count).toBe(2n);
    expect(acc.minNs).toBe(90n);
    expect(acc.maxNs).toBe(120n);
    expect(acc.totalNs).toBe(210n);
  });

  it("keeps threads independent", () => {
    const sim = new ProbeProgram({ accumulate: true });
    sim.onEntry(0, "user", ctx(10n, { tid: 1 }));
    sim.onEntry(0, "user", ctx(15n, { tid: 2 }));
    sim.onExit(0, "user", ctx(30n, { tid: 1 }));
    sim.onExit(0, "user", ctx(40n, { tid: 2 }));
    const acc = sim.readAccumulators().get(0)!;
    expect(acc.count).toBe(2n);
    expect(acc.minNs).toBe(20n);
    expect(acc.maxNs).toBe(25n);
  });
});

describe("cross-checks on generated workloads", () => {
  const PROBES = [
    { index: 0, space: "user" as const },
    { index: 1, space: "kernel" as const },
    { index: 2, space: "user" as const },
  ];

  it("accumulators equal construction-time bookkeeping exactly", () => {
    for (let seed = 1; seed <= 20; seed++) {
      const workload = buildNestedWorkload(rng(seed * 7919), {
        probes: PROBES,
        maxPairs: 100 + seed * 60,
      });
      const sim = new ProbeProgram({ accumulate: true });
      replayFires(workload.fires, sim);
      expect(sim.counters.dropped).toBe(0n);
      expect(sim.counters.orphans).toBe(0n);
      const accs = sim.readAccumulators();
      for (const [probe, durations] of workload.expected) {
        const acc = accs.get(probe)!;
        expect(acc.count).toBe(BigInt(durations.length));
        expect(acc.totalNs).toBe(durations.reduce((a, b) => a + b, 0n));
        expect(acc.minNs).toBe(durations.reduce((a, b) => (b < a ? b : a)));
        expect(acc.maxNs).toBe(durations.reduce((a, b) => (b > a ? b : a)));
      }
      expect([...accs.keys()].sort()).toEqual([...workload.expected.keys()].sort());
    }
  });

  it("per-event mode preserves every fire in order", () => {
    const workload = buildNestedWorkload(rng(424242), { probes: PROBES, maxPairs: 400 });
    const sim = new ProbeProgram();
    replayFires(workload.fires, sim);
    const records = sim.drain();
    expect(records).toHaveLength(workload.fires.length);
    expect(records).toHaveLength(workload.pairs * 2);
    records.forEach((record, i) => {
      const fire = workload.fires[i]!;
      expect(record.probe).toBe(fire.probe);
      expect(record.kind).toBe(fire.kind);
      expect(record.space).toBe(fire.space);
      expect(record.tsNs).toBe(fire.ctx.tsNs);
      expect(record.tid).toBe(fire.ctx.tid);
    });
  });
});
