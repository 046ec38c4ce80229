import { endianness } from "os";
import { describe, expect, it } from "vitest";

import {
  ACCUMULATOR_OFFSETS,
  ACCUMULATOR_SIZE,
  COMM_SIZE,
  DEPTH_KEY_SIZE,
  EVENT_OFFSETS,
  EVENT_SIZE,
  LIFO_KEY_OFFSETS,
  LIFO_KEY_SIZE,
  RawEvent,
  decodeAccumulator,
  decodeEvent,
  decodeLifoKey,
  encodeAccumulator,
  encodeEvent,
  encodeLifoKey,
  hostLittleEndian,
} from "../src/layout";
import { rng } from "./support";

describe("struct sizes and offsets", () => {
  it("event record is 40 bytes with sequential natural-alignment offsets", () => {
    expect(EVENT_SIZE).toBe(40);
    expect(EVENT_OFFSETS).toEqual({
      ts: 0,
      pid: 8,
      tid: 12,
      comm: 16,
      probe: 32,
      kind: 36,
      space: 37,
      pad: 38,
    });
    expect(EVENT_OFFSETS.comm + COMM_SIZE).toBe(EVENT_OFFSETS.probe);
  });

  it("map records have no hidden padding", () => {
    expect(ACCUMULATOR_SIZE).toBe(32);
    expect(ACCUMULATOR_OFFSETS.maxNs + 8).toBe(ACCUMULATOR_SIZE);
    expect(LIFO_KEY_SIZE).toBe(12);
    expect(LIFO_KEY_OFFSETS).toEqual({ tid: 0, probe: 4, depth: 8 });
    expect(DEPTH_KEY_SIZE).toBe(8);
  });

  it("host endianness agrees with the os module", () => {
    expect(hostLittleEndian()).toBe(endianness() === "LE");
  });
});

describe("event codec", () => {
  const sample: RawEvent = {
    tsNs: 123_456_789_012n,
    pid: 4242,
    tid: 4243,
    comm: "wasmtime",
    probe: 7,
    kind: "entry",
    space: "user",
  };

  it("round-trips", () => {
    expect(decodeEvent(encodeEvent(sample))).toEqual(sample);
  });

  it("round-trips randomized records in both endiannesses", () => {
    const rand = rng(2024);
    for (let i = 0; i < 200; i++) {
      const ev: RawEvent = {
        tsNs: BigInt(Math.floor(rand() * 2 ** 52)) * 4096n + BigInt(Math.floor(rand() * 4096)),
        pid: Math.floor(rand() * 0x100000000),
        tid: Math.floor(rand() * 0x100000000),
        comm: "c".repeat(Math.floor(rand() * 16)),
        probe: Math.floor(rand() * 64),
        kind: rand() < 0.5 ? "entry" : "exit",
        space: rand() < 0.5 ? "user" : "kernel",
      };
      for (const le of [true, false]) {
        expect(decodeEvent(encodeEvent(ev, le), le)).toEqual(ev);
      }
    }
  });

  it("matches a hand-assembled buffer byte for byte", () => {
    const buf = new Uint8Array(EVENT_SIZE);
    const view = new DataView(buf.buffer);
    view.setBigUint64(0, 5000n, true);
    view.setUint32(8, 10, true);
    view.setUint32(12, 11, true);
    buf.set(new TextEncoder().encode("iwasm"), 16);
    view.setUint32(32, 3, true);
    view.setUint8(36, 1); // exit
    view.setUint8(37, 1); // kernel
    expect(decodeEvent(buf, true)).toEqual({
      tsNs: 5000n,
      pid: 10,
      tid: 11,
      comm: "iwasm",
      probe: 3,
      kind: "exit",
      space: "kernel",
    });
    expect(encodeEvent(decodeEvent(buf, true), true)).toEqual(buf);
  });

  it("big-endian encoding differs for multi-byte fields", () => {
    expect(encodeEvent(sample, true)).not.toEqual(encodeEvent(sample, false));
  });

  it("rejects wrong-size buffers and out-of-range fields", () => {
    expect(() => decodeEvent(new Uint8Array(39))).toThrow(/40 bytes/);
    expect(() => encodeEvent({ ...sample, pid: -1 })).toThrow(/pid/);
    expect(() => encodeEvent({ ...sample, tsNs: 1n << 64n })).toThrow(/tsNs/);
    expect(() => encodeEvent({ ...sample, comm: "x".repeat(16) })).toThrow(/comm/);
    const bad = encodeEvent(sample);
    bad[EVENT_OFFSETS.kind] = 9;
    expect(() => decodeEvent(bad)).toThrow(/kind/);
  });

  it("decodes comm up to the first NUL only", () => {
    const buf = encodeEvent({ ...sample, comm: "abc" });
    expect(decodeEvent(buf).comm).toBe("abc");
    // Everything after the terminator is padding, not comm content.
    buf[EVENT_OFFSETS.comm + 5] = 0x7a;
    expect(decodeEvent(buf).comm).toBe("abc");
  });
});

describe("map record codecs", () => {
  it("accumulator round-trips", () => {
    const acc = { count: 16385n, totalNs: 77_000_123n, minNs: 310n, maxNs: 99_104n };
    expect(decodeAccumulator(encodeAccumulator(acc))).toEqual(acc);
  });

  it("LIFO key round-trips and rejects truncation", () => {
    const key = { tid: 4243, probe: 7, depth: 15 };
    expect(decodeLifoKey(encodeLifoKey(key))).toEqual(key);
    expect(() => decodeLifoKey(new Uint8Array(8))).toThrow(/12 bytes/);
  });
});
