/**
 * Binary layout of the records the probe programs share with their loader.
 *
 * The structs are declared in the C source with natural alignment only, so
 * the offsets below are the plain sequential ones; `pad` in the event record
 * exists to make that explicit rather than to fight the compiler. Endianness
 * is the host's: the loader and the programs run on the same machine.
 */

/** Perf-ring record emitted once per probe fire in per-event mode. */
export interface RawEvent {
  /** Monotonic nanoseconds (bpf_ktime_get_ns). */
  tsNs: bigint;
  pid: number;
  tid: number;
  /** Task command name, at most 15 bytes plus the kernel's NUL. */
  comm: string;
  /** Index into the trampoline table, not a symbol. */
  probe: number;
  kind: "entry" | "exit";
  space: "user" | "kernel";
}

/** Value of the per-probe accumulator map in accumulation mode. */
export interface AccumulatorRecord {
  count: bigint;
  totalNs: bigint;
  minNs: bigint;
  maxNs: bigint;
}

/** Key of the entry-timestamp map: one slot per LIFO level. */
export interface LifoKey {
  tid: number;
  probe: number;
  depth: number;
}

export const EVENT_SIZE = 40;
export const EVENT_OFFSETS = {
  ts: 0, // u64
  pid: 8, // u32
  tid: 12, // u32
  comm: 16, // char[16]
  probe: 32, // u32
  kind: 36, // u8: 0 entry, 1 exit
  space: 37, // u8: 0 user, 1 kernel
  pad: 38, // u16, always zero
} as const;

export const COMM_SIZE = 16;

export const ACCUMULATOR_SIZE = 32;
export const ACCUMULATOR_OFFSETS = {
  count: 0, // u64
  totalNs: 8, // u64
  minNs: 16, // u64
  maxNs: 24, // u64
} as const;

export const LIFO_KEY_SIZE = 12;
export const LIFO_KEY_OFFSETS = { tid: 0, probe: 4, depth: 8 } as const; // u32 each

export const DEPTH_KEY_SIZE = 8;
export const DEPTH_KEY_OFFSETS = { tid: 0, probe: 4 } as const; // u32 each

/** The LIFO in the kernel tracks at most this many nested entries per key. */
export const MAX_DEPTH = 16;

export function hostLittleEndian(): boolean {
  const probe = new Uint8Array(new Uint16Array([1]).buffer);
  return probe[0] === 1;
}

function checkU32(value: number, field: string): void {
  if (!Number.isInteger(value) || value < 0 || value > 0xffffffff) {
    throw new RangeError(`${field} must be an unsigned 32-bit integer, got ${value}`);
  }
}

function checkU64(value: bigint, field: string): void {
  if (value < 0n || value >= 1n << 64n) {
    throw new RangeError(`${field} must fit an unsigned 64-bit integer, got ${value}`);
  }
}

export function encodeEvent(ev: RawEvent, littleEndian = hostLittleEndian()): Uint8Array {
  checkU64(ev.tsNs, "tsNs");
  checkU32(ev.pid, "pid");
  checkU32(ev.tid, "tid");
  checkU32(ev.probe, "probe");
  const comm = new TextEncoder().encode(ev.comm);
  if (comm.length > COMM_SIZE - 1) {
    throw new RangeError(`comm exceeds ${COMM_SIZE - 1} bytes: ${ev.comm}`);
  }
  const buf = new Uint8Array(EVENT_SIZE);
  const view = new DataView(buf.buffer);
  view.setBigUint64(EVENT_OFFSETS.ts, ev.tsNs, littleEndian);
  view.setUint32(EVENT_OFFSETS.pid, ev.pid, littleEndian);
  view.setUint32(EVENT_OFFSETS.tid, ev.tid, littleEndian);
  buf.set(comm, EVENT_OFFSETS.comm);
  view.setUint32(EVENT_OFFSETS.probe, ev.probe, littleEndian);
  view.setUint8(EVENT_OFFSETS.kind, ev.kind === "entry" ? 0 : 1);
  view.setUint8(EVENT_OFFSETS.space, ev.space === "user" ? 0 : 1);
  return buf;
}

export function decodeEvent(raw: Uint8Array, littleEndian = hostLittleEndian()): RawEvent {
  if (raw.byteLength !== EVENT_SIZE) {
    throw new RangeError(`event record must be ${EVENT_SIZE} bytes, got ${raw.byteLength}`);
  }
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  const kind = view.getUint8(EVENT_OFFSETS.kind);
  const space = view.getUint8(EVENT_OFFSETS.space);
  if (kind > 1) throw new RangeError(`kind byte out of range: ${kind}`);
  if (space > 1) throw new RangeError(`space byte out of range: ${space}`);
  const commBytes = raw.subarray(EVENT_OFFSETS.comm, EVENT_OFFSETS.comm + COMM_SIZE);
  const nul = commBytes.indexOf(0);
  const comm = new TextDecoder().decode(nul === -1 ? commBytes : commBytes.subarray(0, nul));
  return {
    tsNs: view.getBigUint64(EVENT_OFFSETS.ts, littleEndian),
    pid: view.getUint32(EVENT_OFFSETS.pid, littleEndian),
    tid: view.getUint32(EVENT_OFFSETS.tid, littleEndian),
    comm,
    probe: view.getUint32(EVENT_OFFSETS.probe, littleEndian),
    kind: kind === 0 ? "entry" : "exit",
    space: space === 0 ? "user" : "kernel",
  };
}

export function encodeAccumulator(
  acc: AccumulatorRecord,
  littleEndian = hostLittleEndian(),
): Uint8Array {
  checkU64(acc.count, "count");
  checkU64(acc.totalNs, "totalNs");
  checkU64(acc.minNs, "minNs");
  checkU64(acc.maxNs, "maxNs");
  const buf = new Uint8Array(ACCUMULATOR_SIZE);
  const view = new DataView(buf.buffer);
  view.setBigUint64(ACCUMULATOR_OFFSETS.count, acc.count, littleEndian);
  view.setBigUint64(ACCUMULATOR_OFFSETS.totalNs, acc.totalNs, littleEndian);
  view.setBigUint64(ACCUMULATOR_OFFSETS.minNs, acc.minNs, littleEndian);
  view.setBigUint64(ACCUMULATOR_OFFSETS.maxNs, acc.maxNs, littleEndian);
  return buf;
}

export function decodeAccumulator(
  raw: Uint8Array,
  littleEndian = hostLittleEndian(),
): AccumulatorRecord {
  if (raw.byteLength !== ACCUMULATOR_SIZE) {
    throw new RangeError(
      `accumulator record must be ${ACCUMULATOR_SIZE} bytes, got ${raw.byteLength}`,
    );
  }
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  return {
    count: view.getBigUint64(ACCUMULATOR_OFFSETS.count, littleEndian),
    totalNs: view.getBigUint64(ACCUMULATOR_OFFSETS.totalNs, littleEndian),
    minNs: view.getBigUint64(ACCUMULATOR_OFFSETS.minNs, littleEndian),
    maxNs: view.getBigUint64(ACCUMULATOR_OFFSETS.maxNs, littleEndian),
  };
}

export function encodeLifoKey(key: LifoKey, littleEndian = hostLittleEndian()): Uint8Array {
  checkU32(key.tid, "tid");
  checkU32(key.probe, "probe");
  checkU32(key.depth, "depth");
  const buf = new Uint8Array(LIFO_KEY_SIZE);
  const view = new DataView(buf.buffer);
  view.setUint32(LIFO_KEY_OFFSETS.tid, key.tid, littleEndian);
  view.setUint32(LIFO_KEY_OFFSETS.probe, key.probe, littleEndian);
  view.setUint32(LIFO_KEY_OFFSETS.depth, key.depth, littleEndian);
  return buf;
}

export function decodeLifoKey(raw: Uint8Array, littleEndian = hostLittleEndian()): LifoKey {
  if (raw.byteLength !== LIFO_KEY_SIZE) {
    throw new RangeError(`LIFO key must be ${LIFO_KEY_SIZE} bytes, got ${raw.byteLength}`);
  }
  const view = new DataView(raw.buffer, raw.byteOffset, raw.byteLength);
  return {
    tid: view.getUint32(LIFO_KEY_OFFSETS.tid, littleEndian),
    probe: view.getUint32(LIFO_KEY_OFFSETS.probe, littleEndian),
    depth: view.getUint32(LIFO_KEY_OFFSETS.depth, littleEndian),
  };
}
