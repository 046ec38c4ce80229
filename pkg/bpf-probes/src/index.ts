export {
  ACCUMULATOR_OFFSETS,
  ACCUMULATOR_SIZE,
  COMM_SIZE,
  DEPTH_KEY_OFFSETS,
  DEPTH_KEY_SIZE,
  EVENT_OFFSETS,
  EVENT_SIZE,
  LIFO_KEY_OFFSETS,
  LIFO_KEY_SIZE,
  MAX_DEPTH,
  decodeAccumulator,
  decodeEvent,
  decodeLifoKey,
  encodeAccumulator,
  encodeEvent,
  encodeLifoKey,
  hostLittleEndian,
} from "./layout";
export type { AccumulatorRecord, LifoKey, RawEvent } from "./layout";

export { PROBE_PROGRAM_CORE, buildProgramSource } from "./program";
export type { TrampolineSite } from "./program";

export { ProbeProgram } from "./simulator";
export type { FireContext, SimulatorOptions } from "./simulator";

export { FORMAT_TAG, formatEventLog, writeEventLog } from "./emitter";
export type { EventClassName, ProbeBinding } from "./emitter";
