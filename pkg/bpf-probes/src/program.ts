/**
 * Assembles the C source of the kernel probe program the way the loader
 * does: three configuration macros, the shared core, then one trampoline
 * pair per attached probe with its index and address-space tag baked in.
 *
 * The core is verifier-safe by construction: the only loop is the
 * unrolled fixed-length comm comparison, and every map key and value has
 * a fixed size (see layout.ts for the field-by-field byte layout).
 */

export interface TrampolineSite {
  /** Position in the attachment table; becomes the probe field of events. */
  index: number;
  space: "user" | "kernel";
  /** Startup markers hook only the entry; no exit trampoline is emitted. */
  entryOnly?: boolean;
}

export const PROBE_PROGRAM_CORE = `/* Probe program core loaded through BCC. The loader prepends three macros
 * (FILTER_ENABLED, COMM_FILTER, ACCUMULATE) and appends one trampoline pair
 * per attached probe; trampolines call handle_entry/handle_exit with their
 * probe index and address-space tag baked in as constants.
 *
 * Per-event mode pushes every fire through the perf ring and leaves pairing
 * to user space. Accumulation mode pairs in the kernel with a depth-limited
 * LIFO per (tid, probe) and folds deltas into per-probe accumulators, for
 * event rates where the ring would drop records.
 */

#include <uapi/linux/ptrace.h>
#include <linux/sched.h>

#define MAX_DEPTH 16

struct event_t {
    u64 ts;
    u32 pid;
    u32 tid;
    char comm[16];
    u32 probe;
    u8 kind;   /* 0 entry, 1 exit */
    u8 space;  /* 0 user, 1 kernel */
    u16 pad;
};

struct lifo_key_t {
    u32 tid;
    u32 probe;
    u32 depth;
};

struct depth_key_t {
    u32 tid;
    u32 probe;
};

struct acc_t {
    u64 count;
    u64 total_ns;
    u64 min_ns;
    u64 max_ns;
};

BPF_PERF_OUTPUT(events);
BPF_HASH(entry_ts, struct lifo_key_t, u64);
BPF_HASH(depths, struct depth_key_t, u32);
BPF_HASH(accum, u32, struct acc_t);
BPF_ARRAY(dropped, u64, 1);
BPF_ARRAY(orphans, u64, 1);

static __always_inline void bump_dropped()
{
    int zero = 0;
    u64 *v = dropped.lookup(&zero);
    if (v)
        __sync_fetch_and_add(v, 1);
}

static __always_inline void bump_orphans()
{
    int zero = 0;
    u64 *v = orphans.lookup(&zero);
    if (v)
        __sync_fetch_and_add(v, 1);
}

static __always_inline int comm_allowed()
{
#if FILTER_ENABLED
    char comm[16];
    char want[] = COMM_FILTER;
    int i;
    bpf_get_current_comm(&comm, sizeof(comm));
#pragma unroll
    for (i = 0; i < sizeof(want) - 1; i++) {
        if (comm[i] != want[i])
            return 0;
    }
    return 1;
#else
    return 1;
#endif
}

static __always_inline void submit(struct pt_regs *ctx, u32 probe, u8 kind, u8 space,
                                   u64 ts, u32 pid, u32 tid)
{
    struct event_t ev = {};
    ev.ts = ts;
    ev.pid = pid;
    ev.tid = tid;
    ev.probe = probe;
    ev.kind = kind;
    ev.space = space;
    bpf_get_current_comm(&ev.comm, sizeof(ev.comm));
    events.perf_submit(ctx, &ev, sizeof(ev));
}

static __always_inline int handle_entry(struct pt_regs *ctx, u32 probe, u8 space)
{
    u64 id;
    u64 ts;
    u32 pid, tid;

    if (!comm_allowed())
        return 0;
    id = bpf_get_current_pid_tgid();
    pid = id >> 32;
    tid = (u32)id;
    ts = bpf_ktime_get_ns();
#if ACCUMULATE
    {
        struct depth_key_t dk = {.tid = tid, .probe = probe};
        u32 zero = 0;
        u32 *depth = depths.lookup_or_try_init(&dk, &zero);
        struct lifo_key_t lk = {.tid = tid, .probe = probe, .depth = 0};
        if (!depth) {
            bump_dropped();
            return 0;
        }
        if (*depth >= MAX_DEPTH) {
            bump_dropped();
            return 0;
        }
        lk.depth = *depth;
        entry_ts.update(&lk, &ts);
        *depth += 1;
    }
#else
    submit(ctx, probe, 0, space, ts, pid, tid);
#endif
    return 0;
}

static __always_inline int handle_exit(struct pt_regs *ctx, u32 probe, u8 space)
{
    u64 id;
    u64 ts;
    u32 pid, tid;

    if (!comm_allowed())
        return 0;
    id = bpf_get_current_pid_tgid();
    pid = id >> 32;
    tid = (u32)id;
    ts = bpf_ktime_get_ns();
#if ACCUMULATE
    {
        struct depth_key_t dk = {.tid = tid, .probe = probe};
        struct lifo_key_t lk = {.tid = tid, .probe = probe, .depth = 0};
        struct acc_t fresh = {};
        u32 *depth = depths.lookup(&dk);
        u64 *entry;
        u64 delta;
        struct acc_t *acc;

        if (!depth || *depth == 0) {
            bump_orphans();
            return 0;
        }
        *depth -= 1;
        lk.depth = *depth;
        entry = entry_ts.lookup(&lk);
        if (!entry) {
            bump_orphans();
            return 0;
        }
        delta = ts - *entry;
        entry_ts.delete(&lk);
        acc = accum.lookup_or_try_init(&probe, &fresh);
        if (!acc) {
            bump_dropped();
            return 0;
        }
        if (acc->count == 0 || delta < acc->min_ns)
            acc->min_ns = delta;
        if (delta > acc->max_ns)
            acc->max_ns = delta;
        __sync_fetch_and_add(&acc->count, 1);
        __sync_fetch_and_add(&acc->total_ns, delta);
    }
#else
    submit(ctx, probe, 1, space, ts, pid, tid);
#endif
    return 0;
}
`;

function checkFilter(commFilter: string): void {
  // The macro becomes a C string literal; the kernel comm field holds at
  // most 15 bytes, and quotes or escapes would change the program text.
  if (commFilter.length > 15) {
    throw new RangeError(`comm filter exceeds 15 bytes: ${commFilter}`);
  }
  if (/[\\"\n]/.test(commFilter)) {
    throw new RangeError(`comm filter must not contain quotes or escapes: ${commFilter}`);
  }
}

export function buildProgramSource(
  sites: TrampolineSite[],
  commFilter: string,
  accumulate: boolean,
): string {
  checkFilter(commFilter);
  const seen = new Set<number>();
  for (const site of sites) {
    if (seen.has(site.index)) {
      throw new RangeError(`duplicate trampoline index ${site.index}`);
    }
    seen.add(site.index);
  }
  const header = [
    `#define FILTER_ENABLED ${commFilter ? 1 : 0}`,
    `#define COMM_FILTER "${commFilter}"`,
    `#define ACCUMULATE ${accumulate ? 1 : 0}`,
  ];
  const trampolines: string[] = [];
  for (const site of sites) {
    const space = site.space === "user" ? 0 : 1;
    trampolines.push(
      `int trace_entry_${site.index}(struct pt_regs *ctx)` +
        ` { return handle_entry(ctx, ${site.index}, ${space}); }`,
    );
    if (!site.entryOnly) {
      trampolines.push(
        `int trace_exit_${site.index}(struct pt_regs *ctx)` +
          ` { return handle_exit(ctx, ${site.index}, ${space}); }`,
      );
    }
  }
  return header.join("\n") + "\n" + PROBE_PROGRAM_CORE + "\n" + trampolines.join("\n") + "\n";
}
