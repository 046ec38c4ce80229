#!/usr/bin/env python3
"""Regenerates the golden replay fixtures under fixtures/.

Each log is a synthetic but well-formed trace for one runtime x workload
cell: a startup prologue (init and load entries), then user-space hook
intervals with their kernel syscall intervals strictly nested inside.
Call counts and per-class time totals are fixed constants chosen so the
detectors have known-true and known-false cases to replay; large-file read
counts are scaled down 10^4 and write counts 10^6 to keep logs reviewable.

The builder is a pure function of its constants: rebuilding produces
byte-identical files. Run from the repository root:

    python3 tools/build_fixtures.py
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ewapa.model import EventClass, EventKind, ProbeSpace, TraceEvent  # noqa: E402
from ewapa.report import write_event_log  # noqa: E402

FIXTURE_ROOT = Path(__file__).resolve().parent.parent / "fixtures"

READ_SIZE = 100 * 2**30
WRITE_SIZE = 99 * 2**30
SEEK_SIZE = 1 * 2**30
OPENCLOSE_SIZE = round(4.7 * 2**30)

#: Startup intervals (ns). Chosen so ratio-to-fastest stays below 10 for the
#: quick starters and far above it for the two slow ones.
STARTUP_NS = {
    "native": 30_000,
    "wasm3": 100_000,
    "wasmtime": 240_000,
    "wasmtime_preview2": 260_000,
    "wasmer": 195_000_000,
    "wamr": 9_500_000,
}

INIT_LOAD = {
    "native": ("__libc_start_main", "main"),
    "wasm3": ("m3_NewEnv", "repl_load"),
    "wasmtime": ("wasmtime::commands::run::RunCommand::execute", "wasmtime::runtime::module::load_module"),
    "wasmtime_preview2": ("wasmtime::commands::run::RunCommand::execute", "wasmtime::runtime::module::load_module"),
    "wasmer": ("__libc_start_main", "wasmer::runtime::Module::imports"),
    "wamr": ("wasm_runtime_full_init", "bh_read_file_to_buffer"),
}

PIDS = {
    "native": 4001,
    "wasm3": 4101,
    "wasmtime": 4201,
    "wasmtime_preview2": 4301,
    "wasmer": 4401,
    "wamr": 4501,
}

COMMS = {
    "native": {"fread": "fread_case", "fwrite": "fwrite_case", "fseek": "fseek_case", "openclose": "openclose_case"},
    "wasm3": {"*": "wasm3"},
    "wasmtime": {"*": "wasmtime"},
    "wasmtime_preview2": {"*": "wasmtime"},
    "wasmer": {"*": "wasmer"},
    "wamr": {"*": "iwasm"},
}

_RUST_READ = "wasi_common::snapshots::preview_1::wasi_snapshot_preview1::fd_read"
_RUST_WRITE = "wasi_common::snapshots::preview_1::wasi_snapshot_preview1::fd_write"
_P2_READ = "wasmtime_wasi::preview2::preview1::wasi_snapshot_preview1::fd_read"
_P2_WRITE = "wasmtime_wasi::preview2::preview1::wasi_snapshot_preview1::fd_write"

# (wasi_probe, kernel_probe, wasi_total_ns, wasi_count, sys_total_ns, sys_count)
# Read cell: seconds scaled by 1e5 into ns (time / 1e4), counts / 1e4.
READ_CELLS = {
    "native": ("fread", "__x64_sys_read", 178, 2621, 123, 2621),
    "wasm3": ("m3_wasi_generic_fd_read", "__x64_sys_readv", 211, 2621, 180, 2621),
    "wamr": ("wasi_fd_read", "__x64_sys_pread64", 249, 2621, 226, 2621),
    "wasmtime_preview2": (_P2_READ, "__x64_sys_readv", 311, 5243, 144, 5243),
    "wasmer": ("wasmer_wasix::syscalls::wasi::fd_read", "__x64_sys_read", 683, 2621, 165, 5243),
    "wasmtime": (_RUST_READ, "__x64_sys_readv", 215, 2621, 157, 2621),
}
READ_TIME_NS = 100_000  # one second of original time becomes 0.1 ms

# Write cell: seconds scaled by 1e3 into ns (time / 1e6), counts / 1e6.
WRITE_CELLS = {
    "native": ("fwrite", "__x64_sys_write", 2701, 1750, 51, 26),
    "wasm3": ("m3_wasi_generic_fd_write", "__x64_sys_writev", 311, 102, 201, 102),
    "wamr": ("wasi_fd_write", "__x64_sys_pwrite64", 290, 102, 186, 102),
    "wasmtime_preview2": (_P2_WRITE, "__x64_sys_pwrite64", 1026, 204, 370, 204),
    "wasmer": ("wasmer_wasix::syscalls::wasi::fd_write", "__x64_sys_write", 1775, 102, 370, 204),
    "wasmtime": (_RUST_WRITE, "__x64_sys_writev", 419, 102, 198, 102),
}
WRITE_TIME_NS = 1_000

# Auxiliary cells run at full scale: 50 loop iterations, times in microseconds
# of original seconds (i.e. seconds * 1e9 ns). Kernel side is 40% of user side.
SEEK_WASI_US = {
    "native": ("fseek", "__x64_sys_lseek", 330),
    "wasm3": ("m3_wasi_generic_fd_seek", "__x64_sys_lseek", 130),
    "wasmtime": ("wasi_common::snapshots::preview_1::wasi_snapshot_preview1::fd_seek", "__x64_sys_lseek", 230),
    "wasmtime_preview2": ("wasmtime_wasi::preview2::preview1::wasi_snapshot_preview1::fd_seek", "__x64_sys_lseek", 220),
    "wasmer": ("wasmer_wasix::syscalls::wasi::fd_seek", "__x64_sys_lseek", 170),
    "wamr": ("wasi_fd_seek", "__x64_sys_lseek", 150),
}

OPEN_PROBES = {
    "native": ("fopen", "__x64_sys_openat"),
    "wasm3": ("m3_wasi_generic_path_open", "__x64_sys_openat"),
    "wasmtime": ("wasi_common::snapshots::preview_1::wasi_snapshot_preview1::path_open", "__x64_sys_openat"),
    "wasmtime_preview2": ("wasmtime_wasi::preview2::preview1::wasi_snapshot_preview1::path_open", "__x64_sys_openat"),
    "wasmer": ("wasmer_wasix::syscalls::wasi::path_open", "__x64_sys_openat"),
    "wamr": ("wasi_path_open", "__x64_sys_openat"),
}

CLOSE_PROBES = {
    "native": ("fclose", "__x64_sys_close"),
    "wasm3": ("m3_wasi_generic_fd_close", "__x64_sys_close"),
    "wasmtime": ("wasi_common::snapshots::preview_1::wasi_snapshot_preview1::fd_close", "__x64_sys_close"),
    "wasmtime_preview2": ("wasmtime_wasi::preview2::preview1::wasi_snapshot_preview1::fd_close", "__x64_sys_close"),
    "wasmer": ("wasmer_wasix::syscalls::wasi::fd_close", "__x64_sys_close"),
    "wamr": ("wasi_fd_close", "__x64_sys_close"),
}

# Seconds * 1e5 (so 20.86419 s becomes 2_086_419 units of 1e4 ns each).
OPEN_TOTAL_10US = {
    "native": 2_086_419,
    "wasm3": 2_109_183,
    "wasmtime": 1_969_448,
    "wasmtime_preview2": 36,
    "wasmer": 2_145_274,
    "wamr": 2_110_804,
}
CLOSE_TOTAL_10US = {
    "native": 3_500_267,
    "wasm3": 517_304,
    "wasmtime": 2_415_975,
    "wasmtime_preview2": 16,
    "wasmer": 19,
    "wamr": 587_338,
}
AUX_LOOPS = 50


def distribute(total: int, n: int) -> list[int]:
    """n non-negative ints summing to total, as even as possible."""
    base, rem = divmod(total, n)
    return [base + 1 if i < rem else base for i in range(n)]


class CellBuilder:
    def __init__(self, runtime: str, kind: str):
        self.events: list[TraceEvent] = []
        self.pid = PIDS[runtime]
        comms = COMMS[runtime]
        self.comm = comms.get(kind, comms.get("*", runtime))
        self.t = 1_000

    def emit(self, probe: str, cls: EventClass, kind: EventKind, space: ProbeSpace, ts: int):
        self.events.append(
            TraceEvent(
                ts_ns=ts,
                pid=self.pid,
                tid=self.pid,
                comm=self.comm,
                probe_id=probe,
                event_class=cls,
                kind=kind,
                space=space,
            )
        )

    def prologue(self, runtime: str):
        init, load = INIT_LOAD[runtime]
        self.emit(init, EventClass.INIT, EventKind.ENTRY, ProbeSpace.USER, self.t)
        self.emit(load, EventClass.LOAD, EventKind.ENTRY, ProbeSpace.USER, self.t + STARTUP_NS[runtime])
        self.t += STARTUP_NS[runtime] + 1_000

    def nested_block(
        self,
        cls: EventClass,
        wasi_probe: str,
        sys_probe: str,
        wasi_total: int,
        wasi_count: int,
        sys_total: int,
        sys_count: int,
    ):
        """Emit wasi_count user intervals with sys_count kernel intervals
        nested inside them, hitting both time totals exactly."""
        children = distribute(sys_count, wasi_count)
        sys_durations = distribute(sys_total, sys_count) if sys_count else []
        own = distribute(wasi_total - sys_total, wasi_count)
        sys_i = 0
        for i in range(wasi_count):
            entry = self.t
            self.emit(wasi_probe, cls, EventKind.ENTRY, ProbeSpace.USER, entry)
            inner = entry + 1
            child_time = 0
            for _ in range(children[i]):
                d = sys_durations[sys_i]
                sys_i += 1
                child_time += d
                self.emit(sys_probe, cls, EventKind.ENTRY, ProbeSpace.KERNEL, inner)
                self.emit(sys_probe, cls, EventKind.EXIT, ProbeSpace.KERNEL, inner + d)
                inner += d + 1
            exit_ts = entry + own[i] + child_time
            self.emit(wasi_probe, cls, EventKind.EXIT, ProbeSpace.USER, exit_ts)
            self.t = exit_ts + 100


def build_cell(runtime: str, kind: str, size: int, blocks) -> None:
    b = CellBuilder(runtime, kind)
    b.prologue(runtime)
    for block in blocks:
        b.nested_block(*block)
    out = FIXTURE_ROOT / runtime / f"{kind}__{size}__rep1.log"
    write_event_log(
        b.events,
        out,
        comments=[f"golden replay fixture: {runtime} {kind}, synthetic trace with fixed call counts"],
    )
    print(f"{out}  ({len(b.events)} events)")


def main() -> None:
    for runtime, (wp, sp, wt, wc, st, sc) in READ_CELLS.items():
        build_cell(
            runtime,
            "fread",
            READ_SIZE,
            [(EventClass.READ, wp, sp, wt * READ_TIME_NS, wc, st * READ_TIME_NS, sc)],
        )
    for runtime, (wp, sp, wt, wc, st, sc) in WRITE_CELLS.items():
        build_cell(
            runtime,
            "fwrite",
            WRITE_SIZE,
            [(EventClass.WRITE, wp, sp, wt * WRITE_TIME_NS, wc, st * WRITE_TIME_NS, sc)],
        )
    for runtime, (wp, sp, us) in SEEK_WASI_US.items():
        total = us * 1_000
        build_cell(
            runtime,
            "fseek",
            SEEK_SIZE,
            [(EventClass.SEEK, wp, sp, total, AUX_LOOPS, (total * 2) // 5, AUX_LOOPS)],
        )
    for runtime in OPEN_PROBES:
        open_total = OPEN_TOTAL_10US[runtime] * 10_000
        close_total = CLOSE_TOTAL_10US[runtime] * 10_000
        wp_o, sp_o = OPEN_PROBES[runtime]
        wp_c, sp_c = CLOSE_PROBES[runtime]
        build_cell(
            runtime,
            "openclose",
            OPENCLOSE_SIZE,
            [
                (EventClass.OPEN, wp_o, sp_o, open_total, AUX_LOOPS, (open_total * 2) // 5, AUX_LOOPS),
                (EventClass.CLOSE, wp_c, sp_c, close_total, AUX_LOOPS, (close_total * 2) // 5, AUX_LOOPS),
            ],
        )


if __name__ == "__main__":
    main()
