"""Built-in runtime probe profiles and the on-disk profile format.

The built-ins cover the five standalone Wasm runtimes plus a native control.
Hook patterns were authored against the symbol tables of the pinned versions
below; symbol-resolution failure at attach time is the intended signal that
a binary's version has drifted from the pinned one.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .errors import ParseError
from .model import EventClass, RuntimeProfile, SyscallHook, WasiHook

#: Versions the built-in hook patterns were authored against.
PINNED_VERSIONS = {
    "wasm3": "commit 772f8f4648fcba75f77f894a6050db121e7651a2",
    "wamr": "commit 52db362b897221c2a438197a0f2e4a9a300becd4",
    "wasmtime": "v14.0.4",
    "wasmtime_preview2": "v18.0.0",
    "wasmer": "v4.2.2",
}

_IO = [EventClass.READ, EventClass.WRITE, EventClass.SEEK, EventClass.OPEN, EventClass.CLOSE]


def _wasi(patterns: dict[EventClass, str]) -> tuple[WasiHook, ...]:
    return tuple(WasiHook(cls, patterns[cls]) for cls in _IO if cls in patterns)


def _syscalls(symbols: dict[EventClass, str]) -> tuple[SyscallHook, ...]:
    return tuple(SyscallHook(cls, symbols[cls]) for cls in _IO if cls in symbols)


def builtin_profiles() -> list[RuntimeProfile]:
    """The six built-in profiles: native control plus five Wasm runtimes."""
    native = RuntimeProfile(
        name="native",
        binary_path="",
        wasi_hooks=_wasi({
            EventClass.READ: "fread",
            EventClass.WRITE: "fwrite",
            EventClass.SEEK: "fseek",
            EventClass.OPEN: "fopen",
            EventClass.CLOSE: "fclose",
        }),
        syscall_hooks=_syscalls({
            EventClass.READ: "__x64_sys_read",
            EventClass.WRITE: "__x64_sys_write",
            EventClass.SEEK: "__x64_sys_lseek",
            EventClass.OPEN: "__x64_sys_openat",
            EventClass.CLOSE: "__x64_sys_close",
        }),
        init_symbol="__libc_start_main",
        load_symbol="main",
        command_template="{module} {args}",
        comm_filter="",
    )
    wasm3 = RuntimeProfile(
        name="wasm3",
        binary_path="wasm3",
        wasi_hooks=_wasi({
            EventClass.READ: "m3_wasi_generic_fd_read",
            EventClass.WRITE: "m3_wasi_generic_fd_write",
            EventClass.SEEK: "m3_wasi_generic_fd_seek",
            EventClass.OPEN: "m3_wasi_generic_path_open",
            EventClass.CLOSE: "m3_wasi_generic_fd_close",
        }),
        syscall_hooks=_syscalls({
            EventClass.READ: "__x64_sys_readv",
            EventClass.WRITE: "__x64_sys_writev",
            EventClass.SEEK: "__x64_sys_lseek",
            EventClass.OPEN: "__x64_sys_openat",
            EventClass.CLOSE: "__x64_sys_close",
        }),
        init_symbol="m3_NewEnv",
        load_symbol="repl_load",
        command_template="{binary} {module} {args}",
        comm_filter="wasm3",
    )
    wasmtime = RuntimeProfile(
        name="wasmtime",
        binary_path="wasmtime",
        wasi_hooks=_wasi({
            EventClass.READ: "wasi_common::snapshots::preview_1::wasi_snapshot_preview1::fd_read",
            EventClass.WRITE: "wasi_common::snapshots::preview_1::wasi_snapshot_preview1::fd_write",
            EventClass.SEEK: "wasi_common::snapshots::preview_1::wasi_snapshot_preview1::fd_seek",
            EventClass.OPEN: "wasi_common::snapshots::preview_1::wasi_snapshot_preview1::path_open",
            EventClass.CLOSE: "wasi_common::snapshots::preview_1::wasi_snapshot_preview1::fd_close",
        }),
        syscall_hooks=_syscalls({
            EventClass.READ: "__x64_sys_readv",
            EventClass.WRITE: "__x64_sys_writev",
            EventClass.SEEK: "__x64_sys_lseek",
            EventClass.OPEN: "__x64_sys_openat",
            EventClass.CLOSE: "__x64_sys_close",
        }),
        init_symbol="RunCommand::execute",
        load_symbol="load_module",
        command_template="{binary} run {module} {args}",
        comm_filter="wasmtime",
    )
    preview2 = RuntimeProfile(
        name="wasmtime_preview2",
        binary_path="wasmtime",
        wasi_hooks=_wasi({
            EventClass.READ: "wasmtime_wasi::preview2::preview1::wasi_snapshot_preview1::fd_read",
            EventClass.WRITE: "wasmtime_wasi::preview2::preview1::wasi_snapshot_preview1::fd_write",
            EventClass.SEEK: "wasmtime_wasi::preview2::preview1::wasi_snapshot_preview1::fd_seek",
            EventClass.OPEN: "wasmtime_wasi::preview2::preview1::wasi_snapshot_preview1::path_open",
            EventClass.CLOSE: "wasmtime_wasi::preview2::preview1::wasi_snapshot_preview1::fd_close",
        }),
        syscall_hooks=_syscalls({
            EventClass.READ: "__x64_sys_readv",
            EventClass.WRITE: "__x64_sys_pwrite64",
            EventClass.SEEK: "__x64_sys_lseek",
            EventClass.OPEN: "__x64_sys_openat",
            EventClass.CLOSE: "__x64_sys_close",
        }),
        init_symbol="RunCommand::execute",
        load_symbol="load_module",
        command_template="{binary} run -S preview2 {module} {args}",
        comm_filter="wasmtime",
    )
    wasmer = RuntimeProfile(
        name="wasmer",
        binary_path="wasmer",
        wasi_hooks=_wasi({
            EventClass.READ: "wasmer_wasix::syscalls::wasi::fd_read",
            EventClass.WRITE: "wasmer_wasix::syscalls::wasi::fd_write",
            EventClass.SEEK: "wasmer_wasix::syscalls::wasi::fd_seek",
            EventClass.OPEN: "wasmer_wasix::syscalls::wasi::path_open",
            EventClass.CLOSE: "wasmer_wasix::syscalls::wasi::fd_close",
        }),
        syscall_hooks=_syscalls({
            EventClass.READ: "__x64_sys_read",
            EventClass.WRITE: "__x64_sys_write",
            EventClass.SEEK: "__x64_sys_lseek",
            EventClass.OPEN: "__x64_sys_openat",
            EventClass.CLOSE: "__x64_sys_close",
        }),
        init_symbol="__libc_start_main",
        load_symbol="Module::imports",
        command_template="{binary} run {module} {args}",
        comm_filter="wasmer",
    )
    wamr = RuntimeProfile(
        name="wamr",
        binary_path="iwasm",
        wasi_hooks=_wasi({
            EventClass.READ: "wasi_fd_read",
            EventClass.WRITE: "wasi_fd_write",
            EventClass.SEEK: "wasi_fd_seek",
            EventClass.OPEN: "wasi_path_open",
            EventClass.CLOSE: "wasi_fd_close",
        }),
        syscall_hooks=_syscalls({
            EventClass.READ: "__x64_sys_pread64",
            EventClass.WRITE: "__x64_sys_pwrite64",
            EventClass.SEEK: "__x64_sys_lseek",
            EventClass.OPEN: "__x64_sys_openat",
            EventClass.CLOSE: "__x64_sys_close",
        }),
        init_symbol="wasm_runtime_full_init",
        load_symbol="bh_read_file_to_buffer",
        command_template="{binary} {module} {args}",
        comm_filter="iwasm",
    )
    return [native, wasm3, wasmtime, preview2, wasmer, wamr]


def builtin_profile(name: str) -> RuntimeProfile:
    for profile in builtin_profiles():
        if profile.name == name:
            return profile
    known = ", ".join(p.name for p in builtin_profiles())
    raise KeyError(f"no builtin profile {name!r} (known: {known})")


_REQUIRED_KEYS = (
    "name",
    "binary_path",
    "command_template",
    "comm_filter",
    "init_symbol",
    "load_symbol",
    "wasi_hooks",
    "syscall_hooks",
)


def profile_to_dict(profile: RuntimeProfile) -> dict:
    return {
        "name": profile.name,
        "binary_path": profile.binary_path,
        "command_template": profile.command_template,
        "comm_filter": profile.comm_filter,
        "init_symbol": profile.init_symbol,
        "load_symbol": profile.load_symbol,
        "wasi_hooks": [
            {"class": h.event_class.value, "symbol_pattern": h.symbol_pattern} for h in profile.wasi_hooks
        ],
        "syscall_hooks": [
            {"class": h.event_class.value, "kernel_symbol": h.kernel_symbol} for h in profile.syscall_hooks
        ],
    }


def save_profile(profile: RuntimeProfile, path: str | Path) -> None:
    text = yaml.safe_dump(profile_to_dict(profile), sort_keys=True, default_flow_style=False)
    Path(path).write_text(text, encoding="utf-8")


def profile_from_dict(doc: dict, *, source: str = "<memory>") -> RuntimeProfile:
    if not isinstance(doc, dict):
        raise ParseError("profile document must be a mapping", path=source)
    for key in _REQUIRED_KEYS:
        if key not in doc:
            raise ParseError(f"missing required key {key!r}", path=source, field=key)
    try:
        wasi_hooks = tuple(
            WasiHook(EventClass.from_wire(h["class"]), h["symbol_pattern"]) for h in doc["wasi_hooks"]
        )
        syscall_hooks = tuple(
            SyscallHook(EventClass.from_wire(h["class"]), h["kernel_symbol"]) for h in doc["syscall_hooks"]
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed hook entry: {exc}", path=source, field="hooks") from exc
    except ValueError as exc:
        raise ParseError(str(exc), path=source, field="class") from exc
    return RuntimeProfile(
        name=doc["name"],
        binary_path=doc["binary_path"],
        wasi_hooks=wasi_hooks,
        syscall_hooks=syscall_hooks,
        init_symbol=doc["init_symbol"],
        load_symbol=doc["load_symbol"],
        command_template=doc["command_template"],
        comm_filter=doc["comm_filter"],
    )


def load_profile(path: str | Path) -> RuntimeProfile:
    """Parse and validate a profile file; raises ParseError with location
    context, or the profile-invariant errors from validation."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(str(exc), path=str(path), line=mark.line + 1 if mark else None) from exc
    return profile_from_dict(doc, source=str(path))


def resolve_profile_arg(value: str) -> RuntimeProfile:
    """CLI helper: a builtin name, or a path to a profile file."""
    if Path(value).exists():
        return load_profile(value)
    try:
        return builtin_profile(value)
    except KeyError as exc:
        raise ParseError(str(exc)) from exc
