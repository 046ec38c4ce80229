"""Object-file symbol tables and pattern resolution for user-space probes.

A minimal ELF reader (static + dynamic symbol tables, function symbols only)
backs the lookup; mangled names are additionally matched through their
demangled form so patterns can be written as source-level paths like
``wasi_common::snapshots::preview_1::fd_read``.
"""

from __future__ import annotations

import ctypes
import ctypes.util
import re
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .errors import Ambiguous, NotAnObjectFile, NotFound, StrippedBinary

_ELF_MAGIC = b"\x7fELF"
_SHT_SYMTAB = 2
_SHT_DYNSYM = 11
_STT_FUNC = 2
_STT_GNU_IFUNC = 10
_SHN_UNDEF = 0


@dataclass(frozen=True)
class SymbolEntry:
    name: str
    address: int
    is_dynamic: bool


@dataclass(frozen=True)
class SymbolTable:
    """Defined function symbols of one binary, deduplicated by (name, address)."""

    entries: tuple[SymbolEntry, ...]

    def names(self) -> list[str]:
        return [entry.name for entry in self.entries]


def list_symbols(binary: str | Path) -> SymbolTable:
    """Read all defined function symbols from an ELF binary.

    Collects both the static (.symtab) and dynamic (.dynsym) tables; raises
    NotAnObjectFile for non-ELF input and StrippedBinary when no usable
    symbols remain.
    """
    data = Path(binary).read_bytes()
    if len(data) < 64 or data[:4] != _ELF_MAGIC:
        raise NotAnObjectFile(f"{binary}: not an ELF object file")
    ei_class, ei_data = data[4], data[5]
    if ei_class not in (1, 2) or ei_data not in (1, 2):
        raise NotAnObjectFile(f"{binary}: unsupported ELF class/encoding")
    is64 = ei_class == 2
    end = "<" if ei_data == 1 else ">"

    if is64:
        e_shoff, e_shentsize, e_shnum, e_shstrndx = struct.unpack_from(end + "Q", data, 0x28) + struct.unpack_from(end + "HHH", data, 0x3A)
    else:
        e_shoff, e_shentsize, e_shnum, e_shstrndx = struct.unpack_from(end + "I", data, 0x20) + struct.unpack_from(end + "HHH", data, 0x2E)
    if e_shoff == 0:
        raise StrippedBinary(f"{binary}: no section headers")

    def section(idx: int) -> tuple[int, int, int, int, int]:
        off = e_shoff + idx * e_shentsize
        if is64:
            sh_type, = struct.unpack_from(end + "I", data, off + 4)
            sh_offset, sh_size = struct.unpack_from(end + "QQ", data, off + 24)
            sh_link, = struct.unpack_from(end + "I", data, off + 40)
            sh_entsize, = struct.unpack_from(end + "Q", data, off + 56)
        else:
            sh_type, = struct.unpack_from(end + "I", data, off + 4)
            sh_offset, sh_size = struct.unpack_from(end + "II", data, off + 16)
            sh_link, = struct.unpack_from(end + "I", data, off + 24)
            sh_entsize, = struct.unpack_from(end + "I", data, off + 36)
        return sh_type, sh_offset, sh_size, sh_link, sh_entsize

    # Extended section numbering stores the real count in section 0.
    if e_shnum == 0:
        e_shnum = section(0)[2]

    tables = []
    for idx in range(e_shnum):
        sh_type, sh_offset, sh_size, sh_link, sh_entsize = section(idx)
        if sh_type in (_SHT_SYMTAB, _SHT_DYNSYM):
            tables.append((sh_type, sh_offset, sh_size, sh_link, sh_entsize))
    if not tables:
        raise StrippedBinary(f"{binary}: no symbol tables present")

    # Static table first so deduplication prefers it.
    tables.sort(key=lambda t: 0 if t[0] == _SHT_SYMTAB else 1)
    seen: set[tuple[str, int]] = set()
    entries: list[SymbolEntry] = []
    for sh_type, sh_offset, sh_size, sh_link, sh_entsize in tables:
        strtab_off, strtab_size = section(sh_link)[1:3]
        strings = data[strtab_off : strtab_off + strtab_size]
        entsize = sh_entsize or (24 if is64 else 16)
        for off in range(sh_offset, sh_offset + sh_size, entsize):
            if is64:
                st_name, st_info, _, st_shndx, st_value = struct.unpack_from(end + "IBBHQ", data, off)
            else:
                st_name, st_value, _, st_info, _, st_shndx = struct.unpack_from(end + "IIIBBH", data, off)
            if st_info & 0xF not in (_STT_FUNC, _STT_GNU_IFUNC):
                continue
            if st_shndx == _SHN_UNDEF or st_value == 0:
                continue
            nul = strings.find(b"\0", st_name)
            name = strings[st_name:nul].decode("utf-8", "replace")
            if not name or (name, st_value) in seen:
                continue
            seen.add((name, st_value))
            entries.append(SymbolEntry(name=name, address=st_value, is_dynamic=sh_type == _SHT_DYNSYM))
    if not entries:
        raise StrippedBinary(f"{binary}: symbol tables contain no defined functions")
    return SymbolTable(entries=tuple(entries))


_demangler: tuple | None = None


def _load_demangler():
    global _demangler
    if _demangler is not None:
        return _demangler
    try:
        lib = ctypes.CDLL(ctypes.util.find_library("stdc++") or "libstdc++.so.6")
        fn = lib.__cxa_demangle
        fn.restype = ctypes.c_void_p
        fn.argtypes = [ctypes.c_char_p, ctypes.c_void_p, ctypes.c_void_p, ctypes.POINTER(ctypes.c_int)]
        free = ctypes.CDLL(None).free
        free.argtypes = [ctypes.c_void_p]
        _demangler = (fn, free)
    except (OSError, AttributeError):
        _demangler = ()
    return _demangler


# Legacy Rust mangling escapes that survive Itanium demangling.
_RUST_ESCAPES = [
    ("$SP$", "@"),
    ("$BP$", "*"),
    ("$RF$", "&"),
    ("$LT$", "<"),
    ("$GT$", ">"),
    ("$LP$", "("),
    ("$RP$", ")"),
    ("$C$", ","),
]
_RUST_UNICODE = re.compile(r"\$u([0-9a-f]{1,4})\$")


@lru_cache(maxsize=65536)
def demangle(name: str) -> str | None:
    """Best-effort demangled form of a symbol, or None if unrecognizable.

    Itanium C++ names are demangled through libstdc++; legacy Rust names use
    the same scheme plus ``$...$`` escapes, which are cleaned up afterwards.
    """
    if not name.startswith("_Z"):
        return None
    demangler = _load_demangler()
    if not demangler:
        return None
    fn, free = demangler
    status = ctypes.c_int()
    raw = fn(name.encode(), None, None, ctypes.byref(status))
    if status.value != 0 or not raw:
        return None
    try:
        text = ctypes.cast(raw, ctypes.c_char_p).value.decode("utf-8", "replace")
    finally:
        free(raw)
    for escape, char in _RUST_ESCAPES:
        text = text.replace(escape, char)
    text = _RUST_UNICODE.sub(lambda m: chr(int(m.group(1), 16)), text)
    return text


def resolve_symbol(table: SymbolTable, pattern: str) -> tuple[str, int]:
    """Find the unique symbol containing ``pattern`` in its raw or demangled
    name; an exact full-name match wins over substring matches.

    Returns the raw symbol name and its address. Deterministic for a given
    table and pattern.
    """
    if not pattern:
        raise ValueError("pattern must be non-empty")
    exact: list[SymbolEntry] = []
    partial: list[SymbolEntry] = []
    for entry in table.entries:
        names = (entry.name, demangle(entry.name))
        if pattern in (n for n in names if n is not None):
            exact.append(entry)
        elif any(n is not None and pattern in n for n in names):
            partial.append(entry)
    matches = exact if exact else partial
    if not matches:
        raise NotFound(f"no symbol matches pattern {pattern!r}")
    if len(matches) > 1:
        raise Ambiguous(pattern, sorted(f"{e.name} @ {e.address:#x}" for e in matches))
    return matches[0].name, matches[0].address
