import struct
import subprocess

import pytest

from ewapa.errors import Ambiguous, NotAnObjectFile, NotFound, StrippedBinary
from ewapa.symbols import demangle, list_symbols, resolve_symbol

C_SOURCE = """
int fd_read_v1(int fd) { return fd + 1; }
int fd_read_v2(int fd) { return fd + 2; }
int helper(void) { return fd_read_v1(0) + fd_read_v2(0); }
int main(void) { return helper(); }
"""

CPP_SOURCE = """
namespace wasi { namespace snapshots {
int fd_read(int fd) { return fd; }
int fd_write(int fd) { return fd + 1; }
} }
int main() { return wasi::snapshots::fd_read(0) + wasi::snapshots::fd_write(0); }
"""


@pytest.fixture(scope="module")
def c_binary(tmp_path_factory):
    directory = tmp_path_factory.mktemp("sym")
    src = directory / "case.c"
    src.write_text(C_SOURCE)
    out = directory / "case"
    subprocess.run(["gcc", str(src), "-o", str(out)], check=True)
    return out


@pytest.fixture(scope="module")
def cpp_binary(tmp_path_factory):
    directory = tmp_path_factory.mktemp("symxx")
    src = directory / "case.cpp"
    src.write_text(CPP_SOURCE)
    out = directory / "case"
    subprocess.run(["g++", str(src), "-o", str(out)], check=True)
    return out


def nm_function_names(binary) -> set[str]:
    proc = subprocess.run(["nm", "--defined-only", str(binary)], capture_output=True, text=True, check=True)
    names = set()
    for line in proc.stdout.splitlines():
        parts = line.split()
        if len(parts) == 3 and parts[1] in ("T", "t", "W", "w"):
            names.add(parts[2])
    return names


class TestListSymbols:
    def test_agrees_with_nm(self, c_binary):
        ours = set(list_symbols(c_binary).names())
        theirs = nm_function_names(c_binary)
        for name in ("fd_read_v1", "fd_read_v2", "helper", "main"):
            assert name in ours
            assert name in theirs
        # nm lists every defined text symbol including non-functions
        # (labels, ifunc resolvers); ours must never invent names.
        assert ours <= theirs | {n for n in ours if n.startswith("__")}

    def test_addresses_match_nm(self, c_binary):
        proc = subprocess.run(["nm", "--defined-only", str(c_binary)], capture_output=True, text=True, check=True)
        nm_addresses = {}
        for line in proc.stdout.splitlines():
            parts = line.split()
            if len(parts) == 3:
                nm_addresses[parts[2]] = int(parts[0], 16)
        for entry in list_symbols(c_binary).entries:
            if entry.name in ("fd_read_v1", "fd_read_v2", "helper", "main"):
                assert entry.address == nm_addresses[entry.name]

    def test_rejects_non_elf(self, tmp_path):
        text = tmp_path / "notes.txt"
        text.write_text("just text, definitely not an object file\n")
        with pytest.raises(NotAnObjectFile):
            list_symbols(text)

    def test_rejects_truncated_elf(self, tmp_path):
        stub = tmp_path / "stub"
        stub.write_bytes(b"\x7fELF")
        with pytest.raises(NotAnObjectFile):
            list_symbols(stub)

    def test_headerless_elf_reported_stripped(self, tmp_path):
        # A valid 64-bit little-endian header with e_shoff = 0: no section
        # headers at all, so no symbol table can exist.
        header = bytearray(64)
        header[:4] = b"\x7fELF"
        header[4] = 2
        header[5] = 1
        header[6] = 1
        struct.pack_into("<H", header, 16, 2)
        struct.pack_into("<H", header, 18, 0x3E)
        stub = tmp_path / "headerless"
        stub.write_bytes(bytes(header))
        with pytest.raises(StrippedBinary):
            list_symbols(stub)


class TestResolve:
    def test_unique_substring(self, c_binary):
        name, address = resolve_symbol(list_symbols(c_binary), "fd_read_v1")
        assert name == "fd_read_v1"
        assert address > 0

    def test_ambiguous_pattern_lists_candidates(self, c_binary):
        with pytest.raises(Ambiguous) as err:
            resolve_symbol(list_symbols(c_binary), "fd_read")
        assert len(err.value.candidates) == 2
        assert all("@ 0x" in c for c in err.value.candidates)
        assert err.value.candidates == sorted(err.value.candidates)

    def test_exact_match_beats_substrings(self, tmp_path):
        # "main" appears inside __libc_start_main and friends, but an exact
        # name must resolve without an ambiguity error.
        src = tmp_path / "m.c"
        src.write_text("int main_helper(void){return 0;} int main(void){return main_helper();}\n")
        out = tmp_path / "m"
        subprocess.run(["gcc", str(src), "-o", str(out)], check=True)
        name, _ = resolve_symbol(list_symbols(out), "main")
        assert name == "main"

    def test_missing_pattern(self, c_binary):
        with pytest.raises(NotFound):
            resolve_symbol(list_symbols(c_binary), "no_such_symbol_here")

    def test_empty_pattern_rejected(self, c_binary):
        with pytest.raises(ValueError):
            resolve_symbol(list_symbols(c_binary), "")


class TestDemangle:
    def test_plain_c_names_pass_through_as_none(self):
        assert demangle("fread") is None
        assert demangle("__x64_sys_read") is None

    def test_itanium_demangling(self):
        if demangle("_Z3foov") is None:
            pytest.skip("libstdc++ demangler unavailable")
        assert demangle("_Z3foov") == "foo()"

    def test_rust_legacy_escapes_cleaned(self):
        if demangle("_Z3foov") is None:
            pytest.skip("libstdc++ demangler unavailable")
        mangled = "_ZN4core3ptr13drop_in_place17h1234567890abcdefE"
        text = demangle(mangled)
        assert text is not None
        assert text.startswith("core::ptr::drop_in_place")

    def test_resolution_through_demangled_path(self, cpp_binary):
        if demangle("_Z3foov") is None:
            pytest.skip("libstdc++ demangler unavailable")
        table = list_symbols(cpp_binary)
        name, _ = resolve_symbol(table, "wasi::snapshots::fd_read")
        assert name.startswith("_ZN4wasi")
        # and the sibling symbol resolves independently
        other, _ = resolve_symbol(table, "wasi::snapshots::fd_write")
        assert other != name
