from importlib import resources

import pytest

from ewapa.errors import DuplicateClass, ParseError
from ewapa.model import EventClass
from ewapa.profiles import (
    PINNED_VERSIONS,
    builtin_profile,
    builtin_profiles,
    load_profile,
    profile_from_dict,
    profile_to_dict,
    resolve_profile_arg,
    save_profile,
)

EXPECTED_NAMES = ["native", "wasm3", "wasmtime", "wasmtime_preview2", "wasmer", "wamr"]


class TestBuiltins:
    def test_six_profiles_with_stable_names(self):
        assert [p.name for p in builtin_profiles()] == EXPECTED_NAMES

    def test_native_control_hooks_libc(self):
        native = builtin_profile("native")
        assert native.wasi_hook(EventClass.READ).symbol_pattern == "fread"
        assert native.syscall_hook(EventClass.READ).kernel_symbol == "__x64_sys_read"
        assert native.init_symbol == "__libc_start_main"
        assert native.load_symbol == "main"
        assert native.comm_filter == ""

    def test_wamr_reads_via_pread(self):
        wamr = builtin_profile("wamr")
        assert wamr.syscall_hook(EventClass.READ).kernel_symbol == "__x64_sys_pread64"
        assert wamr.syscall_hook(EventClass.WRITE).kernel_symbol == "__x64_sys_pwrite64"
        assert wamr.binary_path == "iwasm"
        assert wamr.comm_filter == "iwasm"

    def test_wasm3_startup_symbols(self):
        wasm3 = builtin_profile("wasm3")
        assert wasm3.init_symbol == "m3_NewEnv"
        assert wasm3.load_symbol == "repl_load"
        assert wasm3.wasi_hook(EventClass.READ).symbol_pattern == "m3_wasi_generic_fd_read"

    def test_wasmtime_preview_generations_differ(self):
        v1 = builtin_profile("wasmtime")
        v2 = builtin_profile("wasmtime_preview2")
        assert v1.wasi_hook(EventClass.READ).symbol_pattern.startswith("wasi_common::")
        assert v2.wasi_hook(EventClass.READ).symbol_pattern.startswith("wasmtime_wasi::preview2::")
        assert "preview2" in v2.command_template
        assert v1.binary_path == v2.binary_path == "wasmtime"

    def test_wasmer_traces_plain_read_write(self):
        wasmer = builtin_profile("wasmer")
        assert wasmer.syscall_hook(EventClass.READ).kernel_symbol == "__x64_sys_read"
        assert wasmer.syscall_hook(EventClass.WRITE).kernel_symbol == "__x64_sys_write"

    def test_every_profile_has_all_five_io_hooks(self):
        for profile in builtin_profiles():
            for cls in (EventClass.READ, EventClass.WRITE, EventClass.SEEK, EventClass.OPEN, EventClass.CLOSE):
                assert profile.wasi_hook(cls) is not None, (profile.name, cls)
                assert profile.syscall_hook(cls) is not None, (profile.name, cls)

    def test_unknown_name_lists_known_ones(self):
        with pytest.raises(KeyError, match="wasm3"):
            builtin_profile("wasmedge")

    def test_pinned_versions_cover_wasm_runtimes(self):
        assert set(PINNED_VERSIONS) == set(EXPECTED_NAMES) - {"native"}


class TestSerialization:
    def test_round_trip_through_file(self, tmp_path):
        for profile in builtin_profiles():
            path = tmp_path / f"{profile.name}.yaml"
            save_profile(profile, path)
            assert load_profile(path) == profile

    def test_shipped_profile_files_match_builtins(self):
        for profile in builtin_profiles():
            shipped = resources.files("ewapa") / "profiles" / f"{profile.name}.yaml"
            assert load_profile(str(shipped)) == profile

    def test_missing_key_names_the_field(self):
        doc = profile_to_dict(builtin_profile("wasm3"))
        del doc["load_symbol"]
        with pytest.raises(ParseError, match="load_symbol"):
            profile_from_dict(doc)

    def test_duplicate_hook_class_rejected_on_load(self):
        doc = profile_to_dict(builtin_profile("wasm3"))
        doc["wasi_hooks"].append({"class": "read", "symbol_pattern": "another"})
        with pytest.raises(DuplicateClass):
            profile_from_dict(doc)

    def test_unknown_class_value_rejected(self):
        doc = profile_to_dict(builtin_profile("wasm3"))
        doc["wasi_hooks"][0]["class"] = "pread"
        with pytest.raises(ParseError, match="pread"):
            profile_from_dict(doc)

    def test_malformed_yaml_carries_line_number(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("name: x\nwasi_hooks:\n  - [unclosed\n")
        with pytest.raises(ParseError) as err:
            load_profile(path)
        assert err.value.path == str(path)

    def test_non_mapping_document_rejected(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- a\n- b\n")
        with pytest.raises(ParseError, match="mapping"):
            load_profile(path)


class TestResolveArg:
    def test_builtin_name(self):
        assert resolve_profile_arg("wamr").name == "wamr"

    def test_path_wins_over_name(self, tmp_path):
        path = tmp_path / "custom.yaml"
        save_profile(builtin_profile("wasm3"), path)
        assert resolve_profile_arg(str(path)).name == "wasm3"

    def test_unknown_value_is_a_parse_error(self):
        with pytest.raises(ParseError):
            resolve_profile_arg("not-a-profile-or-path")
