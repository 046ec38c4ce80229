import random

import pytest

from ewapa.analysis import (
    compare_auxiliary,
    detect_native_inversion,
    detect_startup_outlier,
    detect_syscall_doubling,
    estimate_buffer_ratio,
    expected_call_count,
    growth_trend,
    proportion_breakdown,
)
from ewapa.errors import (
    EmptyRuntimeSet,
    InsufficientRuntimes,
    NonIncreasingSizes,
    NonPositiveStartup,
    TooFewPoints,
    ZeroChunk,
    ZeroCount,
    ZeroWasiCount,
)
from ewapa.model import (
    AnomalyKind,
    EventClass,
    IntervalMetric,
    ProbeSpace,
    RepetitionRecord,
    SessionResult,
    WorkloadKind,
    WorkloadSpec,
)

GiB = 1 << 30

# Call counts measured on the large-file cells of the reference corpus;
# frozen here so detector arithmetic is checked against real magnitudes.
CHUNKED_READ_COUNT = 26_214_401       # 100 GiB read through 4 KiB chunks
DOUBLED_READ_COUNT = 52_428_801
WRITE_LIBC_COUNT = 1_750_000_077      # 99 GiB written in 61-byte records
WRITE_WASI_COUNT = 101_797_388
WRITE_NATIVE_SYSCALLS = 25_976_563


class TestSyscallDoubling:
    def test_fires_on_double_counts(self):
        finding = detect_syscall_doubling(CHUNKED_READ_COUNT, DOUBLED_READ_COUNT, subject="s")
        assert finding is not None
        assert finding.kind is AnomalyKind.SYSCALL_DOUBLING
        assert finding.evidence["ratio"] == pytest.approx(2.0, abs=1e-6)

    def test_quiet_on_one_to_one(self):
        assert detect_syscall_doubling(CHUNKED_READ_COUNT, CHUNKED_READ_COUNT) is None

    def test_tolerance_is_a_band_not_a_floor(self):
        assert detect_syscall_doubling(1000, 2049) is not None
        assert detect_syscall_doubling(1000, 2051) is None
        assert detect_syscall_doubling(1000, 1951) is not None
        assert detect_syscall_doubling(1000, 1949) is None

    def test_rejects_zero_wasi(self):
        with pytest.raises(ZeroWasiCount):
            detect_syscall_doubling(0, 10)


class TestBufferRatio:
    def test_write_side_counts_snap_to_17(self):
        estimate = estimate_buffer_ratio(
            libc_count=WRITE_LIBC_COUNT,
            wasi_count=WRITE_WASI_COUNT,
            syscall_count=WRITE_WASI_COUNT,
            native_syscall_count=WRITE_NATIVE_SYSCALLS,
        )
        assert estimate.presentation == "17:1:1"
        assert 17.1 < estimate.libc_to_wasi < 17.3
        assert 67.0 < estimate.native_libc_to_syscall < 67.8
        finding = estimate.finding
        assert finding is not None
        assert finding.evidence["snapped_libc_to_wasi"] == 17.0
        # Native flushes ~67 calls per syscall while the runtimes see ~17 per
        # WASI call: different buffering mechanisms, so the finding must say so.
        assert finding.evidence["mechanism_factor"] > 2.0

    def test_clean_four_to_one(self):
        estimate = estimate_buffer_ratio(libc_count=4000, wasi_count=1000, syscall_count=1000)
        assert estimate.presentation == "4:1:1"
        assert estimate.finding is not None
        assert estimate.finding.evidence["snapped_libc_to_wasi"] == 4.0

    def test_unity_ratio_without_native_reference_is_quiet(self):
        estimate = estimate_buffer_ratio(libc_count=1000, wasi_count=1000, syscall_count=1000)
        assert estimate.presentation == "1:1:1"
        assert estimate.finding is None

    def test_non_integer_ratio_not_snapped(self):
        estimate = estimate_buffer_ratio(libc_count=1500, wasi_count=1000, syscall_count=1000)
        assert estimate.presentation == "1.50:1:1"
        assert estimate.finding is None

    def test_matching_mechanisms_do_not_fire(self):
        estimate = estimate_buffer_ratio(
            libc_count=4000, wasi_count=4000, syscall_count=4000, native_syscall_count=4000
        )
        assert estimate.finding is None

    def test_zero_counts_rejected(self):
        with pytest.raises(ZeroCount):
            estimate_buffer_ratio(libc_count=0, wasi_count=1, syscall_count=1)
        with pytest.raises(ZeroCount):
            estimate_buffer_ratio(libc_count=1, wasi_count=1, syscall_count=1, native_syscall_count=0)


class TestExpectedCallCount:
    def test_hundred_gib_at_4k_chunks(self):
        assert expected_call_count(100 * GiB, 4096) == CHUNKED_READ_COUNT

    def test_exact_division_still_needs_eof_read(self):
        assert expected_call_count(8192, 4096) == 3

    def test_partial_tail_chunk(self):
        assert expected_call_count(8193, 4096) == 4

    def test_zero_chunk_rejected(self):
        with pytest.raises(ZeroChunk):
            expected_call_count(100, 0)


class TestStartupOutlier:
    def test_factor_ten_splits_the_pack(self):
        startups = {"fast": 1_000_000, "mid": 95_000_000, "slow": 2_000_000_000}
        findings = detect_startup_outlier(startups, factor=10.0)
        assert [f.subject for f in findings] == ["mid", "slow"]
        slow = findings[1]
        assert slow.evidence["ratio"] == pytest.approx(2000.0, abs=0.5)
        assert "fast" in slow.message

    def test_exactly_factor_is_not_an_outlier(self):
        findings = detect_startup_outlier({"a": 100, "b": 1000}, factor=10.0)
        assert findings == []

    def test_needs_two_runtimes(self):
        with pytest.raises(InsufficientRuntimes):
            detect_startup_outlier({"only": 5})

    def test_rejects_non_positive(self):
        with pytest.raises(NonPositiveStartup):
            detect_startup_outlier({"a": 0, "b": 5})


class TestNativeInversion:
    # Per-class WASI totals (seconds) from the large write and read cells of
    # the reference corpus: the write side inverts, the read side does not.
    WRITE_TOTALS = {"wasm3": 311.0, "wamr": 290.0, "preview2": 1026.0, "wasmer": 1775.0, "wasmtime": 419.0}
    READ_TOTALS = {"wasm3": 211.0, "wamr": 249.0, "preview2": 311.0, "wasmer": 683.0, "wasmtime": 215.0}

    def test_write_side_inverts(self):
        finding = detect_native_inversion(2701.0, self.WRITE_TOTALS, subject="write")
        assert finding is not None
        assert finding.kind is AnomalyKind.NATIVE_INVERSION
        assert "wasmer" in finding.message
        assert finding.evidence["ratio_vs_wasmer"] == pytest.approx(2701.0 / 1775.0)

    def test_read_side_does_not(self):
        assert detect_native_inversion(178.0, self.READ_TOTALS) is None

    def test_tie_is_not_inversion(self):
        assert detect_native_inversion(100.0, {"a": 100.0}) is None

    def test_needs_runtimes(self):
        with pytest.raises(EmptyRuntimeSet):
            detect_native_inversion(1.0, {})


class TestGrowthTrend:
    def test_affine_growth_never_flags(self):
        rng = random.Random(404)
        for _ in range(100):
            a = rng.uniform(0.1, 50.0)
            b = rng.uniform(1e-9, 1e-3)
            sizes = sorted(rng.sample(range(1, 10**9), rng.randint(3, 6)))
            series = [(s, a + b * s) for s in sizes]
            trend = growth_trend(series, theta=1.25)
            assert not trend.superlinear
            for ratio in trend.slope_ratios:
                assert ratio == pytest.approx(1.0)

    def test_accelerating_marginal_time_flags(self):
        series = [(1 * GiB, 2e9), (10 * GiB, 20e9), (100 * GiB, 280e9)]
        trend = growth_trend(series, theta=1.25)
        assert trend.superlinear
        assert max(trend.slope_ratios) == pytest.approx(13 / 9, rel=1e-6)

    def test_flat_then_rising_is_non_monotonic_not_superlinear(self):
        series = [(10, 100.0), (20, 90.0), (30, 95.0)]
        trend = growth_trend(series)
        assert trend.non_monotonic
        assert not trend.superlinear

    def test_two_points_give_slope_no_verdict(self):
        trend = growth_trend([(1, 1.0), (2, 5.0)])
        assert trend.slopes == (4.0,)
        assert trend.slope_ratios == ()
        assert not trend.superlinear

    def test_input_validation(self):
        with pytest.raises(TooFewPoints):
            growth_trend([(1, 1.0)])
        with pytest.raises(NonIncreasingSizes):
            growth_trend([(2, 1.0), (2, 2.0)])


class TestProportions:
    def make_result(self, wasi_ns, sys_ns, total_ns):
        metrics = {
            "u": IntervalMetric("u", EventClass.READ, ProbeSpace.USER, 1, wasi_ns, wasi_ns, wasi_ns),
            "k": IntervalMetric("k", EventClass.READ, ProbeSpace.KERNEL, 1, sys_ns, sys_ns, sys_ns),
        }
        rep = RepetitionRecord(total_ns=total_ns, startup_ns=None, metrics=metrics)
        spec = WorkloadSpec(kind=WorkloadKind.FREAD, file_size_bytes=10, chunk_bytes=1)
        return SessionResult.from_repetitions("rt", spec, [rep])

    def test_shares_of_mean_total(self):
        shares = proportion_breakdown(self.make_result(600, 250, 1000))
        read = shares[EventClass.READ]
        assert read.wasi_share == pytest.approx(0.6)
        assert read.syscall_share == pytest.approx(0.25)
        assert read.other_share == pytest.approx(0.4)
        assert not read.over_unity

    def test_async_oversubscription_reported_not_clamped(self):
        shares = proportion_breakdown(self.make_result(1500, 200, 1000))
        read = shares[EventClass.READ]
        assert read.wasi_share == pytest.approx(1.5)
        assert read.over_unity
        assert read.other_share == 0.0


class TestAuxiliaryComparison:
    # Close-call WASI totals (seconds) across the runtime set; two runtimes
    # resolve close almost entirely in user space, leaving microsecond totals.
    CLOSE = {
        "native": {EventClass.CLOSE: 35.00267},
        "wasm3": {EventClass.CLOSE: 5.17304},
        "wasmtime": {EventClass.CLOSE: 24.15975},
        "preview2": {EventClass.CLOSE: 0.00016},
        "wasmer": {EventClass.CLOSE: 0.00019},
        "wamr": {EventClass.CLOSE: 5.87338},
    }

    def test_ratios_to_minimum(self):
        table = compare_auxiliary(self.CLOSE)
        cells = table[EventClass.CLOSE]
        assert cells["preview2"].ratio_to_min == pytest.approx(1.0)
        assert cells["native"].ratio_to_min == pytest.approx(35.00267 / 0.00016, rel=1e-9)
        assert cells["native"].extreme
        assert cells["wasmer"].extreme is False

    def test_extreme_factor_configurable(self):
        table = compare_auxiliary(self.CLOSE, extreme_factor=1e9)
        assert not any(cell.extreme for cell in table[EventClass.CLOSE].values())
