from __future__ import annotations

import numpy as np
import pytest

from conftest import FINE_FRAME_S, paint_plan
from fhss_common.errors import ConfigError
from fhss_common.models import ScenarioSource
from fhss_detect.classification import (
    PeriodEstimate,
    biased_acf,
    co_sourced,
    estimate_period,
    group_hops,
    occupancy_series,
    onset_series,
    series_for,
)
from fhss_detect.detection import BinaryMask
from fhss_detect.extraction import HopRecord, extract_hops, prune_hops
from fhss_detect.pipeline import PipelineRunner
from fhss_eval.matching import match_hops
from fhss_synth.plan import build_hop_plan
from fhss_synth.scenarios import get_preset, synthesize

T1 = 6.8e-3
SOURCE_A_HZ = [-3.0e6, -2.0e6, -1.0e6, -0.5e6]
SOURCE_B_HZ = [0.5e6, 1.0e6, 2.0e6, 3.0e6]


def _hop(start_s: float, freq_hz: float = 0.0, frame_period_s: float = FINE_FRAME_S) -> HopRecord:
    frame = int(round(start_s / frame_period_s))
    return HopRecord(
        start_time_s=start_s,
        stop_time_s=start_s + 1.44e-3,
        dwell_time_s=1.44e-3,
        center_frequency_hz=freq_hz,
        bandwidth_hz=1.0e5,
        start_frame=frame,
        stop_frame=frame + 89,
        start_bin=0,
        stop_bin=2,
    )


def _futaba_period(frame_period_s: float = FINE_FRAME_S) -> PeriodEstimate:
    return PeriodEstimate(
        t1_s=T1,
        peak_lags_s=(1.94e-3, 2.24e-3, 4.18e-3, T1),
        acf=np.zeros(4),
        frame_period_s=frame_period_s,
    )


def _two_source_starts(base_s: float, periods: int = 5):
    offsets = (0.0, 1.94e-3, 4.18e-3)
    a = [base_s + p * T1 + o for p in range(periods) for o in offsets]
    b = [s + 0.5e-3 for s in a]
    return a, b


def test_biased_acf_matches_direct_sum():
    rng = np.random.default_rng(0)
    x = rng.normal(size=200)
    got = biased_acf(x)
    assert got.shape == (200,)
    for k in (0, 1, 17, 199):
        assert got[k] == pytest.approx(np.dot(x[: 200 - k], x[k:]) / 200, rel=1e-9, abs=1e-12)


def test_onset_series_marks_hop_starts():
    mask = BinaryMask(bits=np.zeros((4, 10), dtype=bool))
    hops = [_hop(0.0, frame_period_s=1.0), _hop(4.0, frame_period_s=1.0), _hop(4.0, 1.0, 1.0)]
    x = onset_series(mask, hops)
    assert x.sum() == pytest.approx(0.0, abs=1e-12)
    assert x[4] - x[0] == pytest.approx(1.0)
    assert x[1] == pytest.approx(-0.3)


def test_onset_series_rejects_frames_outside_the_mask():
    mask = BinaryMask(bits=np.zeros((4, 10), dtype=bool))
    with pytest.raises(ConfigError):
        onset_series(mask, [_hop(12.0, frame_period_s=1.0)])


def test_occupancy_series_counts_set_bins():
    bits = np.zeros((4, 3), dtype=bool)
    bits[:, 0] = True
    bits[0, 1] = True
    x = occupancy_series(BinaryMask(bits=bits))
    assert x.tolist() == pytest.approx([4 - 5 / 3, 1 - 5 / 3, -5 / 3])
    assert np.array_equal(series_for(BinaryMask(bits=bits), "occupancy"), x)
    with pytest.raises(ConfigError, match="unknown series kind"):
        series_for(BinaryMask(bits=bits), "energy")


def test_period_of_a_single_painted_source(futaba_source):
    plan = build_hop_plan(futaba_source, 0.05)
    mask = paint_plan(plan, 0.05)
    hops = prune_hops(extract_hops(mask))
    assert len(hops) == len(plan)

    period = estimate_period(onset_series(mask, hops), FINE_FRAME_S)
    assert period.t1_frames == 425
    assert period.t1_s == pytest.approx(T1)
    assert period.peak_lags_s[-1] == period.t1_s
    assert period.acf.size == 1251
    assert period.lags_s[1] == pytest.approx(FINE_FRAME_S)

    # all genuine offsets within 1 ms and T1 - 1 ms show up
    for lag in (1.94e-3, 2.24e-3, 2.62e-3, 4.18e-3, 4.56e-3, 4.86e-3):
        assert min(abs(p - lag) for p in period.peak_lags_s) <= FINE_FRAME_S


@pytest.mark.parametrize("guards", [(0.4e-3, 0.9e-3, 1.18e-3), (0.6e-3, 0.8e-3, 1.08e-3)])
def test_period_for_other_guard_triples(guards):
    src = ScenarioSource(frequency_set_hz=SOURCE_A_HZ, guard_times_s=guards, shaping="constant")
    mask = paint_plan(build_hop_plan(src, 0.05), 0.05)
    hops = prune_hops(extract_hops(mask))
    period = estimate_period(onset_series(mask, hops), FINE_FRAME_S)
    assert abs(period.t1_s - T1) <= FINE_FRAME_S


def test_estimate_period_argument_checks():
    x = np.zeros(100)
    x[::10] = 1.0
    with pytest.raises(ConfigError):
        estimate_period(x, 0.0)
    with pytest.raises(ConfigError):
        estimate_period(x, 1.0, min_lag_s=2.0, max_lag_s=20.0, rho=0.0)
    with pytest.raises(ConfigError, match="too short"):
        estimate_period(x, 1.0, min_lag_s=2.0, max_lag_s=60.0)
    with pytest.raises(ConfigError, match="no whole frame"):
        estimate_period(x, 1.0, min_lag_s=5.2, max_lag_s=5.8)
    with pytest.raises(ConfigError, match="constant"):
        estimate_period(np.zeros(100), 1.0, min_lag_s=2.0, max_lag_s=20.0)

    period = estimate_period(x, 1.0, min_lag_s=2.0, max_lag_s=20.0)
    assert period.t1_s == 10.0


def test_co_sourced_follows_the_peak_lags():
    period = _futaba_period()
    tol = 2 * FINE_FRAME_S
    assert co_sourced(1.0e-3 + 1.94e-3, 1.0e-3, period, tol)
    assert co_sourced(1.0e-3, 1.0e-3 + 1.94e-3, period, tol)
    assert co_sourced(3 * T1 + 2.24e-3, 0.0, period, tol)
    assert co_sourced(5 * T1, 0.0, period, tol)
    assert not co_sourced(0.5e-3, 0.0, period, tol)
    assert not co_sourced(2.12e-3, 0.0, period, tol)


def test_group_hops_separates_two_offset_sources():
    a, b = _two_source_starts(0.3e-3)
    hops = [_hop(s, -1.0e6) for s in a] + [_hop(s, 1.0e6) for s in b]
    res = group_hops(hops, _futaba_period(), 2 * FINE_FRAME_S)

    assert res.num_sources == 2
    assert set(res.source_ids[: len(a)]) == {0}
    assert set(res.source_ids[len(a) :]) == {1}
    assert res.sources[0].hop_indices == tuple(range(len(a)))
    assert res.sources[0].period_s == T1
    assert res.sources[0].peak_lags_s[-1] == T1


def test_group_hops_is_shift_invariant():
    a, b = _two_source_starts(0.3e-3)
    starts = a + b
    period = _futaba_period()
    base = group_hops([_hop(s) for s in starts], period, 2 * FINE_FRAME_S)
    for shift in (0.123e-3, 2.5e-3, 3 * T1 + 0.01e-3):
        moved = group_hops([_hop(s + shift) for s in starts], period, 2 * FINE_FRAME_S)
        assert moved.source_ids == base.source_ids


def test_group_hops_ignores_input_order():
    a, b = _two_source_starts(1.1e-3)
    hops = [_hop(s, -1.0e6) for s in a] + [_hop(s, 1.0e6) for s in b]
    period = _futaba_period()
    base = group_hops(hops, period, 2 * FINE_FRAME_S)

    perm = np.random.default_rng(4).permutation(len(hops))
    shuffled = group_hops([hops[i] for i in perm], period, 2 * FINE_FRAME_S)
    assert shuffled.source_ids == tuple(base.source_ids[i] for i in perm)
    assert shuffled.num_sources == base.num_sources


def test_group_hops_argument_checks():
    period = _futaba_period()
    with pytest.raises(ConfigError, match="frame duration"):
        group_hops([_hop(0.0)], period, FINE_FRAME_S / 2)
    empty = PeriodEstimate(t1_s=T1, peak_lags_s=(), acf=np.zeros(1), frame_period_s=FINE_FRAME_S)
    with pytest.raises(ConfigError, match="peak set is empty"):
        group_hops([_hop(0.0)], empty, FINE_FRAME_S)
    assert group_hops([], period, FINE_FRAME_S).source_ids == ()


def test_painted_two_source_masks_group_without_mistakes():
    rng = np.random.default_rng(123)
    duration = 0.05
    for _ in range(20):
        u = float(rng.uniform(0.0, T1))
        src_a = ScenarioSource(frequency_set_hz=SOURCE_A_HZ, shaping="constant")
        src_b = ScenarioSource(frequency_set_hz=SOURCE_B_HZ, shaping="constant")
        plan = build_hop_plan(src_a, duration, u) + build_hop_plan(
            src_b, duration, u + 0.5e-3, source_id=1
        )
        mask = paint_plan(plan, duration)
        hops = prune_hops(extract_hops(mask))

        period = estimate_period(onset_series(mask, hops), FINE_FRAME_S)
        assert abs(period.t1_s - T1) <= FINE_FRAME_S
        res = group_hops(hops, period, 2 * FINE_FRAME_S)
        assert res.num_sources == 2

        # source A owns the four lowest row bands
        truth = [0 if h.start_bin < 4 * 5 + 1 else 1 for h in hops]
        pairs = set(zip(truth, res.source_ids))
        assert len(pairs) == 2
        assert {t for t, _ in pairs} == {0, 1}


@pytest.mark.slow
def test_desk_period_at_zero_db():
    runner = PipelineRunner()
    for seed in range(20):
        res = synthesize(get_preset("futaba-desk").with_snr(0.0).with_seed(seed))
        out = runner.run(res.recording)
        assert out.period is not None
        assert abs(out.period.t1_s - T1) <= out.mask.frame_period_s


@pytest.mark.slow
def test_two_sources_preset_end_to_end():
    runner = PipelineRunner({"stft": {"window_size": 256, "overlap": 128}})
    for seed in range(3):
        res = synthesize(get_preset("two-sources").with_seed(seed))
        out = runner.run(res.recording)
        assert out.assignment.num_sources == 2

        m = match_hops(
            res.truth,
            out.hops,
            0.72e-3,
            center_frequency_hz=res.recording.center_frequency_hz,
            bin_width_hz=out.mask.bin_width_hz,
        )
        assert m.n_matched >= 40
        pairs = {(res.truth[i].source_id, out.source_ids[j]) for i, j in m.pairs}
        assert len(pairs) == 2
        assert {t for t, _ in pairs} == {0, 1}
        assert {s for _, s in pairs} == {0, 1}
