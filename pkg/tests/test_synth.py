from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from fhss_common.errors import ConfigError
from fhss_common.iq import IqRecording
from fhss_common.models import (
    GUARD_ORDER_MSG,
    ChannelConfig,
    MultipathTap,
    Scenario,
    ScenarioSource,
    SourceProfile,
)
from fhss_synth.channel import apply_channel, noise_sigma
from fhss_synth.plan import build_hop_plan, complete_hops
from fhss_synth.render import active_mask, baseband_waveform, render, rrc_taps
from fhss_synth.scenarios import (
    SELECTIVE_CARRIERS_HZ,
    get_preset,
    load_truth,
    preset_names,
    save_truth,
    synthesize,
)

FS = 8.0e6


def test_futaba_timing_closes_the_period():
    p = SourceProfile()
    d1, d2, d3 = p.guard_times_s
    assert math.isclose(3 * p.dwell_time_s + d1 + d2 + d3, 6.8e-3, rel_tol=1e-12)
    assert p.pattern_offsets_s() == pytest.approx((0.0, 1.94e-3, 4.18e-3))


def test_fifty_ms_holds_twenty_two_complete_hops(futaba_source):
    plan = build_hop_plan(futaba_source, 0.05)

    assert len(plan) == 23
    assert len(complete_hops(plan)) == 22
    last = plan[-1]
    assert last.truncated
    assert last.start_time_s == pytest.approx(49.54e-3)
    assert last.stop_time_s == pytest.approx(0.05)
    assert all(h.dwell_time_s == pytest.approx(1.44e-3) for h in complete_hops(plan))


def test_hop_sequence_follows_f1_f1_f2_f3_f3_f4(futaba_source):
    plan = build_hop_plan(futaba_source, 0.05)
    f = futaba_source.frequency_set_hz
    expected = [f[0], f[0], f[1], f[2], f[2], f[3]]
    assert [h.carrier_offset_hz for h in plan[:12]] == expected * 2


def test_starts_repeat_every_fundamental_period(futaba_source):
    plan = build_hop_plan(futaba_source, 0.05, start_offset_s=0.3e-3)
    starts = np.array([h.start_time_s for h in plan])
    assert starts[0] == pytest.approx(0.3e-3)
    assert np.allclose(starts[3:] - starts[:-3], 6.8e-3)


def test_guard_order_violation_names_the_rule():
    with pytest.raises(ValidationError, match="dt1 < dt2 < dt3"):
        SourceProfile(guard_times_s=(0.8e-3, 0.5e-3, 1.18e-3))
    assert "dt1 < dt2 < dt3" in GUARD_ORDER_MSG


def test_period_mismatch_is_rejected():
    with pytest.raises(ValidationError, match="fundamental period"):
        SourceProfile(fundamental_period_s=7.0e-3)


def test_hop_sequence_must_index_the_frequency_set():
    with pytest.raises(ValidationError):
        SourceProfile(frequency_set_hz=[1.0e6, 2.0e6], hop_sequence=[0, 1, 2])


def test_plan_rejects_bad_arguments(futaba_source):
    with pytest.raises(ConfigError):
        build_hop_plan(futaba_source, 0.0)
    with pytest.raises(ConfigError):
        build_hop_plan(futaba_source, 0.05, start_offset_s=-1.0)
    with pytest.raises(ConfigError):
        build_hop_plan(SourceProfile(), 0.05)


def test_random_phases_and_jitter_stay_in_range():
    src = ScenarioSource(frequency_set_hz=[1.0e6], hop_sequence=[], dwell_jitter_s=0.2e-3)
    plan = build_hop_plan(src, 0.05, rng=np.random.default_rng(3))
    room = (1.44e-3 + 0.5e-3, 1.44e-3 + 0.8e-3, 1.44e-3 + 1.18e-3)

    for k, h in enumerate(complete_hops(plan)):
        assert 0.0 <= h.phase_rad < 2 * np.pi
        assert 1.24e-3 - 1e-12 <= h.dwell_time_s <= min(1.64e-3, room[k % 3]) + 1e-12
    assert len({round(h.dwell_time_s, 9) for h in plan}) > 1


def test_render_gates_unit_carriers(futaba_source):
    plan = build_hop_plan(futaba_source, 6.8e-3)
    rec = render(plan, futaba_source, FS, num_samples=54400)
    mag = np.abs(rec.samples)

    assert np.allclose(mag[:11520], 1.0, atol=1e-6)
    assert np.all(mag[11520:15520] == 0)
    assert np.allclose(mag[15520:27040], 1.0, atol=1e-6)
    assert np.array_equal(active_mask(plan, FS, 54400), mag > 0)


def test_render_carrier_frequency(futaba_source):
    plan = build_hop_plan(futaba_source, 1.0e-3)
    rec = render(plan, futaba_source, FS, num_samples=8000)
    spectrum = np.abs(np.fft.fft(rec.samples.astype(np.complex128)))
    freqs = np.fft.fftfreq(8000, 1 / FS)
    assert freqs[np.argmax(spectrum)] == pytest.approx(-3.0e6)


def test_render_is_linear_over_plan_unions():
    src = ScenarioSource(frequency_set_hz=[-2.0e6, 2.0e6], hop_sequence=[], shaping="rrc")
    plan = build_hop_plan(src, 0.02, rng=np.random.default_rng(1))
    a, b = plan[::2], plan[1::2]
    n = 160000

    whole = render(plan, src, FS, num_samples=n, seed=9).samples
    parts = render(a, src, FS, num_samples=n, seed=9).samples + render(b, src, FS, num_samples=n, seed=9).samples
    assert np.array_equal(whole, parts)


def test_render_rejects_aliased_carriers():
    src = ScenarioSource(frequency_set_hz=[4.0e6], hop_sequence=[])
    plan = build_hop_plan(src, 1.0e-3)
    with pytest.raises(ConfigError, match="aliases"):
        render(plan, src, FS)


def test_rrc_pulse_and_waveform_power():
    taps = rrc_taps(6.4, 0.35)
    assert np.sum(taps**2) == pytest.approx(1.0)
    assert np.allclose(taps, taps[::-1])

    s = baseband_waveform(20000, SourceProfile(), FS, np.random.default_rng(0))
    assert s.shape == (20000,)
    assert np.mean(np.abs(s) ** 2) == pytest.approx(1.0)


def test_noise_follows_snr_over_active_samples():
    x = np.zeros(400000, dtype=np.complex64)
    x[:200000] = 1.0
    clean = IqRecording(samples=x, sample_rate_hz=FS)
    y = apply_channel(clean, ChannelConfig(snr_db=10.0, rng_seed=1))

    noise = y.samples.astype(np.complex128) - x
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(0.1, rel=0.02)


def test_noise_sigma_modes():
    assert noise_sigma(1.0, ChannelConfig()) == 0.0
    assert noise_sigma(1.0, ChannelConfig(noise_std=0.5)) == 0.5
    assert noise_sigma(2.0, ChannelConfig(snr_db=0.0)) == pytest.approx(1.0)


def test_selective_channel_fades_f2_and_f4():
    cfg = get_preset("selective").channel.model_copy(update={"snr_db": float("inf")})
    t = np.arange(80000) / FS
    power = []
    for f in SELECTIVE_CARRIERS_HZ:
        clean = IqRecording(samples=np.exp(2j * np.pi * f * t), sample_rate_hz=FS)
        y = apply_channel(clean, cfg).samples[10:]
        h = 1.0 + 0.8 * np.exp(-2j * np.pi * f / FS)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(abs(h) ** 2, rel=1e-3)
        power.append(np.mean(np.abs(y) ** 2))

    fade_db = 10 * np.log10(power[0] / np.array(power))
    assert fade_db[2] == pytest.approx(0.0, abs=0.1)
    assert fade_db[1] == pytest.approx(9.6, abs=0.05)
    assert fade_db[3] == pytest.approx(12.0, abs=0.05)



def test_cfo_rotates_the_signal():
    clean = IqRecording(samples=np.ones(4000, dtype=np.complex64), sample_rate_hz=FS)
    y = apply_channel(clean, ChannelConfig(cfo_hz=1.0e3)).samples
    expected = np.exp(2j * np.pi * 1.0e3 * np.arange(4000) / FS)
    assert np.allclose(y, expected, atol=1e-5)


def test_synthesize_is_deterministic_per_seed():
    sc = get_preset("futaba-desk")
    a = synthesize(sc.with_seed(7))
    b = synthesize(sc.with_seed(7))
    c = synthesize(sc.with_seed(8))

    assert np.array_equal(a.recording.samples, b.recording.samples)
    assert a.truth == b.truth
    assert not np.array_equal(a.recording.samples, c.recording.samples)


def test_synthesized_truth_and_length():
    res = synthesize(get_preset("futaba-desk"))
    assert len(res.recording) == 400000
    assert len(res.truth) == 23
    assert sum(not h.truncated for h in res.truth) == 22
    assert res.recording.capture_id == "futaba-desk-seed0"


def test_two_sources_truth_is_sorted_and_labelled():
    res = synthesize(get_preset("two-sources"))
    starts = [h.start_time_s for h in res.truth]
    assert starts == sorted(starts)
    assert {h.source_id for h in res.truth} == {0, 1}
    b = [h for h in res.truth if h.source_id == 1]
    assert b[0].start_time_s == pytest.approx(0.5e-3)


def test_close_pair_shifts_the_second_controller():
    res = synthesize(get_preset("close-pair"))
    a = [h for h in res.truth if h.source_id == 0]
    b = [h for h in res.truth if h.source_id == 1]
    assert b[0].start_time_s == pytest.approx(a[0].start_time_s + 0.6e-3)
    for ha, hb in zip(a, b):
        assert hb.carrier_offset_hz - ha.carrier_offset_hz == pytest.approx(31.25e3)


def test_truth_file_round_trip(tmp_path):
    res = synthesize(get_preset("futaba-desk").with_seed(3))
    save_truth(res, tmp_path / "truth.json")
    tf = load_truth(tmp_path / "truth.json")

    assert tf.capture_id == res.recording.capture_id
    assert tf.hops == res.truth
    assert tf.center_frequency_hz == 2.44e9


def test_noise_only_preset_has_unit_component_noise():
    res = synthesize(get_preset("noise-only"))
    x = res.recording.samples
    assert res.truth == []
    assert np.var(x.real) == pytest.approx(1.0, rel=0.02)
    assert np.var(x.imag) == pytest.approx(1.0, rel=0.02)


def test_presets_registry():
    assert preset_names() == sorted(
        [
            "futaba-desk",
            "futaba-fidelity",
            "futaba-rrc",
            "two-sources",
            "close-pair",
            "selective",
            "noise-only",
        ]
    )
    for name in preset_names():
        assert isinstance(get_preset(name), Scenario)
    with pytest.raises(ConfigError, match="unknown scenario preset"):
        get_preset("nope")


def test_scenario_with_seed_derives_both_streams():
    sc = get_preset("futaba-desk")
    a, b = sc.with_seed(1), sc.with_seed(2)
    assert a.seed != b.seed
    assert a.channel.rng_seed != b.channel.rng_seed
    assert a.with_snr(0.0).channel.snr_db == 0.0
