from __future__ import annotations

import math

import numpy as np
import pytest
from pydantic import ValidationError

from fhss_common.errors import ConfigError
from fhss_common.iq import IqRecording
from fhss_common.models import StftConfig
from fhss_detect.detection import binarize, estimate_threshold
from fhss_detect.spectrogram import (
    auto_window,
    auto_window_rationale,
    bin_freqs,
    compute,
    frame_times,
    linear_power,
    num_frames,
    window,
)

FS = 8.0e6


def test_frame_count_formula():
    cfg = StftConfig(window_size=1024, overlap=512)
    assert num_frames(10000, cfg) == (10000 - 512) // 512
    assert num_frames(1024, cfg) == 1
    with pytest.raises(ConfigError, match="shorter than the window"):
        num_frames(1000, cfg)


def test_overlap_and_fft_size_defaults_and_limits():
    cfg = StftConfig(window_size=2048)
    assert cfg.overlap == 1024
    assert cfg.fft_size == 2048
    assert cfg.hop == 1024
    with pytest.raises(ValidationError):
        StftConfig(window_size=256, overlap=256)
    with pytest.raises(ValidationError):
        StftConfig(window_size=256, fft_size=128)


def test_matrix_shape_and_axes(tone_recording):
    rec = tone_recording(n=8192)
    cfg = StftConfig(window_size=256, overlap=128)
    spec = compute(rec, cfg)

    assert spec.shape == (256, (8192 - 128) // 128)
    assert spec.frame_period_s == pytest.approx(128 / FS)
    assert spec.bin_width_hz == pytest.approx(FS / 256)
    assert spec.frame_times_s[0] == pytest.approx(128 / FS)
    assert np.allclose(np.diff(spec.frame_times_s), 128 / FS)
    assert np.all(np.diff(spec.bin_freqs_hz) > 0)
    assert spec.bin_freqs_hz[128] == pytest.approx(2.44e9)
    assert spec.capture_id == "tone"


def test_bin_centred_tone_peaks_at_its_bin(tone_recording):
    rec = tone_recording(n=8192, freq_hz=1.0e6)
    spec = compute(rec, StftConfig(window_size=256, overlap=128, window_kind="rectangular"))

    peak_rows = np.argmax(spec.power_db, axis=0)
    assert np.all(peak_rows == 128 + 32)
    assert spec.bin_freqs_hz[160] == pytest.approx(2.44e9 + 1.0e6)
    # |sum w|^2 / sum w^2 = M for a rectangular window
    assert np.allclose(spec.power_db[160], 10 * math.log10(256), atol=1e-3)


def test_hann_tone_level_and_leakage(tone_recording):
    rec = tone_recording(n=8192, freq_hz=1.0e6)
    spec = compute(rec, StftConfig(window_size=256, overlap=128, window_kind="hann"))

    col = spec.power_db[:, 5]
    assert col[160] == pytest.approx(10 * math.log10(2 * 256 / 3), abs=1e-3)
    assert col[159] == pytest.approx(col[160] - 20 * math.log10(2), abs=1e-3)
    assert col[163] < -80


def test_linear_power_matches_direct_dft():
    rng = np.random.default_rng(0)
    x = rng.normal(size=5000) + 1j * rng.normal(size=5000)
    cfg = StftConfig(window_size=512, overlap=200, window_kind="hamming", fft_size=1024)
    got = linear_power(x, cfg)

    w = window(cfg)
    hop = 512 - 200
    count = num_frames(x.size, cfg)
    assert got.shape == (1024, count)
    for i in (0, 3, count - 1):
        seg = x[i * hop : i * hop + 512] * w
        ref = np.abs(np.fft.fftshift(np.fft.fft(seg, n=1024))) ** 2 / np.sum(w**2)
        assert np.allclose(got[:, i], ref, rtol=1e-9, atol=1e-9)


def test_chunking_does_not_change_the_result():
    rng = np.random.default_rng(1)
    x = rng.normal(size=20000) + 1j * rng.normal(size=20000)
    a = linear_power(x, StftConfig(window_size=256, chunk_frames=7))
    b = linear_power(x, StftConfig(window_size=256, chunk_frames=512, workers=2))
    assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_silence_sits_on_the_power_floor():
    rec = IqRecording(samples=np.zeros(4096, dtype=np.complex64), sample_rate_hz=FS)
    spec = compute(rec, StftConfig(window_size=512, calibration_offset_db=3.0))
    assert np.allclose(spec.power_db, spec.floor_db)
    assert spec.floor_db == pytest.approx(-117.0)


def test_frame_times_and_bin_freqs_helpers():
    cfg = StftConfig(window_size=4, overlap=2)
    assert frame_times(3, cfg, 4.0).tolist() == [0.5, 1.0, 1.5]
    assert bin_freqs(cfg, 4.0, 10.0).tolist() == [8.0, 9.0, 10.0, 11.0]


def test_auto_window_prefers_2048():
    assert auto_window(10**6, [512, 1024, 2048, 4096]) == 2048
    assert auto_window(10**6, [4096, 512]) == 4096
    assert auto_window(10**6, [1024, 4096]) == 1024
    # candidates longer than the signal are skipped
    assert auto_window(1500, [512, 1024, 2048]) == 1024
    with pytest.raises(ConfigError):
        auto_window(1000, [])
    assert "preferred" in auto_window_rationale(10**6, [512, 2048], 2048)


def test_shifting_by_one_hop_shifts_one_column():
    rng = np.random.default_rng(2)
    x = rng.normal(size=6000) + 1j * rng.normal(size=6000)
    cfg = StftConfig(window_size=256, overlap=128)
    a = linear_power(x[128:], cfg)
    b = linear_power(x, cfg)
    assert np.allclose(a[:, : a.shape[1] - 1], b[:, 1 : a.shape[1]], rtol=1e-9, atol=1e-12)


def test_db_conversion_keeps_the_column_argmax(tone_recording):
    rec = tone_recording(n=4096, freq_hz=-2.0e6)
    cfg = StftConfig(window_size=512)
    lin = linear_power(rec.samples, cfg)
    spec = compute(rec, cfg)
    assert np.array_equal(np.argmax(lin, axis=0), np.argmax(spec.power_db, axis=0))


@pytest.mark.parametrize("kind", ["rectangular", "hann", "hamming"])
def test_bin_sum_matches_windowed_frame_energy(kind):
    rng = np.random.default_rng(7)
    x = rng.normal(size=6000) + 1j * rng.normal(size=6000)
    cfg = StftConfig(window_size=384, overlap=100, window_kind=kind, fft_size=512)
    got = linear_power(x, cfg)

    w = window(cfg)
    hop = 384 - 100
    # |X|^2 / sum(w^2) summed over nfft bins carries a factor nfft
    for i in range(got.shape[1]):
        seg = x[i * hop : i * hop + 384] * w
        energy = 512 * np.sum(np.abs(seg) ** 2) / np.sum(w**2)
        assert got[:, i].sum() == pytest.approx(energy, rel=1e-6)


def _runs_per_column(bits: np.ndarray) -> np.ndarray:
    rising = bits & ~np.vstack([np.zeros((1, bits.shape[1]), dtype=bool), bits[:-1]])
    return rising.sum(axis=0)


def _smallest_resolving_window(delta_hz: float, sizes) -> int:
    n = np.arange(8192)
    f1 = 1.0e6
    x = np.exp(2j * np.pi * f1 * n / FS) + np.exp(1j * (2 * np.pi * (f1 + delta_hz) * n / FS + 0.3))
    rec = IqRecording(samples=x, sample_rate_hz=FS)
    for m in sizes:
        spec = compute(rec, StftConfig(window_size=m))
        mask = binarize(spec, estimate_threshold(spec).mu)
        if np.all(_runs_per_column(mask.bits) == 2):
            return m
    return 0


def test_wider_tone_spacing_resolves_with_shorter_windows():
    sizes = [64, 128, 256, 512, 1024]
    deltas = [125.0e3, 250.0e3, 500.0e3, 1.0e6]
    smallest = [_smallest_resolving_window(d, sizes) for d in deltas]

    # Hann puts a bin-centred tone on three bins; a free bin between needs 4 bins of spacing
    assert smallest == [256, 128, 64, 64]
    assert all(b <= a for a, b in zip(smallest, smallest[1:]))
