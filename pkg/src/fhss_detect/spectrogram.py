"""
Short-time Fourier transform of an IQ recording into a dB power matrix.

Rows are frequency bins in ascending absolute frequency, columns are frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.fft
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from fhss_common.errors import ConfigError
from fhss_common.iq import IqRecording
from fhss_common.models import StftConfig

POWER_FLOOR = 1e-12
PREFERRED_WINDOW = 2048

_WINDOWS = {
    "rectangular": "boxcar",
    "hann": "hann",
    "hamming": "hamming",
}


@dataclass(frozen=True)
class Spectrogram:
    power_db: np.ndarray  # [num_bins, num_frames]
    frame_times_s: np.ndarray
    bin_freqs_hz: np.ndarray
    config: StftConfig
    sample_rate_hz: float
    center_frequency_hz: float = 0.0
    capture_id: str = ""

    @property
    def shape(self) -> tuple[int, int]:
        return self.power_db.shape

    @property
    def num_bins(self) -> int:
        return int(self.power_db.shape[0])

    @property
    def num_frames(self) -> int:
        return int(self.power_db.shape[1])

    @property
    def frame_period_s(self) -> float:
        """Time between consecutive frames, R / fs."""
        return self.config.hop / self.sample_rate_hz

    @property
    def bin_width_hz(self) -> float:
        return self.sample_rate_hz / float(self.config.fft_size or self.config.window_size)

    @property
    def floor_db(self) -> float:
        return 10.0 * math.log10(POWER_FLOOR) + self.config.calibration_offset_db


def window(cfg: StftConfig) -> np.ndarray:
    try:
        name = _WINDOWS[cfg.window_kind]
    except KeyError:
        raise ConfigError(f"unknown window kind: {cfg.window_kind}") from None
    return get_window(name, cfg.window_size)


def num_frames(signal_len: int, cfg: StftConfig) -> int:
    """Frame count m = floor((N - L) / (M - L))."""
    m = cfg.window_size
    if signal_len < m:
        raise ConfigError(
            f"signal length {signal_len} is shorter than the window size {m}"
        )
    lap = int(cfg.overlap or 0)
    return (signal_len - lap) // (m - lap)


def frame_times(count: int, cfg: StftConfig, sample_rate_hz: float) -> np.ndarray:
    """Centre time of each frame."""
    return (np.arange(count) * cfg.hop + cfg.window_size / 2.0) / sample_rate_hz


def bin_freqs(cfg: StftConfig, sample_rate_hz: float, center_frequency_hz: float) -> np.ndarray:
    nfft = int(cfg.fft_size or cfg.window_size)
    return center_frequency_hz + scipy.fft.fftshift(scipy.fft.fftfreq(nfft, 1.0 / sample_rate_hz))


def linear_power(x: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """|DFT|^2 / window energy for every frame, bins fftshifted, shape [bins, frames]."""
    m = cfg.window_size
    r = cfg.hop
    nfft = int(cfg.fft_size or m)
    count = num_frames(x.size, cfg)

    w = window(cfg)
    energy = float(np.sum(w**2))
    frames = sliding_window_view(x, m)[::r][:count]

    out = np.empty((nfft, count), dtype=np.float64)
    step = cfg.chunk_frames
    for i in range(0, count, step):
        chunk = frames[i : i + step] * w
        spec = scipy.fft.fft(chunk, n=nfft, axis=1, workers=cfg.workers)
        p = (spec.real**2 + spec.imag**2) / energy
        out[:, i : i + chunk.shape[0]] = scipy.fft.fftshift(p, axes=1).T
    return out


def to_db(power: np.ndarray, calibration_offset_db: float = 0.0) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(power, POWER_FLOOR)) + calibration_offset_db


def compute(rec: IqRecording, cfg: StftConfig) -> Spectrogram:
    x = rec.samples.astype(np.complex128)
    power = linear_power(x, cfg)
    return Spectrogram(
        power_db=to_db(power, cfg.calibration_offset_db),
        frame_times_s=frame_times(power.shape[1], cfg, rec.sample_rate_hz),
        bin_freqs_hz=bin_freqs(cfg, rec.sample_rate_hz, rec.center_frequency_hz),
        config=cfg,
        sample_rate_hz=rec.sample_rate_hz,
        center_frequency_hz=rec.center_frequency_hz,
        capture_id=rec.capture_id,
    )


def auto_window(
    signal_len: int, candidates: Sequence[int], preferred: int = PREFERRED_WINDOW
) -> int:
    """
    Pick the preferred window size if offered, else the closest candidate on
    a log2 scale (ties go to the smaller). Candidates longer than the signal
    are skipped while any shorter one exists.
    """
    if not candidates:
        raise ConfigError("auto_window needs at least one candidate")
    pool = [int(c) for c in candidates if 0 < int(c) <= signal_len]
    if not pool:
        pool = [int(c) for c in candidates if int(c) > 0]
    if not pool:
        raise ConfigError(f"window candidates must be positive, got {list(candidates)}")
    target = math.log2(preferred)
    return min(pool, key=lambda c: (abs(math.log2(c) - target), c))


def auto_window_rationale(signal_len: int, candidates: Sequence[int], chosen: int) -> str:
    if chosen == PREFERRED_WINDOW:
        return f"M={chosen}: preferred window size offered among {sorted(candidates)}"
    return (
        f"M={chosen}: closest (log2) to preferred {PREFERRED_WINDOW} among "
        f"{sorted(candidates)} for signal length {signal_len}"
    )
