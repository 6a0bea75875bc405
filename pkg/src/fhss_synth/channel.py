from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve, firwin

from fhss_common.iq import IqRecording
from fhss_common.logging import setup_logging
from fhss_common.models import ChannelConfig, InterferenceBurst

log = setup_logging("fhss.synth")

_INTERFERENCE_TAPS = 129


def _impulse_response(cfg: ChannelConfig) -> np.ndarray:
    span = max(t.delay_samples for t in cfg.multipath_taps) + 1
    h = np.zeros(span, dtype=np.complex128)
    for tap in cfg.multipath_taps:
        h[tap.delay_samples] += tap.complex_gain
    return h


def _interference(
    burst: InterferenceBurst, n: int, fs: float, rng: np.random.Generator
) -> np.ndarray:
    w = rng.normal(size=n) + 1j * rng.normal(size=n)
    cutoff = min(burst.bandwidth_hz / 2.0, 0.49 * fs)
    lp = firwin(_INTERFERENCE_TAPS, cutoff, fs=fs)
    x = fftconvolve(w, lp, mode="same")
    p = np.mean(np.abs(x) ** 2)
    if p > 0:
        x = x / np.sqrt(p)

    t = np.arange(n) / fs
    x = x * np.exp(2j * np.pi * burst.center_offset_hz * t)
    gate = np.mod(t, burst.burst_period_s) < burst.duty * burst.burst_period_s
    return 10.0 ** (burst.power_dbfs / 20.0) * x * gate


def noise_sigma(signal_power: float, cfg: ChannelConfig) -> float:
    """Per-component noise std for the configured SNR or absolute level."""
    if cfg.noise_std is not None:
        return float(cfg.noise_std)
    if not math.isfinite(cfg.snr_db):
        return 0.0
    return math.sqrt(signal_power / (2.0 * 10.0 ** (cfg.snr_db / 10.0)))


def apply_channel(
    clean: IqRecording, cfg: ChannelConfig, active: Optional[np.ndarray] = None
) -> IqRecording:
    """
    Multipath, CFO, interference bursts and complex AWGN.

    SNR is referenced to the mean signal power over `active` samples, by
    default every sample where the clean input is non-zero.
    """
    x = clean.samples.astype(np.complex128)
    n = x.size
    fs = clean.sample_rate_hz
    rng = np.random.default_rng(cfg.rng_seed)

    if active is None:
        active = x != 0

    y = x
    if cfg.multipath_taps:
        y = np.convolve(x, _impulse_response(cfg))[:n]
    if cfg.cfo_hz != 0.0:
        y = y * np.exp(2j * np.pi * cfg.cfo_hz * np.arange(n) / fs)

    signal_power = float(np.mean(np.abs(y[active]) ** 2)) if np.any(active) else 0.0

    for burst in cfg.interference:
        y = y + _interference(burst, n, fs, rng)

    if cfg.noise_enabled:
        sigma = noise_sigma(signal_power, cfg)
        if sigma == 0.0 and cfg.noise_std is None:
            log.warning("channel_no_noise reason=zero_signal_power")
        elif sigma > 0.0:
            noise = rng.normal(scale=sigma, size=(2, n))
            y = y + (noise[0] + 1j * noise[1])
        log.debug(
            f"channel_noise snr_db={cfg.snr_db} sigma={sigma:.6g} "
            f"signal_power={signal_power:.6g}"
        )

    return clean.with_samples(y)
