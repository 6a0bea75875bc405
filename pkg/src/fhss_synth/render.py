from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.signal import fftconvolve

from fhss_common.errors import ConfigError
from fhss_common.iq import IqRecording
from fhss_common.models import SourceProfile
from fhss_synth.plan import HopPlanEntry

RRC_SPAN_SYMBOLS = 8
_QPSK = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))


def rrc_taps(sps: float, rolloff: float, span: int = RRC_SPAN_SYMBOLS) -> np.ndarray:
    """Unit-energy root-raised-cosine impulse response, `sps` samples per symbol."""
    half = int(math.ceil(span * sps / 2))
    tau = np.arange(-half, half + 1) / sps
    b = rolloff
    h = np.empty_like(tau)

    at_zero = np.isclose(tau, 0.0)
    at_sing = np.isclose(np.abs(tau), 1.0 / (4.0 * b))
    rest = ~(at_zero | at_sing)

    t = tau[rest]
    num = np.sin(np.pi * t * (1 - b)) + 4 * b * t * np.cos(np.pi * t * (1 + b))
    den = np.pi * t * (1 - (4 * b * t) ** 2)
    h[rest] = num / den
    h[at_zero] = 1.0 - b + 4.0 * b / np.pi
    h[at_sing] = (b / np.sqrt(2.0)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * b))
        + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
    )
    return h / np.sqrt(np.sum(h**2))


def baseband_waveform(
    n: int, profile: SourceProfile, sample_rate_hz: float, rng: np.random.Generator
) -> np.ndarray:
    """Unit-power s(t) for one hop of `n` samples."""
    if profile.shaping == "constant":
        return np.ones(n, dtype=np.complex128)

    sps = sample_rate_hz / profile.symbol_rate_hz
    taps = rrc_taps(sps, profile.rolloff)
    lead = taps.size
    n_sym = int(math.ceil((n + 2 * lead) / sps)) + 1

    pulses = np.zeros(int(math.ceil(n_sym * sps)) + 1, dtype=np.complex128)
    pos = np.round(np.arange(n_sym) * sps).astype(np.int64)
    pulses[pos] = _QPSK[rng.integers(0, 4, size=n_sym)]

    shaped = fftconvolve(pulses, taps)[lead : lead + n]
    p = np.mean(np.abs(shaped) ** 2)
    if p > 0:
        shaped = shaped / np.sqrt(p)
    return shaped


def _sample_span(start_s: float, stop_s: float, fs: float, total: int) -> tuple[int, int]:
    # samples n with n/fs in [start, stop)
    n0 = int(math.ceil(start_s * fs - 1e-6))
    n1 = int(math.ceil(stop_s * fs - 1e-6))
    return max(0, n0), min(total, n1)


def render(
    plan: Sequence[HopPlanEntry],
    profile: SourceProfile,
    sample_rate_hz: float,
    *,
    num_samples: Optional[int] = None,
    seed: int = 0,
    center_frequency_hz: float = 0.0,
    capture_id: str = "",
) -> IqRecording:
    """
    Sum of gated carriers s(t)·exp(j(2πf·t + θ)) for every planned hop.

    s(t) is regenerated per hop from (seed, source_id, start) so rendering a
    union of plans equals the sum of rendering each plan.
    """
    fs = float(sample_rate_hz)
    for h in plan:
        if abs(h.carrier_offset_hz) >= fs / 2:
            raise ConfigError(
                f"carrier offset {h.carrier_offset_hz} Hz aliases at sample rate {fs} Hz "
                "(|offset| must be < sample_rate/2)"
            )

    if num_samples is None:
        end = max((h.stop_time_s for h in plan), default=0.0)
        num_samples = max(1, int(math.ceil(end * fs - 1e-6)))

    amp = 10.0 ** (profile.power_dbfs / 20.0)
    out = np.zeros(num_samples, dtype=np.complex128)
    for h in plan:
        n0, n1 = _sample_span(h.start_time_s, h.stop_time_s, fs, num_samples)
        if n1 <= n0:
            continue
        rng = np.random.default_rng(
            [seed, h.source_id, int(round(h.start_time_s * 1e9))]
        )
        s = baseband_waveform(n1 - n0, profile, fs, rng)
        t = np.arange(n0, n1) / fs
        out[n0:n1] += amp * s * np.exp(
            1j * (2.0 * np.pi * h.carrier_offset_hz * t + h.phase_rad)
        )

    return IqRecording(
        samples=out,
        sample_rate_hz=fs,
        center_frequency_hz=center_frequency_hz,
        capture_id=capture_id,
    )


def active_mask(
    plan: Sequence[HopPlanEntry], sample_rate_hz: float, num_samples: int
) -> np.ndarray:
    """Boolean per-sample mask of the union of hop intervals."""
    mask = np.zeros(num_samples, dtype=bool)
    for h in plan:
        n0, n1 = _sample_span(h.start_time_s, h.stop_time_s, sample_rate_hz, num_samples)
        mask[n0:n1] = True
    return mask
