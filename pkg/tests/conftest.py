from __future__ import annotations

from typing import Callable, Dict, List, Sequence

import numpy as np
import pytest

from fhss_common.iq import IqRecording
from fhss_common.models import ScenarioSource
from fhss_detect.detection import BinaryMask
from fhss_synth.plan import HopPlanEntry

FS = 8.0e6
# M=256, L=128 at 8 MS/s
FINE_FRAME_S = 128 / FS


@pytest.fixture
def futaba_source() -> ScenarioSource:
    return ScenarioSource(frequency_set_hz=[-3.0e6, -1.0e6, 1.0e6, 3.0e6], shaping="constant")


@pytest.fixture
def tone_recording() -> Callable[..., IqRecording]:
    def make(n: int = 8192, freq_hz: float = 1.0e6, fs: float = FS, capture_id: str = "tone") -> IqRecording:
        t = np.arange(n) / fs
        return IqRecording(
            samples=np.exp(2j * np.pi * freq_hz * t),
            sample_rate_hz=fs,
            center_frequency_hz=2.44e9,
            capture_id=capture_id,
        )

    return make


def paint_plan(
    plan: Sequence[HopPlanEntry],
    duration_s: float,
    frame_period_s: float = FINE_FRAME_S,
    rows_per_carrier: int = 3,
) -> BinaryMask:
    """Noiseless mask of a hop plan: one row band per carrier, hops on the frame grid."""
    carriers: List[float] = sorted({h.carrier_offset_hz for h in plan})
    row_of: Dict[float, int] = {f: 1 + k * (rows_per_carrier + 2) for k, f in enumerate(carriers)}
    rows = 1 + len(carriers) * (rows_per_carrier + 2)
    cols = int(round(duration_s / frame_period_s))
    bits = np.zeros((rows, cols), dtype=bool)
    for h in plan:
        f0 = int(round(h.start_time_s / frame_period_s))
        f1 = min(cols, int(round(h.stop_time_s / frame_period_s)))
        r0 = row_of[h.carrier_offset_hz]
        bits[r0 : r0 + rows_per_carrier, f0:f1] = True
    return BinaryMask(bits=bits, frame_period_s=frame_period_s, bin_width_hz=FS / 256)


@pytest.fixture
def painter() -> Callable[..., BinaryMask]:
    return paint_plan
