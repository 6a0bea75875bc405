from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Union

import numpy as np
from pydantic import BaseModel, Field

from fhss_common.config import load_json
from fhss_common.errors import ConfigError, RecordingError
from fhss_common.iq import IqRecording
from fhss_common.logging import setup_logging
from fhss_common.models import ChannelConfig, MultipathTap, Scenario, ScenarioSource
from fhss_synth.channel import apply_channel
from fhss_synth.plan import HopPlanEntry, build_hop_plan
from fhss_synth.render import active_mask, render

log = setup_logging("fhss.synth")


class TruthFile(BaseModel):
    capture_id: str
    scenario: str
    sample_rate_hz: float = Field(..., gt=0)
    center_frequency_hz: float = 0.0
    duration_s: float = Field(..., gt=0)
    hops: List[HopPlanEntry] = Field(default_factory=list)


@dataclass(frozen=True)
class SynthResult:
    scenario: Scenario
    recording: IqRecording
    clean: IqRecording
    truth: List[HopPlanEntry]

    def truth_file(self) -> TruthFile:
        return TruthFile(
            capture_id=self.recording.capture_id,
            scenario=self.scenario.name,
            sample_rate_hz=self.scenario.sample_rate_hz,
            center_frequency_hz=self.scenario.center_frequency_hz,
            duration_s=self.scenario.duration_s,
            hops=self.truth,
        )


def synthesize(scenario: Scenario) -> SynthResult:
    """Render every source, sum them and pass the result through the channel."""
    fs = scenario.sample_rate_hz
    n = int(round(scenario.duration_s * fs))
    if n < 1:
        raise ConfigError(
            f"duration_s={scenario.duration_s} gives no samples at {fs} Hz"
        )
    capture_id = scenario.resolved_capture_id

    clean = np.zeros(n, dtype=np.complex128)
    active = np.zeros(n, dtype=bool)
    truth: List[HopPlanEntry] = []
    for sid, src in enumerate(scenario.sources):
        plan = build_hop_plan(
            src,
            scenario.duration_s,
            src.start_offset_s,
            source_id=sid,
            rng=np.random.default_rng([scenario.seed, sid]),
        )
        part = render(plan, src, fs, num_samples=n, seed=scenario.seed)
        clean += part.samples
        active |= active_mask(plan, fs, n)
        truth.extend(plan)

    truth.sort(key=lambda h: (h.start_time_s, h.source_id))
    clean_rec = IqRecording(
        samples=clean,
        sample_rate_hz=fs,
        center_frequency_hz=scenario.center_frequency_hz,
        capture_id=capture_id,
    )
    noisy = apply_channel(clean_rec, scenario.channel, active=active)
    log.info(
        f"synthesized scenario={scenario.name} capture_id={capture_id} "
        f"samples={n} hops={len(truth)} snr_db={scenario.channel.snr_db}"
    )
    return SynthResult(scenario=scenario, recording=noisy, clean=clean_rec, truth=truth)


def save_truth(result: SynthResult, path: Union[str, Path]) -> None:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(result.truth_file().model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise RecordingError(f"cannot write truth file: {e}") from e


def load_truth(path: Union[str, Path]) -> TruthFile:
    try:
        return TruthFile.model_validate(load_json(path))
    except FileNotFoundError as e:
        raise RecordingError(str(e)) from e


# --- presets -----------------------------------------------------------------

# Carriers sit on STFT bin centres for every power-of-two window at the
# preset's sample rate: 1 MHz steps at 8 MS/s, 156.25 kHz steps at 80 MS/s.
DESK_CARRIERS_HZ = [-3.0e6, -1.0e6, 1.0e6, 3.0e6]
FIDELITY_CARRIERS_HZ = [-30.0e6, -10.0e6, 5.0e6, 25.0e6]
# f1, f3 near the 1 + 0.8z^-1 peak; f2 and f4 sit 9.6 dB and 12.0 dB below it
SELECTIVE_CARRIERS_HZ = [0.0, 3.1875e6, 0.25e6, 3.421875e6]
# 8 bins at M=2048, 2 bins at M=512
CLOSE_PAIR_SPACING_HZ = 31.25e3


def futaba_desk() -> Scenario:
    return Scenario(
        name="futaba-desk",
        sample_rate_hz=8.0e6,
        duration_s=0.05,
        sources=[ScenarioSource(frequency_set_hz=DESK_CARRIERS_HZ, shaping="constant")],
        channel=ChannelConfig(snr_db=5.0),
    )


def futaba_fidelity() -> Scenario:
    return Scenario(
        name="futaba-fidelity",
        sample_rate_hz=80.0e6,
        duration_s=0.05,
        sources=[
            ScenarioSource(frequency_set_hz=FIDELITY_CARRIERS_HZ, shaping="constant")
        ],
        channel=ChannelConfig(snr_db=5.0),
    )


def futaba_rrc() -> Scenario:
    """Full-band run with RRC-shaped QPSK hops instead of tones."""
    return Scenario(
        name="futaba-rrc",
        sample_rate_hz=80.0e6,
        duration_s=0.05,
        sources=[ScenarioSource(frequency_set_hz=FIDELITY_CARRIERS_HZ, shaping="rrc")],
        channel=ChannelConfig(snr_db=5.0),
    )


def two_sources() -> Scenario:
    # phase offset below the 1 ms minimum lag so the cross-source ACF peak
    # stays out of the admitted peak set; cross-source start differences sit
    # >= 0.12 ms from every genuine lag, which needs tol <= 40 us (M=256)
    return Scenario(
        name="two-sources",
        sample_rate_hz=8.0e6,
        duration_s=0.05,
        sources=[
            ScenarioSource(
                frequency_set_hz=[-3.0e6, -2.0e6, -1.0e6, -0.5e6], shaping="constant"
            ),
            ScenarioSource(
                frequency_set_hz=[0.5e6, 1.0e6, 2.0e6, 3.0e6],
                shaping="constant",
                start_offset_s=0.5e-3,
            ),
        ],
        channel=ChannelConfig(snr_db=10.0),
    )


def close_pair() -> Scenario:
    """
    Two controllers on the same pattern, one shifted by CLOSE_PAIR_SPACING_HZ
    and 0.6 ms. Short windows blur them into one blob, long ones stretch the
    frames past the dwell.
    """
    shifted = [f + CLOSE_PAIR_SPACING_HZ for f in DESK_CARRIERS_HZ]
    return Scenario(
        name="close-pair",
        sample_rate_hz=8.0e6,
        duration_s=0.05,
        sources=[
            ScenarioSource(frequency_set_hz=DESK_CARRIERS_HZ, shaping="constant"),
            ScenarioSource(frequency_set_hz=shifted, shaping="constant", start_offset_s=0.6e-3),
        ],
        channel=ChannelConfig(snr_db=0.0),
    )


def selective() -> Scenario:
    """Two-tap channel; f2 drops out below 5 dB SNR and f4 below 10 dB."""
    return Scenario(
        name="selective",
        sample_rate_hz=8.0e6,
        duration_s=0.05,
        sources=[
            ScenarioSource(frequency_set_hz=SELECTIVE_CARRIERS_HZ, shaping="constant")
        ],
        channel=ChannelConfig(
            snr_db=0.0,
            multipath_taps=[
                MultipathTap(delay_samples=0, gain=(1.0, 0.0)),
                MultipathTap(delay_samples=1, gain=(0.8, 0.0)),
            ],
        ),
    )


def noise_only() -> Scenario:
    return Scenario(
        name="noise-only",
        sample_rate_hz=8.0e6,
        duration_s=0.05,
        sources=[],
        channel=ChannelConfig(noise_std=1.0),
    )


_PRESETS: Dict[str, Callable[[], Scenario]] = {
    "futaba-desk": futaba_desk,
    "futaba-fidelity": futaba_fidelity,
    "futaba-rrc": futaba_rrc,
    "two-sources": two_sources,
    "close-pair": close_pair,
    "selective": selective,
    "noise-only": noise_only,
}


def preset_names() -> List[str]:
    return sorted(_PRESETS)


def get_preset(name: str) -> Scenario:
    factory = _PRESETS.get(name)
    if factory is None:
        raise ConfigError(f"unknown scenario preset: {name}")
    return factory()
