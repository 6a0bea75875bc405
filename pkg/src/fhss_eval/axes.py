from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Tuple

from fhss_common.errors import ConfigError
from fhss_common.models import PipelineConfig, Scenario, StftConfig, SweepAxis


class Axis(ABC):
    label: str = ""

    @abstractmethod
    def apply(
        self, axis: SweepAxis, value: float, scenario: Scenario, pipeline: PipelineConfig
    ) -> Tuple[Scenario, PipelineConfig]: ...


class SnrAxis(Axis):
    label = "snr_db"

    def apply(self, axis, value, scenario, pipeline):
        return scenario.with_snr(float(value)), pipeline


class WindowAxis(Axis):
    label = "window_size"

    def apply(self, axis, value, scenario, pipeline):
        data = pipeline.stft.model_dump()
        data.update(window_size=int(value), overlap=None, fft_size=None, auto_candidates=[])
        stft = StftConfig.model_validate(data)
        return scenario, pipeline.model_copy(update={"stft": stft})


class DistanceAxis(Axis):
    """Synthetic distance: log-distance path loss mapped onto SNR."""

    label = "distance_m (synthetic, log-distance path loss)"

    def apply(self, axis, value, scenario, pipeline):
        return scenario.with_snr(axis.path_loss.snr_at(float(value))), pipeline


_REGISTRY = {
    "snr": SnrAxis(),
    "window": WindowAxis(),
    "distance": DistanceAxis(),
}


def get_axis(kind: str) -> Axis:
    a = _REGISTRY.get(kind)
    if not a:
        raise ConfigError(f"unknown sweep axis: {kind}")
    return a
