from __future__ import annotations

import math
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

GUARD_ORDER_MSG = "guard times must be strictly increasing: dt1 < dt2 < dt3"


# --- synthesis ---------------------------------------------------------------


class SourceProfile(BaseModel):
    """Timing and waveform of one hopping emitter (Futaba T8J defaults)."""

    dwell_time_s: float = Field(1.44e-3, gt=0)
    guard_times_s: Tuple[float, float, float] = (0.5e-3, 0.8e-3, 1.18e-3)
    fundamental_period_s: float = Field(6.8e-3, gt=0)
    frequency_set_hz: List[float] = Field(default_factory=list)
    # f1 f1 f2 f3 f3 f4
    hop_sequence: List[int] = Field(default_factory=lambda: [0, 0, 1, 2, 2, 3])
    symbol_rate_hz: float = Field(1.25e6, gt=0)
    rolloff: float = Field(0.35, gt=0, le=1)
    shaping: Literal["rrc", "constant"] = "rrc"
    power_dbfs: float = 0.0
    dwell_jitter_s: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def _check_timing(self) -> "SourceProfile":
        d1, d2, d3 = self.guard_times_s
        if d1 < 0:
            raise ValueError(f"guard times must be >= 0, got dt1={d1}")
        if not (d1 < d2 < d3):
            raise ValueError(GUARD_ORDER_MSG)
        total = 3 * self.dwell_time_s + d1 + d2 + d3
        t1 = self.fundamental_period_s
        if abs(total - t1) > 1e-12 * t1:
            raise ValueError(
                "3*dwell + dt1 + dt2 + dt3 must equal the fundamental period: "
                f"{total!r} != {t1!r}"
            )
        if self.dwell_jitter_s >= self.dwell_time_s:
            raise ValueError("dwell_jitter_s must be smaller than dwell_time_s")
        n = len(self.frequency_set_hz)
        if n and any(i < 0 or i >= n for i in self.hop_sequence):
            raise ValueError(
                f"hop_sequence indices must lie in [0, {n}), got {self.hop_sequence}"
            )
        return self

    def pattern_offsets_s(self) -> Tuple[float, float, float]:
        """Start offsets of the three hops inside one fundamental period."""
        d1, d2, _ = self.guard_times_s
        w = self.dwell_time_s
        return (0.0, w + d1, 2 * w + d1 + d2)


class ScenarioSource(SourceProfile):
    start_offset_s: float = Field(0.0, ge=0)


class MultipathTap(BaseModel):
    delay_samples: int = Field(0, ge=0)
    gain: Tuple[float, float] = (1.0, 0.0)

    @field_validator("gain")
    @classmethod
    def _finite_gain(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not all(math.isfinite(x) for x in v):
            raise ValueError(f"tap gain must be finite, got {v}")
        return v

    @property
    def complex_gain(self) -> complex:
        return complex(self.gain[0], self.gain[1])


class InterferenceBurst(BaseModel):
    """Band-limited noise gated on for `duty` of every `burst_period_s`."""

    center_offset_hz: float = 0.0
    bandwidth_hz: float = Field(1.0e6, gt=0)
    power_dbfs: float = -10.0
    duty: float = Field(0.5, ge=0, le=1)
    burst_period_s: float = Field(1.0e-3, gt=0)


class ChannelConfig(BaseModel):
    # +inf disables noise
    snr_db: float = math.inf
    # absolute per-component noise std; overrides snr_db when set
    noise_std: Optional[float] = Field(None, ge=0)
    cfo_hz: float = 0.0
    multipath_taps: List[MultipathTap] = Field(default_factory=list)
    interference: List[InterferenceBurst] = Field(default_factory=list)
    rng_seed: int = Field(0, ge=0)

    @field_validator("snr_db")
    @classmethod
    def _not_nan(cls, v: float) -> float:
        if math.isnan(v):
            raise ValueError("snr_db must not be NaN")
        return v

    @property
    def noise_enabled(self) -> bool:
        return self.noise_std is not None or math.isfinite(self.snr_db)


class Scenario(BaseModel):
    name: str = "scenario"
    capture_id: Optional[str] = None
    sample_rate_hz: float = Field(8.0e6, gt=0)
    center_frequency_hz: float = Field(2.44e9, ge=0)
    duration_s: float = Field(0.05, gt=0)
    sources: List[ScenarioSource] = Field(default_factory=list)
    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    seed: int = Field(0, ge=0)

    def with_seed(self, seed: int) -> "Scenario":
        """Copy with render and channel streams derived from one seed."""
        render_ss, channel_ss = np.random.SeedSequence(seed).spawn(2)
        channel = self.channel.model_copy(
            update={"rng_seed": int(channel_ss.generate_state(1)[0])}
        )
        return self.model_copy(
            update={
                "seed": int(render_ss.generate_state(1)[0]),
                "channel": channel,
            }
        )

    def with_snr(self, snr_db: float) -> "Scenario":
        channel = self.channel.model_copy(update={"snr_db": snr_db})
        return self.model_copy(update={"channel": channel})

    @property
    def resolved_capture_id(self) -> str:
        return self.capture_id or f"{self.name}-seed{self.seed}"


# --- detection pipeline ------------------------------------------------------


class StftConfig(BaseModel):
    window_size: int = Field(2048, ge=1)
    # None -> window_size // 2
    overlap: Optional[int] = Field(None, ge=0)
    window_kind: Literal["rectangular", "hann", "hamming"] = "hann"
    # None -> window_size
    fft_size: Optional[int] = Field(None, ge=1)
    calibration_offset_db: float = 0.0
    workers: int = Field(1, ge=1)
    chunk_frames: int = Field(512, ge=1)
    # non-empty -> window_size picked by auto_window, overlap M/2, fft_size M
    auto_candidates: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _fill_and_check(self) -> "StftConfig":
        if self.overlap is None:
            self.overlap = self.window_size // 2
        if self.fft_size is None:
            self.fft_size = self.window_size
        if not (0 <= self.overlap < self.window_size):
            raise ValueError(
                f"overlap must satisfy 0 <= L < M, got L={self.overlap} M={self.window_size}"
            )
        if self.fft_size < self.window_size:
            raise ValueError(
                f"fft_size must be >= window_size, got {self.fft_size} < {self.window_size}"
            )
        return self

    @property
    def hop(self) -> int:
        """Frame shift R = M - L."""
        return self.window_size - int(self.overlap or 0)


class DetectionConfig(BaseModel):
    top_frac: float = Field(0.2, gt=0, le=1)
    kernel_rows: int = Field(3, ge=1)
    kernel_cols: int = Field(5, ge=1)
    # cap on the kernel's time extent, (kernel_cols - 1) frames; None keeps kernel_cols
    max_kernel_span_s: Optional[float] = Field(0.3e-3, gt=0)

    @model_validator(mode="after")
    def _odd_kernel(self) -> "DetectionConfig":
        if self.kernel_rows % 2 == 0 or self.kernel_cols % 2 == 0:
            raise ValueError(
                f"closing kernel dimensions must be odd, got {self.kernel_rows}x{self.kernel_cols}"
            )
        return self


class ExtractionConfig(BaseModel):
    min_frames: int = Field(3, ge=1)
    min_bins: int = Field(2, ge=1)
    # fragments of one hop closer than these are joined before pruning; off when both None
    merge_gap_s: Optional[float] = Field(None, ge=0)
    merge_gap_hz: Optional[float] = Field(None, ge=0)

    @property
    def merges(self) -> bool:
        return self.merge_gap_s is not None or self.merge_gap_hz is not None


class ClassificationConfig(BaseModel):
    enabled: bool = True
    series: Literal["occupancy", "onset"] = "onset"
    min_lag_s: float = Field(1.0e-3, gt=0)
    max_lag_s: float = Field(20.0e-3, gt=0)
    rho: float = Field(0.25, gt=0, le=1)
    # tolerance in frame durations; tol_s overrides when set
    tol_frames: float = Field(2.0, ge=1)
    tol_s: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _lag_window(self) -> "ClassificationConfig":
        if self.min_lag_s >= self.max_lag_s:
            raise ValueError(
                f"min_lag_s must be < max_lag_s, got {self.min_lag_s} >= {self.max_lag_s}"
            )
        return self


class PipelineIo(BaseModel):
    raw: Optional[str] = None
    meta: Optional[str] = None
    hops: Optional[str] = None
    dump_spectrogram: Optional[str] = None
    dump_mask: Optional[str] = None
    dump_acf: Optional[str] = None


class PipelineConfig(BaseModel):
    stft: StftConfig = Field(default_factory=StftConfig)
    detection: DetectionConfig = Field(default_factory=DetectionConfig)
    extraction: ExtractionConfig = Field(default_factory=ExtractionConfig)
    classification: ClassificationConfig = Field(default_factory=ClassificationConfig)
    io: PipelineIo = Field(default_factory=PipelineIo)
    # detection is deterministic; recorded in run metadata for provenance
    seed: int = Field(0, ge=0)


# --- evaluation --------------------------------------------------------------


class PathLoss(BaseModel):
    """Log-distance path loss used as a synthetic distance axis."""

    ref_snr_db: float = 20.0
    ref_distance_m: float = Field(25.0, gt=0)
    exponent: float = Field(2.7, gt=0)

    def snr_at(self, distance_m: float) -> float:
        return self.ref_snr_db - 10.0 * self.exponent * math.log10(
            distance_m / self.ref_distance_m
        )


class SweepAxis(BaseModel):
    kind: Literal["snr", "window", "distance"]
    values: List[float] = Field(..., min_length=1)
    path_loss: PathLoss = Field(default_factory=PathLoss)

    @model_validator(mode="after")
    def _check_values(self) -> "SweepAxis":
        if self.kind == "window":
            bad = [v for v in self.values if v < 1 or v != int(v)]
            if bad:
                raise ValueError(f"window sizes must be positive integers, got {bad}")
        if self.kind == "distance":
            bad = [v for v in self.values if v <= 0]
            if bad:
                raise ValueError(f"distances must be > 0, got {bad}")
        return self


class SweepConfig(BaseModel):
    scenario: Scenario
    axis: SweepAxis
    trials: int = Field(20, ge=1)
    seed: int = Field(0, ge=0)
    gate_frac: float = Field(0.5, gt=0)
    pipeline: PipelineConfig = Field(default_factory=PipelineConfig)
