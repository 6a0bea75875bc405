from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy import ndimage

from fhss_common.errors import ConfigError
from fhss_detect.spectrogram import Spectrogram


class ThresholdReport(BaseModel):
    s_max: float
    sigma_top20: float
    mu: float
    occupancy_fraction: float = Field(..., ge=0, le=1)
    top_frac: float = 0.2
    top_count: int = Field(..., ge=1)


@dataclass(frozen=True)
class BinaryMask:
    """Occupancy matrix Z with the axes of the spectrogram it came from."""

    bits: np.ndarray  # bool [num_bins, num_frames]
    frame_times_s: Optional[np.ndarray] = None
    bin_freqs_hz: Optional[np.ndarray] = None
    frame_period_s: float = 1.0
    bin_width_hz: float = 1.0
    capture_id: str = ""

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise ConfigError(f"mask must be 2-D, got shape {bits.shape}")
        object.__setattr__(self, "bits", bits)
        rows, cols = bits.shape
        if self.frame_times_s is None:
            object.__setattr__(self, "frame_times_s", np.arange(cols) * self.frame_period_s)
        if self.bin_freqs_hz is None:
            object.__setattr__(self, "bin_freqs_hz", np.arange(rows) * self.bin_width_hz)
        if len(self.frame_times_s) != cols or len(self.bin_freqs_hz) != rows:
            raise ConfigError(
                f"mask axes do not match shape {bits.shape}: "
                f"{len(self.frame_times_s)} frame times, {len(self.bin_freqs_hz)} bin freqs"
            )

    @classmethod
    def like(cls, spec: Spectrogram, bits: np.ndarray) -> "BinaryMask":
        return cls(
            bits=bits,
            frame_times_s=spec.frame_times_s,
            bin_freqs_hz=spec.bin_freqs_hz,
            frame_period_s=spec.frame_period_s,
            bin_width_hz=spec.bin_width_hz,
            capture_id=spec.capture_id,
        )

    def with_bits(self, bits: np.ndarray) -> "BinaryMask":
        return BinaryMask(
            bits=bits,
            frame_times_s=self.frame_times_s,
            bin_freqs_hz=self.bin_freqs_hz,
            frame_period_s=self.frame_period_s,
            bin_width_hz=self.bin_width_hz,
            capture_id=self.capture_id,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def occupancy(self) -> float:
        return float(self.bits.mean()) if self.bits.size else 0.0


def _values(spec: Union[Spectrogram, np.ndarray]) -> np.ndarray:
    if isinstance(spec, Spectrogram):
        return spec.power_db
    return np.asarray(spec, dtype=np.float64)


def top_count(total: int, top_frac: float) -> int:
    # round() strips float noise such as 0.2 * 10 = 2.0000000000000004
    return max(1, math.ceil(round(top_frac * total, 9)))


def estimate_threshold(
    spec: Union[Spectrogram, np.ndarray], top_frac: float = 0.2
) -> ThresholdReport:
    """mu = (S_max + mean of the top `top_frac` entries) / 2."""
    if not 0 < top_frac <= 1:
        raise ConfigError(f"top_frac must lie in (0, 1], got {top_frac}")
    values = _values(spec).ravel()
    if values.size == 0:
        raise ConfigError("cannot threshold an empty spectrogram")

    ordered = np.sort(values)
    k = top_count(ordered.size, top_frac)
    s_max = float(ordered[-1])
    sigma = float(np.mean(ordered[-k:]))
    mu = (s_max + sigma) / 2.0
    return ThresholdReport(
        s_max=s_max,
        sigma_top20=sigma,
        mu=mu,
        occupancy_fraction=float(np.mean(values >= mu)),
        top_frac=top_frac,
        top_count=k,
    )


def binarize(spec: Spectrogram, mu: float) -> BinaryMask:
    return BinaryMask.like(spec, spec.power_db >= mu)


def close_bits(bits: np.ndarray, kernel_rows: int, kernel_cols: int) -> np.ndarray:
    if kernel_rows < 1 or kernel_cols < 1:
        raise ConfigError(
            f"closing kernel dimensions must be >= 1, got {kernel_rows}x{kernel_cols}"
        )
    if kernel_rows % 2 == 0 or kernel_cols % 2 == 0:
        raise ConfigError(
            f"closing kernel dimensions must be odd, got {kernel_rows}x{kernel_cols}"
        )
    if kernel_rows == 1 and kernel_cols == 1:
        return np.array(bits, dtype=bool, copy=True)

    pr, pc = kernel_rows // 2, kernel_cols // 2
    structure = np.ones((kernel_rows, kernel_cols), dtype=bool)
    padded = np.pad(np.asarray(bits, dtype=bool), ((pr, pr), (pc, pc)))
    grown = ndimage.binary_dilation(padded, structure=structure)
    closed = ndimage.binary_erosion(grown, structure=structure)
    return closed[pr : pr + bits.shape[0], pc : pc + bits.shape[1]]


def morph_close(mask: BinaryMask, kernel_rows: int = 3, kernel_cols: int = 5) -> BinaryMask:
    """Dilation then erosion with a kernel_rows x kernel_cols rectangle."""
    return mask.with_bits(close_bits(mask.bits, kernel_rows, kernel_cols))


def fit_kernel_cols(kernel_cols: int, frame_period_s: float, max_span_s: Optional[float]) -> int:
    """
    Widest odd column count <= kernel_cols whose time extent
    (cols - 1) * frame_period_s stays within max_span_s.
    """
    if max_span_s is None:
        return kernel_cols
    if frame_period_s <= 0:
        raise ConfigError(f"frame_period_s must be > 0, got {frame_period_s}")
    steps = int(math.floor(max_span_s / frame_period_s + 1e-9))
    fitted = min(kernel_cols, steps + 1)
    if fitted % 2 == 0:
        fitted -= 1
    return max(1, fitted)
