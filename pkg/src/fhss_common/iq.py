"""
IQ recording model and its on-disk form: a raw little-endian float32
interleaved I/Q file plus a JSON metadata sidecar.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from fhss_common.config import load_json
from fhss_common.errors import ConfigError, RecordingError

DATATYPE = "cf32_le"
BYTES_PER_SAMPLE = 8

PathLike = Union[str, Path]


class RecordingMeta(BaseModel):
    sample_rate_hz: float = Field(..., gt=0)
    center_frequency_hz: float = Field(0.0, ge=0)
    sample_count: int = Field(..., ge=1)
    datatype: Literal["cf32_le"] = DATATYPE
    capture_id: str = ""


def _first_non_finite(samples: np.ndarray) -> int | None:
    bad = np.flatnonzero(~np.isfinite(samples))
    if bad.size:
        return int(bad[0])
    return None


@dataclass(frozen=True)
class IqRecording:
    """Complex baseband samples with capture metadata. Immutable once built."""

    samples: np.ndarray
    sample_rate_hz: float
    center_frequency_hz: float = 0.0
    capture_id: str = ""

    def __post_init__(self) -> None:
        # owned copy, never a view of the caller's buffer
        s = np.array(self.samples, dtype=np.complex64, copy=True).reshape(-1)
        if s.size == 0:
            raise RecordingError("recording has no samples")
        idx = _first_non_finite(s)
        if idx is not None:
            raise RecordingError(f"non-finite sample at index {idx}")
        if not self.sample_rate_hz > 0:
            raise RecordingError(
                f"sample_rate_hz must be > 0, got {self.sample_rate_hz}"
            )
        if self.center_frequency_hz < 0:
            raise RecordingError(
                f"center_frequency_hz must be >= 0, got {self.center_frequency_hz}"
            )
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "center_frequency_hz", float(self.center_frequency_hz))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def meta(self) -> RecordingMeta:
        return RecordingMeta(
            sample_rate_hz=self.sample_rate_hz,
            center_frequency_hz=self.center_frequency_hz,
            sample_count=len(self),
            capture_id=self.capture_id,
        )

    def with_samples(self, samples: np.ndarray) -> "IqRecording":
        """Return a recording with the same metadata and new samples."""
        return IqRecording(
            samples=samples,
            sample_rate_hz=self.sample_rate_hz,
            center_frequency_hz=self.center_frequency_hz,
            capture_id=self.capture_id,
        )


def load_meta(meta_path: PathLike) -> RecordingMeta:
    try:
        return RecordingMeta.model_validate(load_json(meta_path))
    except FileNotFoundError as e:
        raise RecordingError(str(e)) from e
    except (ValidationError, ValueError) as e:
        raise RecordingError(f"invalid recording metadata {meta_path}: {e}") from e


def load_recording(raw_path: PathLike, meta_path: PathLike) -> IqRecording:
    raw = Path(raw_path)
    meta = load_meta(meta_path)
    if not raw.exists():
        raise RecordingError(f"raw IQ file not found: {raw}")

    size = raw.stat().st_size
    if size % 4 != 0 or (size // 4) % 2 != 0:
        raise RecordingError(
            f"truncated IQ file {raw}: {size} bytes is not a whole number of I/Q float32 pairs"
        )
    count = size // BYTES_PER_SAMPLE
    if count != meta.sample_count:
        raise RecordingError(
            f"length mismatch: meta sample_count={meta.sample_count} but {raw} holds {count} samples"
        )

    samples = np.fromfile(raw, dtype="<c8").astype(np.complex64, copy=False)
    return IqRecording(
        samples=samples,
        sample_rate_hz=meta.sample_rate_hz,
        center_frequency_hz=meta.center_frequency_hz,
        capture_id=meta.capture_id,
    )


def save_recording(rec: IqRecording, raw_path: PathLike, meta_path: PathLike) -> None:
    idx = _first_non_finite(rec.samples)
    if idx is not None:
        raise RecordingError(f"non-finite sample at index {idx}")

    raw = Path(raw_path)
    meta = Path(meta_path)
    try:
        raw.parent.mkdir(parents=True, exist_ok=True)
        meta.parent.mkdir(parents=True, exist_ok=True)
        rec.samples.astype("<c8", copy=False).tofile(raw)
        meta.write_text(rec.meta().model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise RecordingError(f"cannot write recording: {e}") from e


def segment(rec: IqRecording, segment_len: int) -> List[IqRecording]:
    """Split into consecutive full-length pieces; a shorter remainder is dropped."""
    if segment_len < 1:
        raise ConfigError(f"segment_len must be >= 1, got {segment_len}")
    n = len(rec) // segment_len
    return [
        rec.with_samples(rec.samples[i * segment_len : (i + 1) * segment_len])
        for i in range(n)
    ]
