"""
Stage artifacts on disk: spectrogram grid, mask bitmap, ACF curve, hops CSV
and run metadata. Each dump carries enough axis data to resume the next stage.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from matplotlib import image as mpimg
from PIL import Image

from fhss_common.config import load_json
from fhss_common.errors import RecordingError
from fhss_common.models import StftConfig
from fhss_detect.classification import UNASSIGNED, PeriodEstimate
from fhss_detect.detection import BinaryMask, ThresholdReport
from fhss_detect.extraction import HopRecord
from fhss_detect.pipeline import DetectionResult
from fhss_detect.spectrogram import Spectrogram

PathLike = Union[str, Path]

HOPS_HEADER = ["start_ms", "stop_ms", "dwell_ms", "center_ghz", "bandwidth_mhz", "source_id"]
ACF_HEADER = ["lag_ms", "acf"]


def header_path(path: PathLike) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def run_metadata_path(hops_path: PathLike) -> Path:
    p = Path(hops_path)
    return p.with_name(p.stem + ".run.json")


def _write_json(path: Path, obj: Dict[str, Any]) -> None:
    path.write_text(json.dumps(obj, indent=2, default=str) + "\n", encoding="utf-8")


def _prepare(path: PathLike) -> Path:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise RecordingError(f"cannot create {p.parent}: {e}") from e
    return p


def _axes(frame_times_s: np.ndarray, bin_freqs_hz: np.ndarray) -> Dict[str, Any]:
    return {
        "frame_times_s": [float(t) for t in frame_times_s],
        "bin_freqs_hz": [float(f) for f in bin_freqs_hz],
    }


# --- spectrogram -------------------------------------------------------------


def write_spectrogram(path: PathLike, spec: Spectrogram, image: bool = False) -> List[Path]:
    """float32 grid [bins x frames], row-major, plus a JSON header; PNG optional."""
    p = _prepare(path)
    written = [p, header_path(p)]
    try:
        spec.power_db.astype("<f4").tofile(p)
        _write_json(
            header_path(p),
            {
                "rows": spec.num_bins,
                "cols": spec.num_frames,
                "dtype": "f32_le",
                "units": "dBFS (relative, plus calibration offset)",
                "sample_rate_hz": spec.sample_rate_hz,
                "center_frequency_hz": spec.center_frequency_hz,
                "capture_id": spec.capture_id,
                "frame_period_s": spec.frame_period_s,
                "bin_width_hz": spec.bin_width_hz,
                "stft": spec.config.model_dump(),
                **_axes(spec.frame_times_s, spec.bin_freqs_hz),
            },
        )
        if image:
            png = p.with_suffix(".png")
            mpimg.imsave(png, spec.power_db, cmap="gray", origin="lower")
            written.append(png)
    except OSError as e:
        raise RecordingError(f"cannot write spectrogram dump {p}: {e}") from e
    return written


def read_spectrogram(path: PathLike) -> Spectrogram:
    p = Path(path)
    try:
        head = load_json(header_path(p))
        grid = np.fromfile(p, dtype="<f4")
    except (OSError, ValueError) as e:
        raise RecordingError(f"cannot read spectrogram dump {p}: {e}") from e
    rows, cols = int(head["rows"]), int(head["cols"])
    if grid.size != rows * cols:
        raise RecordingError(
            f"spectrogram dump {p} holds {grid.size} values, header says {rows}x{cols}"
        )
    return Spectrogram(
        power_db=grid.reshape(rows, cols).astype(np.float64),
        frame_times_s=np.asarray(head["frame_times_s"], dtype=np.float64),
        bin_freqs_hz=np.asarray(head["bin_freqs_hz"], dtype=np.float64),
        config=StftConfig.model_validate(head["stft"]),
        sample_rate_hz=float(head["sample_rate_hz"]),
        center_frequency_hz=float(head.get("center_frequency_hz", 0.0)),
        capture_id=str(head.get("capture_id", "")),
    )


# --- mask --------------------------------------------------------------------


def write_mask(path: PathLike, mask: BinaryMask, report: ThresholdReport) -> List[Path]:
    """PBM bitmap (row 0 = lowest frequency bin) plus JSON threshold report and axes."""
    p = _prepare(path)
    try:
        Image.fromarray(np.ascontiguousarray(mask.bits)).save(p, format="PPM")
        _write_json(
            header_path(p),
            {
                "rows": mask.shape[0],
                "cols": mask.shape[1],
                "capture_id": mask.capture_id,
                "frame_period_s": mask.frame_period_s,
                "bin_width_hz": mask.bin_width_hz,
                "threshold": report.model_dump(),
                **_axes(mask.frame_times_s, mask.bin_freqs_hz),
            },
        )
    except OSError as e:
        raise RecordingError(f"cannot write mask dump {p}: {e}") from e
    return [p, header_path(p)]


def read_mask(path: PathLike) -> Tuple[BinaryMask, ThresholdReport]:
    p = Path(path)
    try:
        head = load_json(header_path(p))
        with Image.open(p) as img:
            bits = np.array(img.convert("1"), dtype=bool)
    except (OSError, ValueError) as e:
        raise RecordingError(f"cannot read mask dump {p}: {e}") from e
    if bits.shape != (int(head["rows"]), int(head["cols"])):
        raise RecordingError(
            f"mask dump {p} is {bits.shape}, header says {head['rows']}x{head['cols']}"
        )
    mask = BinaryMask(
        bits=bits,
        frame_times_s=np.asarray(head["frame_times_s"], dtype=np.float64),
        bin_freqs_hz=np.asarray(head["bin_freqs_hz"], dtype=np.float64),
        frame_period_s=float(head["frame_period_s"]),
        bin_width_hz=float(head["bin_width_hz"]),
        capture_id=str(head.get("capture_id", "")),
    )
    return mask, ThresholdReport.model_validate(head["threshold"])


# --- acf ---------------------------------------------------------------------


def write_acf(path: PathLike, period: PeriodEstimate) -> Path:
    p = _prepare(path)
    try:
        with p.open("w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(ACF_HEADER)
            for lag, value in zip(period.lags_s, period.acf):
                w.writerow([f"{lag * 1e3:.6f}", f"{value:.9g}"])
    except OSError as e:
        raise RecordingError(f"cannot write ACF dump {p}: {e}") from e
    return p


# --- hops --------------------------------------------------------------------


def hop_row(hop: HopRecord, source_id: int) -> List[str]:
    return [
        f"{hop.start_time_s * 1e3:.6f}",
        f"{hop.stop_time_s * 1e3:.6f}",
        f"{hop.dwell_time_s * 1e3:.6f}",
        f"{hop.center_frequency_hz / 1e9:.9f}",
        f"{hop.bandwidth_hz / 1e6:.6f}",
        str(source_id),
    ]


def write_hops_csv(
    path: PathLike, hops: Sequence[HopRecord], source_ids: Optional[Sequence[int]] = None
) -> Path:
    if source_ids is None:
        source_ids = [UNASSIGNED] * len(hops)
    p = _prepare(path)
    try:
        with p.open("w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(HOPS_HEADER)
            for hop, sid in zip(hops, source_ids):
                w.writerow(hop_row(hop, sid))
    except OSError as e:
        raise RecordingError(f"cannot write hops CSV {p}: {e}") from e
    return p


def read_hops_csv(path: PathLike) -> Tuple[List[HopRecord], List[int]]:
    """Hops from CSV; frame and bin indices are not stored and read back as -1."""
    p = Path(path)
    if not p.exists():
        raise RecordingError(f"hops CSV not found: {p}")
    hops: List[HopRecord] = []
    sids: List[int] = []
    try:
        with p.open("r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if reader.fieldnames != HOPS_HEADER:
                raise RecordingError(
                    f"hops CSV {p} has header {reader.fieldnames}, expected {HOPS_HEADER}"
                )
            for row in reader:
                hops.append(
                    HopRecord(
                        start_time_s=float(row["start_ms"]) / 1e3,
                        stop_time_s=float(row["stop_ms"]) / 1e3,
                        dwell_time_s=float(row["dwell_ms"]) / 1e3,
                        center_frequency_hz=float(row["center_ghz"]) * 1e9,
                        bandwidth_hz=float(row["bandwidth_mhz"]) * 1e6,
                        start_frame=-1,
                        stop_frame=-1,
                        start_bin=-1,
                        stop_bin=-1,
                    )
                )
                sids.append(int(row["source_id"]))
    except (OSError, ValueError, KeyError) as e:
        raise RecordingError(f"cannot read hops CSV {p}: {e}") from e
    return hops, sids


# --- run metadata ------------------------------------------------------------


def run_metadata(result: DetectionResult, config: Dict[str, Any]) -> Dict[str, Any]:
    period = None
    if result.period is not None:
        period = {
            "t1_s": result.period.t1_s,
            "peak_lags_s": list(result.period.peak_lags_s),
            "frame_period_s": result.period.frame_period_s,
        }
    return {
        "capture_id": result.capture_id,
        "seed": config.get("seed"),
        "config": config,
        "frame_period_s": result.mask.frame_period_s,
        "bin_width_hz": result.mask.bin_width_hz,
        "kernel": None if result.kernel is None else list(result.kernel),
        "threshold": result.report.model_dump(),
        "window_rationale": result.window_rationale,
        "extracted_rectangles": result.extracted_count,
        "hops": len(result.hops),
        "period": period,
        "sources": [
            {
                "source_id": g.source_id,
                "hops": len(g.hop_indices),
                "period_s": g.period_s,
                "peak_lags_s": list(g.peak_lags_s),
            }
            for g in result.assignment.sources
        ],
    }


def write_run_metadata(hops_path: PathLike, result: DetectionResult, config: Dict[str, Any]) -> Path:
    p = _prepare(run_metadata_path(hops_path))
    try:
        _write_json(p, run_metadata(result, config))
    except OSError as e:
        raise RecordingError(f"cannot write run metadata {p}: {e}") from e
    return p
