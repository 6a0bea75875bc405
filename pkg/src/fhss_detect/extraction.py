from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from fhss_detect.detection import BinaryMask

# (start_bin, stop_bin, start_frame, stop_frame), inclusive
Rect = Tuple[int, int, int, int]


@dataclass(frozen=True)
class HopRecord:
    start_time_s: float
    stop_time_s: float
    dwell_time_s: float
    center_frequency_hz: float
    bandwidth_hz: float
    start_frame: int
    stop_frame: int
    start_bin: int
    stop_bin: int

    @property
    def num_frames(self) -> int:
        return self.stop_frame - self.start_frame + 1

    @property
    def num_bins(self) -> int:
        return self.stop_bin - self.start_bin + 1


def scan_rectangles(work: np.ndarray) -> List[Rect]:
    """
    Row-major rectangle scan over a boolean matrix, zeroing `work` in place.

    On the first set cell of a row, the run to the right gives the time
    extent; the run downward at the run's last column gives the frequency
    extent. The rectangle is recorded and cleared before the scan goes on.
    """
    rows, cols = work.shape
    rects: List[Rect] = []
    for i in range(rows):
        cursor = 0
        while cursor < cols:
            hits = np.flatnonzero(work[i, cursor:])
            if hits.size == 0:
                break
            j = cursor + int(hits[0])

            gaps = np.flatnonzero(~work[i, j:])
            jj = j + (int(gaps[0]) if gaps.size else cols - j) - 1

            gaps = np.flatnonzero(~work[i:, jj])
            ii = i + (int(gaps[0]) if gaps.size else rows - i) - 1

            rects.append((i, ii, j, jj))
            work[i : ii + 1, j : jj + 1] = False
            cursor = jj + 1
    return rects


def record_from_rect(mask: BinaryMask, rect: Rect) -> HopRecord:
    b0, b1, f0, f1 = rect
    dwell = (f1 - f0 + 1) * mask.frame_period_s
    start = float(mask.frame_times_s[f0])
    return HopRecord(
        start_time_s=start,
        stop_time_s=start + dwell,
        dwell_time_s=dwell,
        center_frequency_hz=float(
            (mask.bin_freqs_hz[b0] + mask.bin_freqs_hz[b1]) / 2.0
        ),
        bandwidth_hz=(b1 - b0 + 1) * mask.bin_width_hz,
        start_frame=f0,
        stop_frame=f1,
        start_bin=b0,
        stop_bin=b1,
    )


def _sorted(records: Iterable[HopRecord]) -> List[HopRecord]:
    return sorted(records, key=lambda r: (r.start_frame, r.start_bin))


def extract_hops(mask: BinaryMask) -> List[HopRecord]:
    work = np.array(mask.bits, dtype=bool, copy=True)
    rects = scan_rectangles(work)
    return _sorted(record_from_rect(mask, r) for r in rects)


def hops_from_mask_oracle(mask: BinaryMask) -> List[HopRecord]:
    """Bounding box of every 4-connected component."""
    labels, _ = ndimage.label(mask.bits)
    rects = [
        (sl[0].start, sl[0].stop - 1, sl[1].start, sl[1].stop - 1)
        for sl in ndimage.find_objects(labels)
        if sl is not None
    ]
    return _sorted(record_from_rect(mask, r) for r in rects)


def prune_hops(
    hops: Iterable[HopRecord], min_frames: int = 3, min_bins: int = 2
) -> List[HopRecord]:
    """Drop speckle rectangles shorter than min_frames or narrower than min_bins."""
    return [h for h in hops if h.num_frames >= min_frames and h.num_bins >= min_bins]


def _near(a: Rect, b: Rect, gap_bins: int, gap_frames: int) -> bool:
    return (
        a[0] <= b[1] + gap_bins + 1
        and b[0] <= a[1] + gap_bins + 1
        and a[2] <= b[3] + gap_frames + 1
        and b[2] <= a[3] + gap_frames + 1
    )


def merge_rects(rects: Iterable[Rect], gap_bins: int = 0, gap_frames: int = 0) -> List[Rect]:
    """
    Replace every group of rectangles lying within gap_bins rows and
    gap_frames columns of each other by its bounding box, transitively.
    """
    boxes = list(rects)
    changed = True
    while changed:
        changed = False
        out: List[Rect] = []
        for box in boxes:
            for k, other in enumerate(out):
                if _near(box, other, gap_bins, gap_frames):
                    out[k] = (
                        min(box[0], other[0]),
                        max(box[1], other[1]),
                        min(box[2], other[2]),
                        max(box[3], other[3]),
                    )
                    changed = True
                    break
            else:
                out.append(box)
        boxes = out
    return boxes


def merge_hops(
    mask: BinaryMask,
    hops: Iterable[HopRecord],
    gap_s: Optional[float] = None,
    gap_hz: Optional[float] = None,
) -> List[HopRecord]:
    """
    Join rectangles split out of one emission. Gaps are converted to whole
    frames and bins of `mask`; None means touching or overlapping only.
    """
    gap_frames = int(math.floor((gap_s or 0.0) / mask.frame_period_s + 1e-9))
    gap_bins = int(math.floor((gap_hz or 0.0) / mask.bin_width_hz + 1e-9))
    rects = [(h.start_bin, h.stop_bin, h.start_frame, h.stop_frame) for h in hops]
    return _sorted(record_from_rect(mask, r) for r in merge_rects(rects, gap_bins, gap_frames))
