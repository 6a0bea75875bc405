"""
Period recovery from the mask's autocorrelation and source grouping by the
modular start-time congruence rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.signal import correlate, find_peaks

from fhss_common.errors import ConfigError
from fhss_detect.detection import BinaryMask
from fhss_detect.extraction import HopRecord

UNASSIGNED = -1


@dataclass(frozen=True)
class PeriodEstimate:
    t1_s: float
    peak_lags_s: Tuple[float, ...]  # ascending, ends with t1_s
    acf: np.ndarray = field(repr=False)  # biased ACF, index = lag in frames
    frame_period_s: float = 1.0

    @property
    def lags_s(self) -> np.ndarray:
        return np.arange(self.acf.size) * self.frame_period_s

    @property
    def t1_frames(self) -> int:
        return int(round(self.t1_s / self.frame_period_s))


@dataclass(frozen=True)
class SourceGroup:
    source_id: int
    hop_indices: Tuple[int, ...]
    period_s: float
    peak_lags_s: Tuple[float, ...]


@dataclass(frozen=True)
class SourceAssignment:
    source_ids: Tuple[int, ...]  # aligned with the hop sequence
    sources: Tuple[SourceGroup, ...] = ()

    @property
    def num_sources(self) -> int:
        return len(self.sources)

    @classmethod
    def unassigned(cls, n: int) -> "SourceAssignment":
        return cls(source_ids=(UNASSIGNED,) * n)


# --- series ------------------------------------------------------------------


def occupancy_series(mask: BinaryMask, hops: Sequence[HopRecord] = ()) -> np.ndarray:
    """Set bits per column, mean removed."""
    counts = mask.bits.sum(axis=0).astype(np.float64)
    return counts - counts.mean() if counts.size else counts


def onset_series(mask: BinaryMask, hops: Sequence[HopRecord] = ()) -> np.ndarray:
    """One impulse per hop at its start frame, mean removed."""
    counts = np.zeros(mask.shape[1], dtype=np.float64)
    frames = np.array([h.start_frame for h in hops], dtype=np.int64)
    if np.any((frames < 0) | (frames >= counts.size)):
        raise ConfigError("hop start frames must index the mask columns")
    np.add.at(counts, frames, 1.0)
    return counts - counts.mean() if counts.size else counts


_SERIES = {
    "occupancy": occupancy_series,
    "onset": onset_series,
}


def series_for(mask: BinaryMask, kind: str, hops: Sequence[HopRecord] = ()) -> np.ndarray:
    fn = _SERIES.get(kind)
    if fn is None:
        raise ConfigError(f"unknown series kind: {kind}")
    return fn(mask, hops)


# --- period ------------------------------------------------------------------


def biased_acf(x: np.ndarray) -> np.ndarray:
    n = x.size
    return correlate(x, x, mode="full", method="fft")[n - 1 :] / n


def _three_lag(acf: np.ndarray, k: int) -> float:
    return float(acf[max(0, k - 1) : k + 2].sum())


def estimate_period(
    series: Sequence[float],
    frame_period_s: float,
    min_lag_s: float = 1.0e-3,
    max_lag_s: float = 20.0e-3,
    rho: float = 0.25,
) -> PeriodEstimate:
    """
    T1 is the lag of the ACF maximum inside [min_lag_s, max_lag_s].

    Every other ACF local maximum in [min_lag_s, T1 - min_lag_s] joins the
    peak set when its three-lag sum reaches rho times the three-lag sum at
    T1. The ACF is symmetric modulo T1, so the same minimum lag bounds the
    set at both ends.
    """
    x = np.asarray(series, dtype=np.float64)
    if frame_period_s <= 0:
        raise ConfigError(f"frame_period_s must be > 0, got {frame_period_s}")
    if not 0 < rho <= 1:
        raise ConfigError(f"rho must lie in (0, 1], got {rho}")

    lo = max(1, math.ceil(min_lag_s / frame_period_s - 1e-9))
    hi = math.floor(max_lag_s / frame_period_s + 1e-9)
    if hi < lo:
        raise ConfigError(
            f"lag window [{min_lag_s}, {max_lag_s}] s holds no whole frame "
            f"at frame period {frame_period_s} s"
        )
    if x.size <= 2 * hi:
        raise ConfigError(
            f"series of {x.size} frames is too short for max_lag of {hi} frames "
            f"(needs more than {2 * hi})"
        )

    acf = biased_acf(x)
    if acf[0] <= 0:
        raise ConfigError("series is constant; autocorrelation has no peak")

    t1 = lo + int(np.argmax(acf[lo : hi + 1]))
    ref = _three_lag(acf, t1)

    peaks, _ = find_peaks(acf[: t1 + 1])
    lags = [
        int(k)
        for k in peaks
        if lo <= k <= t1 - lo and _three_lag(acf, int(k)) >= rho * ref
    ]
    lags.append(t1)

    return PeriodEstimate(
        t1_s=t1 * frame_period_s,
        peak_lags_s=tuple(k * frame_period_s for k in sorted(set(lags))),
        acf=acf[: hi + 1],
        frame_period_s=frame_period_s,
    )


# --- grouping ----------------------------------------------------------------


def _targets(period: PeriodEstimate) -> np.ndarray:
    t1 = period.t1_s
    lags = np.asarray(period.peak_lags_s, dtype=np.float64)
    return np.unique(np.concatenate([[0.0], np.mod(lags, t1), np.mod(-lags, t1)]))


def _circular(a: np.ndarray, b: np.ndarray, t1: float) -> np.ndarray:
    d = np.abs(a - b)
    return np.minimum(d, t1 - d)


def co_sourced(start_a: float, start_b: float, period: PeriodEstimate, tol_s: float) -> bool:
    """(start_a - start_b) mod T1 lies within tol_s of some peak lag (or of 0)."""
    t1 = period.t1_s
    d = np.mod(start_a - start_b, t1)
    return bool(np.any(_circular(d, _targets(period), t1) <= tol_s))


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def group_hops(
    hops: Sequence[HopRecord], period: PeriodEstimate, tol_s: float
) -> SourceAssignment:
    if not period.peak_lags_s:
        raise ConfigError("peak set is empty")
    if tol_s < period.frame_period_s * (1 - 1e-9):
        raise ConfigError(
            f"tol_s={tol_s} must be >= the frame duration {period.frame_period_s}"
        )
    n = len(hops)
    if n == 0:
        return SourceAssignment(source_ids=())

    # canonical order keeps the result independent of input order
    order = sorted(
        range(n),
        key=lambda i: (hops[i].start_time_s, hops[i].center_frequency_hz, hops[i].start_bin),
    )
    starts = np.array([hops[i].start_time_s for i in order], dtype=np.float64)

    t1 = period.t1_s
    targets = _targets(period)
    diff = np.mod(starts[:, None] - starts[None, :], t1)
    # [n, n, targets]
    near = _circular(diff[:, :, None], targets[None, None, :], t1) <= tol_s
    linked = near.any(axis=2)

    uf = _UnionFind(n)
    for a, b in zip(*np.nonzero(np.triu(linked, k=1))):
        uf.union(int(a), int(b))

    # roots are the smallest canonical index, i.e. the earliest start
    roots = sorted({uf.find(i) for i in range(n)})
    sid_of_root: Dict[int, int] = {r: k for k, r in enumerate(roots)}

    source_ids = [UNASSIGNED] * n
    members: Dict[int, List[int]] = {k: [] for k in range(len(roots))}
    for pos, i in enumerate(order):
        sid = sid_of_root[uf.find(pos)]
        source_ids[i] = sid
        members[sid].append(pos)

    groups = []
    for sid, pos_list in members.items():
        idx = np.asarray(pos_list)
        pair_hits = near[np.ix_(idx, idx)][np.triu_indices(idx.size, k=1)]
        used = targets[pair_hits.any(axis=0)] if pair_hits.size else targets[:0]
        lags = tuple(float(t) for t in used if t > 0) + (t1,)
        groups.append(
            SourceGroup(
                source_id=sid,
                hop_indices=tuple(sorted(order[p] for p in pos_list)),
                period_s=t1,
                peak_lags_s=lags,
            )
        )

    return SourceAssignment(source_ids=tuple(source_ids), sources=tuple(groups))
