from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from fhss_common.errors import ConfigError
from fhss_detect.extraction import HopRecord
from fhss_synth.plan import HopPlanEntry


@dataclass(frozen=True)
class Matching:
    # (truth index, estimate index)
    pairs: Tuple[Tuple[int, int], ...]
    # complete truth hops with no estimate
    missed: Tuple[int, ...]
    # estimates matched to nothing
    false_alarms: Tuple[int, ...]
    # estimates matched to a truncated truth hop; neither hit nor false alarm
    ignored: Tuple[int, ...] = field(default=())

    @property
    def n_matched(self) -> int:
        return len(self.pairs)


def _freq_ok(
    truth: HopPlanEntry, est: HopRecord, center_frequency_hz: float, bin_width_hz: float
) -> bool:
    gate = max(est.bandwidth_hz, 2.0 * bin_width_hz)
    f_true = center_frequency_hz + truth.carrier_offset_hz
    return abs(est.center_frequency_hz - f_true) <= gate


def match_hops(
    truth: Sequence[HopPlanEntry],
    est: Sequence[HopRecord],
    gate_s: float,
    *,
    center_frequency_hz: float = 0.0,
    bin_width_hz: float = 0.0,
) -> Matching:
    """
    Greedy nearest-start matching.

    A pair is eligible when the start times differ by at most gate_s and the
    estimated centre lies within max(estimated bandwidth, 2 bins) of the
    true carrier. Eligible pairs are taken in order of start error.
    """
    if gate_s <= 0:
        raise ConfigError(f"gate_s must be > 0, got {gate_s}")

    candidates: List[Tuple[float, int, int]] = []
    for i, t in enumerate(truth):
        for j, e in enumerate(est):
            err = abs(e.start_time_s - t.start_time_s)
            if err <= gate_s and _freq_ok(t, e, center_frequency_hz, bin_width_hz):
                candidates.append((err, i, j))
    candidates.sort()

    used_t: set[int] = set()
    used_e: set[int] = set()
    pairs: List[Tuple[int, int]] = []
    ignored: List[int] = []
    for _, i, j in candidates:
        if i in used_t or j in used_e:
            continue
        used_t.add(i)
        used_e.add(j)
        if truth[i].truncated:
            ignored.append(j)
        else:
            pairs.append((i, j))

    missed = [i for i, t in enumerate(truth) if not t.truncated and i not in used_t]
    false_alarms = [j for j in range(len(est)) if j not in used_e]
    return Matching(
        pairs=tuple(sorted(pairs)),
        missed=tuple(missed),
        false_alarms=tuple(false_alarms),
        ignored=tuple(sorted(ignored)),
    )
