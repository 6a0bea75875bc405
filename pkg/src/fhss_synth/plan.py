from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from fhss_common.errors import ConfigError
from fhss_common.models import SourceProfile


@dataclass(frozen=True)
class HopPlanEntry:
    start_time_s: float
    dwell_time_s: float
    carrier_offset_hz: float
    phase_rad: float = 0.0
    source_id: int = 0
    truncated: bool = False

    @property
    def stop_time_s(self) -> float:
        return self.start_time_s + self.dwell_time_s

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "HopPlanEntry":
        return cls(
            start_time_s=float(d["start_time_s"]),
            dwell_time_s=float(d["dwell_time_s"]),
            carrier_offset_hz=float(d["carrier_offset_hz"]),
            phase_rad=float(d.get("phase_rad", 0.0)),
            source_id=int(d.get("source_id", 0)),
            truncated=bool(d.get("truncated", False)),
        )


def _carrier(profile: SourceProfile, k: int) -> float:
    freqs = profile.frequency_set_hz
    seq = profile.hop_sequence
    if not seq:
        return float(freqs[k % len(freqs)])
    return float(freqs[seq[k % len(seq)]])


def build_hop_plan(
    profile: SourceProfile,
    duration_s: float,
    start_offset_s: float = 0.0,
    *,
    source_id: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> List[HopPlanEntry]:
    """
    Lay out one source's hops over [start_offset_s, duration_s).

    Each fundamental period carries three dwells separated by the guard
    triple. Without an rng every phase is 0 and dwell jitter is off.
    """
    if duration_s <= 0:
        raise ConfigError(f"duration_s must be > 0, got {duration_s}")
    if start_offset_s < 0:
        raise ConfigError(f"start_offset_s must be >= 0, got {start_offset_s}")
    if not profile.frequency_set_hz:
        raise ConfigError("frequency_set_hz must not be empty")

    offsets = profile.pattern_offsets_s()
    # slot j may run until slot j+1 starts
    d1, d2, d3 = profile.guard_times_s
    w = profile.dwell_time_s
    room = (w + d1, w + d2, w + d3)
    t1 = profile.fundamental_period_s

    plan: List[HopPlanEntry] = []
    k = 0
    period = 0
    while True:
        base = start_offset_s + period * t1
        if base >= duration_s:
            break
        for j, off in enumerate(offsets):
            start = base + off
            if start >= duration_s:
                break

            dwell = w
            phase = 0.0
            if rng is not None:
                phase = float(rng.uniform(0.0, 2.0 * np.pi))
                if profile.dwell_jitter_s > 0:
                    jitter = float(
                        rng.uniform(-profile.dwell_jitter_s, profile.dwell_jitter_s)
                    )
                    dwell = min(w + jitter, room[j])

            truncated = start + dwell > duration_s
            if truncated:
                dwell = duration_s - start

            plan.append(
                HopPlanEntry(
                    start_time_s=start,
                    dwell_time_s=dwell,
                    carrier_offset_hz=_carrier(profile, k),
                    phase_rad=phase,
                    source_id=source_id,
                    truncated=truncated,
                )
            )
            k += 1
        period += 1

    return plan


def complete_hops(plan: List[HopPlanEntry]) -> List[HopPlanEntry]:
    return [h for h in plan if not h.truncated]
