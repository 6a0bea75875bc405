from __future__ import annotations

import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, field_validator

from fhss_common.errors import ConfigError
from fhss_detect.extraction import HopRecord
from fhss_eval.matching import match_hops
from fhss_synth.plan import HopPlanEntry


class HopComparison(BaseModel):
    true_start_s: float
    true_dwell_s: float
    true_frequency_hz: float
    est_start_s: Optional[float] = None
    est_dwell_s: Optional[float] = None
    est_frequency_hz: Optional[float] = None

    @property
    def detected(self) -> bool:
        return self.est_dwell_s is not None


class EvalReport(BaseModel):
    capture_id: str = ""
    n_expected: int = Field(..., ge=1)
    n_detected: int = Field(..., ge=0)
    n_missed: int = Field(..., ge=0)
    n_false_alarms: int = Field(..., ge=0)
    nmse: float = Field(..., ge=0)
    start_nmse: float = Field(..., ge=0)
    gate_s: float
    per_hop: List[HopComparison] = Field(default_factory=list)
    axis: Optional[Dict[str, Any]] = None

    @field_validator("nmse", "start_nmse")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("NMSE must be finite")
        return v

    @property
    def detect_rate(self) -> float:
        return self.n_detected / self.n_expected


def nmse(truth_times: Sequence[float], est_times: Sequence[float]) -> float:
    """
    Mean of ((t_hat - t) / t)^2. Missed hops are passed with t_hat = 0 and
    contribute exactly 1.
    """
    t = np.asarray(truth_times, dtype=np.float64)
    e = np.asarray(est_times, dtype=np.float64)
    if t.size == 0:
        raise ConfigError("NMSE needs at least one true hop")
    if t.shape != e.shape:
        raise ConfigError(f"NMSE needs equal lengths, got {t.size} and {e.size}")
    if np.any(t == 0):
        raise ConfigError("true hopping time must be non-zero")
    return float(np.mean(((e - t) / t) ** 2))


def evaluate(
    truth: Sequence[HopPlanEntry],
    est: Sequence[HopRecord],
    *,
    gate_s: Optional[float] = None,
    gate_frac: float = 0.5,
    center_frequency_hz: float = 0.0,
    bin_width_hz: float = 0.0,
    capture_id: str = "",
) -> EvalReport:
    """
    Dwell-time NMSE over complete truth hops, zero-filling misses. Start-time
    NMSE normalises the start error by the true dwell.
    """
    complete = [h for h in truth if not h.truncated]
    if not complete:
        raise ConfigError("truth holds no complete hops to evaluate against")
    if gate_s is None:
        gate_s = gate_frac * float(np.median([h.dwell_time_s for h in complete]))

    m = match_hops(
        truth, est, gate_s, center_frequency_hz=center_frequency_hz, bin_width_hz=bin_width_hz
    )
    by_truth = {i: j for i, j in m.pairs}

    true_dwell: List[float] = []
    est_dwell: List[float] = []
    start_terms: List[float] = []
    per_hop: List[HopComparison] = []
    for i, h in enumerate(truth):
        if h.truncated:
            continue
        row = HopComparison(
            true_start_s=h.start_time_s,
            true_dwell_s=h.dwell_time_s,
            true_frequency_hz=center_frequency_hz + h.carrier_offset_hz,
        )
        true_dwell.append(h.dwell_time_s)
        j = by_truth.get(i)
        if j is None:
            est_dwell.append(0.0)
            start_terms.append(1.0)
        else:
            e = est[j]
            est_dwell.append(e.dwell_time_s)
            start_terms.append(((e.start_time_s - h.start_time_s) / h.dwell_time_s) ** 2)
            row = row.model_copy(
                update={
                    "est_start_s": e.start_time_s,
                    "est_dwell_s": e.dwell_time_s,
                    "est_frequency_hz": e.center_frequency_hz,
                }
            )
        per_hop.append(row)

    return EvalReport(
        capture_id=capture_id,
        n_expected=len(complete),
        n_detected=m.n_matched,
        n_missed=len(m.missed),
        n_false_alarms=len(m.false_alarms),
        nmse=nmse(true_dwell, est_dwell),
        start_nmse=float(np.mean(start_terms)),
        gate_s=gate_s,
        per_hop=per_hop,
    )
