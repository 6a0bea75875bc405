from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Any, Optional, Tuple

from fhss_common.errors import ConfigError
from fhss_common.iq import IqRecording
from fhss_common.logging import setup_logging
from fhss_common.models import PipelineConfig, StftConfig
from fhss_detect.classification import (
    PeriodEstimate,
    SourceAssignment,
    estimate_period,
    group_hops,
    series_for,
)
from fhss_detect.detection import (
    BinaryMask,
    ThresholdReport,
    binarize,
    estimate_threshold,
    fit_kernel_cols,
    morph_close,
)
from fhss_detect.extraction import HopRecord, extract_hops, merge_hops, prune_hops
from fhss_detect.spectrogram import Spectrogram, auto_window, auto_window_rationale, compute

log = setup_logging("fhss.detect")


@dataclass(frozen=True)
class DetectionResult:
    capture_id: str
    mask: BinaryMask
    report: ThresholdReport
    hops: Tuple[HopRecord, ...]
    assignment: SourceAssignment
    extracted_count: int
    period: Optional[PeriodEstimate] = None
    spectrogram: Optional[Spectrogram] = None
    raw_mask: Optional[BinaryMask] = None
    stft: Optional[StftConfig] = None
    window_rationale: Optional[str] = None
    kernel: Optional[Tuple[int, int]] = None

    @property
    def source_ids(self) -> Tuple[int, ...]:
        return self.assignment.source_ids


class PipelineRunner:
    """
    Runs spectrogram -> threshold -> closing -> extraction -> classification
    over one recording, or resumes from a stored mask.
    """

    def __init__(self, config: Any = None) -> None:
        self._cfg = self._normalize_config(config)

    @property
    def config(self) -> PipelineConfig:
        return self._cfg

    def run(self, rec: IqRecording) -> DetectionResult:
        stft, rationale = self._resolve_stft(len(rec))

        t0 = time.monotonic()
        spec = compute(rec, stft)
        self._stage("spectrogram", t0, f"bins={spec.num_bins} frames={spec.num_frames}")

        det = self._cfg.detection
        t0 = time.monotonic()
        report = estimate_threshold(spec, det.top_frac)
        raw = binarize(spec, report.mu)
        self._stage(
            "binarize",
            t0,
            f"mu_db={report.mu:.2f} s_max_db={report.s_max:.2f} "
            f"occupancy={report.occupancy_fraction:.4f}",
        )

        t0 = time.monotonic()
        cols = fit_kernel_cols(det.kernel_cols, spec.frame_period_s, det.max_kernel_span_s)
        if cols != det.kernel_cols:
            log.info(
                f"kernel_narrowed cols={det.kernel_cols}->{cols} "
                f"frame_ms={spec.frame_period_s * 1e3:.4f} max_span_ms={det.max_kernel_span_s * 1e3:.3f}"
            )
        closed = morph_close(raw, det.kernel_rows, cols)
        self._stage(
            "close",
            t0,
            f"kernel={det.kernel_rows}x{cols} occupancy={closed.occupancy:.4f}",
        )

        return self._finish(
            closed,
            report,
            spectrogram=spec,
            raw_mask=raw,
            stft=stft,
            window_rationale=rationale,
            kernel=(det.kernel_rows, cols),
        )

    def run_from_mask(self, mask: BinaryMask, report: ThresholdReport) -> DetectionResult:
        """Resume at extraction from a closed mask."""
        log.info(f"resume_from_mask capture_id={mask.capture_id} shape={mask.shape}")
        return self._finish(mask, report)

    def _finish(
        self,
        mask: BinaryMask,
        report: ThresholdReport,
        **extra: Any,
    ) -> DetectionResult:
        ext = self._cfg.extraction
        t0 = time.monotonic()
        extracted = extract_hops(mask)
        joined = extracted
        if ext.merges:
            joined = merge_hops(mask, extracted, ext.merge_gap_s, ext.merge_gap_hz)
        hops = prune_hops(joined, ext.min_frames, ext.min_bins)
        self._stage(
            "extract",
            t0,
            f"rectangles={len(extracted)} merged={len(joined)} hops={len(hops)}",
        )

        period, assignment = self._classify(mask, hops)
        return DetectionResult(
            capture_id=mask.capture_id,
            mask=mask,
            report=report,
            hops=tuple(hops),
            assignment=assignment,
            extracted_count=len(extracted),
            period=period,
            **extra,
        )

    def _classify(
        self, mask: BinaryMask, hops: list[HopRecord]
    ) -> Tuple[Optional[PeriodEstimate], SourceAssignment]:
        cls = self._cfg.classification
        if not cls.enabled or not hops:
            return None, SourceAssignment.unassigned(len(hops))

        t0 = time.monotonic()
        series = series_for(mask, cls.series, hops)
        try:
            period = estimate_period(
                series,
                mask.frame_period_s,
                min_lag_s=cls.min_lag_s,
                max_lag_s=cls.max_lag_s,
                rho=cls.rho,
            )
        except ConfigError as e:
            log.warning(f"classification_skipped reason={e}")
            return None, SourceAssignment.unassigned(len(hops))

        tol = cls.tol_s if cls.tol_s is not None else cls.tol_frames * mask.frame_period_s
        assignment = group_hops(hops, period, tol)
        self._stage(
            "classify",
            t0,
            f"t1_ms={period.t1_s * 1e3:.4f} peaks={len(period.peak_lags_s)} "
            f"sources={assignment.num_sources}",
        )
        return period, assignment

    def _resolve_stft(self, signal_len: int) -> Tuple[StftConfig, Optional[str]]:
        stft = self._cfg.stft
        if not stft.auto_candidates:
            return stft, None
        m = auto_window(signal_len, stft.auto_candidates)
        rationale = auto_window_rationale(signal_len, stft.auto_candidates, m)
        data = stft.model_dump()
        data.update(window_size=m, overlap=None, fft_size=None, auto_candidates=[])
        log.info(f"auto_window chosen={m} candidates={stft.auto_candidates}")
        return StftConfig.model_validate(data), rationale

    def _stage(self, name: str, t0: float, detail: str) -> None:
        log.info(f"stage_done stage={name} elapsed_s={time.monotonic() - t0:.3f} {detail}")

    def _normalize_config(self, config: Any) -> PipelineConfig:
        """Accept None, a dict or a PipelineConfig."""
        if config is None:
            return PipelineConfig()
        if isinstance(config, PipelineConfig):
            return config
        if isinstance(config, dict):
            return PipelineConfig.model_validate(config)
        raise TypeError("pipeline config must be dict or PipelineConfig")


def detect(rec: IqRecording, config: Any = None) -> DetectionResult:
    return PipelineRunner(config).run(rec)
