from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Optional

import typer

from fhss_cli.common import _print, exit_codes, log, read_config, state
from fhss_cli.synth import default_meta_path
from fhss_common.iq import load_recording
from fhss_common.models import PipelineConfig
from fhss_common.settings import get_settings
from fhss_detect.dumps import (
    read_mask,
    write_acf,
    write_hops_csv,
    write_mask,
    write_run_metadata,
    write_spectrogram,
)
from fhss_detect.pipeline import DetectionResult, PipelineRunner


def build_pipeline_config(base: Dict[str, Any], overrides: Dict[str, Dict[str, Any]]) -> PipelineConfig:
    """Merge non-None CLI overrides into a config mapping and validate it."""
    data = PipelineConfig.model_validate(base).model_dump()
    for section, values in overrides.items():
        picked = {k: v for k, v in values.items() if v is not None}
        if not picked:
            continue
        if section == "stft" and "window_size" in picked:
            # a new window resets the derived sizes unless given explicitly
            data["stft"].update(overlap=None, fft_size=None, auto_candidates=[])
        data[section].update(picked)
    return PipelineConfig.model_validate(data)


def write_dumps(result: DetectionResult, cfg: PipelineConfig, image: bool) -> List[str]:
    written: List[str] = []
    io = cfg.io
    if io.dump_spectrogram:
        if result.spectrogram is None:
            log.warning("dump_skipped kind=spectrogram reason=resumed_from_mask")
        else:
            written += [str(p) for p in write_spectrogram(io.dump_spectrogram, result.spectrogram, image)]
    if io.dump_mask:
        written += [str(p) for p in write_mask(io.dump_mask, result.mask, result.report)]
    if io.dump_acf:
        if result.period is None:
            log.warning("dump_skipped kind=acf reason=no_period_estimate")
        else:
            written.append(str(write_acf(io.dump_acf, result.period)))
    return written


def detect_cmd(
    ctx: typer.Context,
    raw: Optional[Path] = typer.Option(None, "--raw", "-r", help="Raw cf32_le IQ input"),
    meta: Optional[Path] = typer.Option(
        None, "--meta", help="Metadata JSON (default: <raw stem>.meta.json)"
    ),
    from_mask: Optional[Path] = typer.Option(
        None, "--from-mask", help="Resume at extraction from a mask dump"
    ),
    hops: Optional[Path] = typer.Option(None, "--hops", help="Hops CSV output"),
    dump_spectrogram: Optional[Path] = typer.Option(None, "--dump-spectrogram"),
    dump_mask: Optional[Path] = typer.Option(None, "--dump-mask"),
    dump_acf: Optional[Path] = typer.Option(None, "--dump-acf"),
    image: Optional[bool] = typer.Option(
        None, "--image/--no-image", help="Also render the spectrogram dump as PNG"
    ),
    window: Optional[int] = typer.Option(None, "--window", "-M", min=1),
    overlap: Optional[int] = typer.Option(None, "--overlap", "-L", min=0),
    top_frac: Optional[float] = typer.Option(None, "--top-frac"),
    kernel_rows: Optional[int] = typer.Option(None, "--kernel-rows", min=1),
    kernel_cols: Optional[int] = typer.Option(None, "--kernel-cols", min=1),
    min_frames: Optional[int] = typer.Option(None, "--min-frames", min=1),
    min_bins: Optional[int] = typer.Option(None, "--min-bins", min=1),
    no_classify: bool = typer.Option(False, "--no-classify", help="Skip source grouping"),
) -> None:
    """
    Run spectrogram, detection, extraction and classification over a recording.
    """
    st = state(ctx)
    with exit_codes():
        cfg = build_pipeline_config(
            read_config(st.config),
            {
                "stft": {"window_size": window, "overlap": overlap},
                "detection": {
                    "top_frac": top_frac,
                    "kernel_rows": kernel_rows,
                    "kernel_cols": kernel_cols,
                },
                "extraction": {"min_frames": min_frames, "min_bins": min_bins},
                "classification": {"enabled": False if no_classify else None},
                "io": {
                    "raw": str(raw) if raw else None,
                    "meta": str(meta) if meta else None,
                    "hops": str(hops) if hops else None,
                    "dump_spectrogram": str(dump_spectrogram) if dump_spectrogram else None,
                    "dump_mask": str(dump_mask) if dump_mask else None,
                    "dump_acf": str(dump_acf) if dump_acf else None,
                },
            },
        )
        if st.seed is not None:
            cfg = cfg.model_copy(update={"seed": st.seed})
        if not cfg.io.hops:
            raise typer.BadParameter("--hops is required (or io.hops in --config)")

        runner = PipelineRunner(cfg)
        if from_mask is not None:
            if cfg.io.raw:
                raise typer.BadParameter("use either --raw or --from-mask, not both")
            mask, report = read_mask(from_mask)
            result = runner.run_from_mask(mask, report)
        else:
            if not cfg.io.raw:
                raise typer.BadParameter("--raw or --from-mask is required")
            meta_path = cfg.io.meta or default_meta_path(Path(cfg.io.raw))
            result = runner.run(load_recording(cfg.io.raw, meta_path))

        write_hops_csv(cfg.io.hops, result.hops, result.source_ids)
        config_echo = cfg.model_dump(mode="json")
        if result.stft is not None:
            config_echo["stft"] = result.stft.model_dump(mode="json")
        run_path = write_run_metadata(cfg.io.hops, result, config_echo)
        dumps = write_dumps(result, cfg, get_settings().dump_images if image is None else image)

        log.info(f"detect_done capture_id={result.capture_id} hops={len(result.hops)}")
        _print(
            {
                "capture_id": result.capture_id,
                "hops": len(result.hops),
                "sources": result.assignment.num_sources,
                "t1_ms": None if result.period is None else result.period.t1_s * 1e3,
                "written": [str(cfg.io.hops), str(run_path), *dumps],
            }
        )
