from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional

import typer

from fhss_cli.common import _print, exit_codes, log, read_config, state
from fhss_common.config import load_json
from fhss_common.errors import ConfigError, RecordingError
from fhss_common.iq import load_meta
from fhss_detect.dumps import read_hops_csv, run_metadata_path
from fhss_eval.metrics import EvalReport, evaluate
from fhss_synth.scenarios import load_truth


def read_run_metadata(hops: Path) -> Optional[Dict[str, Any]]:
    run_path = run_metadata_path(hops)
    if not run_path.exists():
        return None
    try:
        return load_json(run_path)
    except ValueError as e:
        raise RecordingError(f"cannot read run metadata {run_path}: {e}") from e


def hops_capture_id(run: Optional[Dict[str, Any]], meta: Optional[Path]) -> Optional[str]:
    """capture_id of a detection run: its run metadata first, then --meta."""
    if run is not None:
        return str(run.get("capture_id", ""))
    if meta is not None:
        return load_meta(meta).capture_id
    return None


def write_report(path: Path, report: EvalReport) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise RecordingError(f"cannot write report {path}: {e}") from e


def eval_cmd(
    ctx: typer.Context,
    truth: Path = typer.Option(..., "--truth", "-t", help="Truth hop plan JSON"),
    hops: Path = typer.Option(..., "--hops", help="Hops CSV from detect"),
    meta: Optional[Path] = typer.Option(
        None, "--meta", help="Recording metadata, used when no run metadata sits next to --hops"
    ),
    report: Optional[Path] = typer.Option(None, "--report", help="EvalReport JSON output"),
    gate: Optional[float] = typer.Option(
        None, "--gate", help="Start-time matching gate in seconds (default: gate_frac x median dwell)"
    ),
    gate_frac: Optional[float] = typer.Option(None, "--gate-frac"),
) -> None:
    """
    Score a hops CSV against the truth plan with dwell-time NMSE.
    """
    st = state(ctx)
    with exit_codes():
        opts = read_config(st.config)
        gate_s = gate if gate is not None else opts.get("gate_s")
        frac = gate_frac if gate_frac is not None else float(opts.get("gate_frac", 0.5))
        if gate_s is not None and gate_s <= 0:
            raise typer.BadParameter(f"--gate must be > 0, got {gate_s}")

        tf = load_truth(truth)
        est, _ = read_hops_csv(hops)
        run = read_run_metadata(hops)
        cid = hops_capture_id(run, meta)
        if cid is None:
            log.warning(f"capture_id_unchecked hops={hops}")
        elif cid != tf.capture_id:
            raise ConfigError(
                f"capture_id mismatch: truth has {tf.capture_id!r}, hops come from {cid!r}"
            )

        rep = evaluate(
            tf.hops,
            est,
            gate_s=gate_s,
            gate_frac=frac,
            center_frequency_hz=tf.center_frequency_hz,
            bin_width_hz=float((run or {}).get("bin_width_hz") or 0.0),
            capture_id=tf.capture_id,
        )
        if report is not None:
            write_report(report, rep)
        log.info(f"eval_done capture_id={rep.capture_id} nmse={rep.nmse:.6g}")
        _print(
            {
                **rep.model_dump(exclude={"per_hop"}),
                "detect_rate": rep.detect_rate,
            }
        )
