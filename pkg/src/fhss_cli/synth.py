from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer

from fhss_cli.common import _print, exit_codes, log, read_config, state
from fhss_common.iq import save_recording
from fhss_common.models import Scenario
from fhss_synth.scenarios import get_preset, preset_names, save_truth, synthesize


def default_meta_path(raw: Path) -> Path:
    return raw.with_name(raw.stem + ".meta.json")


def resolve_scenario(
    scenario_file: Optional[Path], preset: Optional[str], config: Optional[Path]
) -> Scenario:
    if scenario_file is not None and preset is not None:
        raise typer.BadParameter("use either --scenario or --preset, not both")
    if preset is not None:
        return get_preset(preset)
    source = scenario_file or config
    if source is None:
        return get_preset("futaba-desk")
    return Scenario.model_validate(read_config(source))


def synth_cmd(
    ctx: typer.Context,
    scenario: Optional[Path] = typer.Option(
        None, "--scenario", "-s", help="Scenario file (YAML or JSON)"
    ),
    preset: Optional[str] = typer.Option(
        None, "--preset", help=f"Built-in scenario: {', '.join(preset_names())}"
    ),
    out: Path = typer.Option(..., "--out", "-o", help="Raw cf32_le IQ output"),
    meta: Optional[Path] = typer.Option(
        None, "--meta", help="Metadata JSON (default: <out stem>.meta.json)"
    ),
    truth: Optional[Path] = typer.Option(None, "--truth", help="Truth hop plan JSON"),
    seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Overrides the global --seed"),
) -> None:
    """
    Synthesize an FH recording from a scenario and write raw, meta and truth files.
    """
    st = state(ctx)
    with exit_codes():
        sc = resolve_scenario(scenario, preset, st.config)
        run_seed = seed if seed is not None else st.seed
        if run_seed is not None:
            sc = sc.with_seed(run_seed)

        result = synthesize(sc)
        meta_path = meta or default_meta_path(out)
        save_recording(result.recording, out, meta_path)
        written = [str(out), str(meta_path)]
        if truth is not None:
            save_truth(result, truth)
            written.append(str(truth))

        complete = sum(1 for h in result.truth if not h.truncated)
        log.info(f"synth_done capture_id={result.recording.capture_id} files={len(written)}")
        _print(
            {
                "capture_id": result.recording.capture_id,
                "scenario": sc.name,
                "samples": len(result.recording),
                "hops": len(result.truth),
                "complete_hops": complete,
                "written": written,
            }
        )
