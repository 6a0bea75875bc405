from __future__ import annotations

from pathlib import Path
from typing import Optional

import typer

from fhss_cli.common import _print, exit_codes, log, read_config, state
from fhss_common.errors import RecordingError
from fhss_common.models import SweepConfig
from fhss_eval.sweep import run_sweep, write_sweep_csv


def sweep_cmd(
    ctx: typer.Context,
    sweep_config: Optional[Path] = typer.Option(
        None, "--sweep-config", help="Sweep file (defaults to the global --config)"
    ),
    out: Path = typer.Option(..., "--out", "-o", help="Sweep CSV output"),
    report: Optional[Path] = typer.Option(None, "--report", help="Per-trial JSON output"),
    trials: Optional[int] = typer.Option(None, "--trials", min=1),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", min=1),
    progress: bool = typer.Option(False, "--progress/--no-progress"),
) -> None:
    """
    NMSE over an SNR, window-size or synthetic-distance axis.
    """
    st = state(ctx)
    with exit_codes():
        source = sweep_config or st.config
        if source is None:
            raise typer.BadParameter("--sweep-config is required")
        data = read_config(source)
        if trials is not None:
            data["trials"] = trials
        if st.seed is not None:
            data["seed"] = st.seed
        cfg = SweepConfig.model_validate(data)

        rep = run_sweep(cfg, jobs=jobs or st.jobs, progress=progress)
        write_sweep_csv(out, rep)
        written = [str(out)]
        if report is not None:
            try:
                report.parent.mkdir(parents=True, exist_ok=True)
                report.write_text(rep.model_dump_json(indent=2) + "\n", encoding="utf-8")
            except OSError as e:
                raise RecordingError(f"cannot write sweep report {report}: {e}") from e
            written.append(str(report))

        log.info(f"sweep_done axis={rep.axis_kind} rows={len(rep.rows)}")
        _print(
            {
                "axis": rep.axis_label,
                "rows": [r.model_dump(exclude={"trials"}) for r in rep.rows],
                "written": written,
            }
        )
