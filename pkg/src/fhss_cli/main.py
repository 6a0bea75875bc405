from __future__ import annotations

import shutil
from pathlib import Path
from typing import Optional

import typer

from fhss_cli.common import State, configure_logging
from fhss_cli.detect import detect_cmd
from fhss_cli.evaluate import eval_cmd
from fhss_cli.sweep import sweep_cmd
from fhss_cli.synth import synth_cmd
from fhss_common.settings import get_settings

app = typer.Typer(
    help="fhss-scope: synthesize, detect, classify and evaluate frequency-hopping signals.",
    invoke_without_command=True,  # force group mode
    no_args_is_help=True,
)

app.command("synth")(synth_cmd)
app.command("detect")(detect_cmd)
app.command("eval")(eval_cmd)
app.command("sweep")(sweep_cmd)


TEMPLATES_DIR = Path(__file__).parent / "config_templates"


def _copy_file(src: Path, dst: Path) -> None:
    dst.parent.mkdir(parents=True, exist_ok=True)
    if dst.exists():
        typer.echo(f"skip: {dst} already exists")
        return
    shutil.copy2(src, dst)
    typer.echo(f"created: {dst}")


@app.callback()
def main(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        None, "--config", "-c", help="Config file for the subcommand (YAML or JSON)"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Seed for reproducible runs"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", min=1, help="Sweep worker processes"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
) -> None:
    """
    Root command for fhss-scope.

    If you run `fhss-scope` with no subcommand, help is shown.
    """
    settings = get_settings()
    configure_logging("DEBUG" if verbose else settings.log_level)
    ctx.obj = State(
        config=config,
        seed=seed,
        jobs=jobs if jobs is not None else settings.jobs,
        verbose=verbose,
    )


@app.command("init")
def init_cmd(
    path: Path = typer.Option(
        Path("config"), "--path", "-p", help="Output config folder"
    ),
) -> None:
    """
    Create a starter config folder with scenario, pipeline and sweep examples.
    """
    if not TEMPLATES_DIR.exists():
        raise typer.BadParameter(
            f"Templates folder missing in package: {TEMPLATES_DIR}"
        )

    for src in sorted(TEMPLATES_DIR.rglob("*.yaml")):
        _copy_file(src, path / src.relative_to(TEMPLATES_DIR))

    typer.echo("\nDone. Next:")
    typer.echo(f"  fhss-scope synth --scenario {path}/scenarios/futaba-desk.yaml --out run/desk.iq --truth run/desk.truth.json")
    typer.echo(f"  fhss-scope -c {path}/pipeline.example.yaml detect --raw run/desk.iq --hops run/desk.hops.csv")
    typer.echo("  fhss-scope eval --truth run/desk.truth.json --hops run/desk.hops.csv")
