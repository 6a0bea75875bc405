from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

import typer
import yaml
from pydantic import ValidationError

from fhss_common.config import load_config
from fhss_common.errors import ConfigError, InvariantError, RecordingError
from fhss_common.logging import setup_logging

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INTERNAL = 4

LOGGERS = ("fhss.cli", "fhss.synth", "fhss.detect", "fhss.eval")

log = setup_logging("fhss.cli")


@dataclass
class State:
    """Global options shared by every subcommand."""

    config: Optional[Path] = None
    seed: Optional[int] = None
    jobs: int = 1
    verbose: bool = False


def state(ctx: typer.Context) -> State:
    if not isinstance(ctx.obj, State):
        ctx.obj = State()
    return ctx.obj


def configure_logging(level: str) -> None:
    for name in LOGGERS:
        setup_logging(name, level.upper())


def _print(obj: Any) -> None:
    typer.echo(json.dumps(obj, indent=2, default=str))


def read_config(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        return load_config(path)
    except FileNotFoundError as e:
        raise ConfigError(str(e)) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    except ValueError as e:
        raise ConfigError(f"invalid config {path}: {e}") from e


def _fail(code: int, message: str) -> None:
    typer.echo(f"error: {message}", err=True)
    raise typer.Exit(code)


@contextmanager
def exit_codes() -> Iterator[None]:
    """Map library errors to the CLI exit-code contract."""
    try:
        yield
    except typer.Exit:
        raise
    except (ConfigError, ValidationError, typer.BadParameter) as e:
        _fail(EXIT_CONFIG, str(e))
    except InvariantError as e:
        log.error(f"invariant_breach error={e}")
        _fail(EXIT_INTERNAL, str(e))
    except (RecordingError, OSError) as e:
        _fail(EXIT_IO, str(e))
    except Exception as e:
        log.exception(f"unexpected_error type={type(e).__name__}")
        _fail(EXIT_INTERNAL, f"{type(e).__name__}: {e}")
