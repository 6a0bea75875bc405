from __future__ import annotations

from fhss_cli.main import app

__all__ = ["app"]
