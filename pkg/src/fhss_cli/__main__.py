from __future__ import annotations

from fhss_cli.cli import app

if __name__ == "__main__":
    app()
