from __future__ import annotations

import logging
import sys


def setup_logging(name: str = "fhss", level: str | int | None = None) -> logging.Logger:
    logger = logging.getLogger(name)
    if level is not None:
        logger.setLevel(level)
    if logger.handlers:
        return logger
    if level is None:
        logger.setLevel(logging.INFO)
    h = logging.StreamHandler(sys.stderr)
    fmt = logging.Formatter("%(asctime)s %(levelname)s %(name)s %(message)s")
    h.setFormatter(fmt)
    logger.addHandler(h)
    return logger
