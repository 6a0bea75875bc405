from __future__ import annotations


class FhssError(Exception):
    """Base class for all fhss-scope errors."""


class ConfigError(FhssError, ValueError):
    """A configuration value or file violates a documented rule."""


class RecordingError(FhssError, IOError):
    """An IQ recording or stage dump cannot be read or written."""


class InvariantError(FhssError, RuntimeError):
    """An internal invariant was breached while processing."""
