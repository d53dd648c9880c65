"""
Errors
------
Exception types raised by spadsim. Each class also derives from the builtin
exception a caller would otherwise expect, and carries the exit code the command
line interface reports for it.
"""


class SpadSimError(Exception):
    """Base class for all spadsim errors."""

    exit_code = 1


class ConfigError(SpadSimError, ValueError):
    """Invalid sensor, augmentation or run configuration."""

    exit_code = 3


class InputError(SpadSimError, ValueError):
    """Input data that cannot be processed (bad rasters, flux, paths, stacks)."""

    exit_code = 2


class SaturationError(InputError):
    """A photon count that no finite flux can produce."""


class SimulationError(SpadSimError, RuntimeError):
    """Failure while sampling or building a dataset sample."""

    exit_code = 1

    def __init__(self, message: str, sample_id: int | None = None):
        super().__init__(message)
        self.sample_id = sample_id
