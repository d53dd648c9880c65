"""
Run configuration
-----------------
Merged view of built-in defaults, a TOML configuration file, the environment and
command-line overrides.

Resolution order, lowest to highest precedence::

    defaults -> config file -> SPADSIM_JOBS -> command-line flags

Example file::

    [sensor]
    q = 0.45
    tau_d = 150e-9
    T = 1e-8

    [augment]
    zoom = [0.8, 1.3]

    [run]
    seed = 7
"""

import logging
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .augment import AugmentRanges
from .constants import (
    DATASET_LAYOUTS,
    DEFAULT_ITERATION_CAP,
    DEFAULT_LAYOUT,
    DEFAULT_SAMPLE_MODE,
    DEFAULT_SEED,
    DEFAULT_VAL_FRACTION,
    DEFAULT_VARIANTS,
    JOBS_ENV_VAR,
)
from .errors import ConfigError
from .io.io import save
from .sampler import SampleMode
from .sensor import SensorConfig

logger = logging.getLogger(__name__)

SECTIONS = {
    "sensor": {"q", "tau_d", "T", "phi_max", "linearize_srgb"},
    "sampler": {"mode", "iteration_cap"},
    "augment": {"zoom", "rotation", "shear"},
    "dataset": {"variants", "layout", "val_fraction", "permissive"},
    "run": {"seed", "jobs", "out"},
}

RUN_CONFIG_FILE = "run_config.json"


def _fail(message: str):
    logger.error(message)
    raise ConfigError(message)


def _check_keys(data: Mapping) -> None:
    unknown = set(data) - set(SECTIONS)
    if unknown:
        _fail(f"Unknown config sections: {sorted(unknown)}.")
    for section, values in data.items():
        if not isinstance(values, Mapping):
            _fail(f"Config section [{section}] must be a table.")
        unknown = set(values) - SECTIONS[section]
        if unknown:
            _fail(f"Unknown keys in [{section}]: {sorted(unknown)}.")


def _positive_int(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        _fail(f"{name} must be a positive integer, got {value!r}.")
    return value


@dataclass
class RunConfig:
    """Fully resolved settings of one command-line run."""

    sensor: SensorConfig = field(default_factory=SensorConfig)
    mode: SampleMode = SampleMode[DEFAULT_SAMPLE_MODE]
    iteration_cap: int = DEFAULT_ITERATION_CAP
    ranges: AugmentRanges = field(default_factory=AugmentRanges)
    variants: int = DEFAULT_VARIANTS
    layout: str = DEFAULT_LAYOUT
    val_fraction: float = DEFAULT_VAL_FRACTION
    permissive: bool = False
    seed: int = DEFAULT_SEED
    jobs: int = 1
    out: Path = Path(".")

    def __post_init__(self):
        self.mode = SampleMode.from_name(self.mode)
        self.iteration_cap = _positive_int("iteration_cap", self.iteration_cap)
        self.variants = _positive_int("variants", self.variants)
        self.jobs = _positive_int("jobs", self.jobs)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            _fail(f"seed must be an integer, got {self.seed!r}.")
        if not 0 <= self.seed < 2**64:
            _fail(f"seed must lie in [0, 2**64), got {self.seed}.")
        if not 0.0 <= float(self.val_fraction) <= 1.0:
            _fail(f"val_fraction must be in [0, 1], got {self.val_fraction}.")
        if self.layout not in DATASET_LAYOUTS:
            _fail(f"layout must be one of {DATASET_LAYOUTS}, got {self.layout!r}.")
        self.permissive = bool(self.permissive)
        self.out = Path(self.out)

    def to_dict(self) -> dict:
        """Nested dictionary with the same sections as the configuration file."""
        return {
            "sensor": self.sensor.to_dict(),
            "sampler": {"mode": self.mode.name, "iteration_cap": self.iteration_cap},
            "augment": self.ranges.to_dict(),
            "dataset": {
                "variants": self.variants,
                "layout": self.layout,
                "val_fraction": self.val_fraction,
                "permissive": self.permissive,
            },
            "run": {"seed": self.seed, "jobs": self.jobs, "out": self.out.as_posix()},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "RunConfig":
        """
        Build a configuration from nested sections; missing keys take defaults.

        Raises
        ------
        ConfigError
            On unknown sections or keys, or invalid values.
        """
        _check_keys(data)
        sampler = data.get("sampler", {})
        dataset = data.get("dataset", {})
        run = data.get("run", {})
        kwargs = {
            "sensor": SensorConfig.from_dict(dict(data.get("sensor", {}))),
            "ranges": AugmentRanges.from_dict(dict(data.get("augment", {}))),
        }
        if "mode" in sampler:
            kwargs["mode"] = sampler["mode"]
        if "iteration_cap" in sampler:
            kwargs["iteration_cap"] = sampler["iteration_cap"]
        kwargs.update(dataset)
        kwargs.update(run)
        return cls(**kwargs)

    def write(self, directory=None) -> Path:
        """Echo the configuration to ``run_config.json`` in ``directory``."""
        directory = self.out if directory is None else Path(directory)
        return save(directory / RUN_CONFIG_FILE, self.to_dict(), overwrite=True)


def read_config_file(path) -> dict:
    """
    Parse a TOML configuration file.

    Raises
    ------
    ConfigError
        If the file is missing, malformed or has unknown sections or keys.
    """
    try:
        with open(path, "rb") as file:
            data = tomllib.load(file)
    except FileNotFoundError:
        _fail(f"Config file {path} does not exist.")
    except tomllib.TOMLDecodeError as error:
        _fail(f"Config file {path} is not valid TOML: {error}")
    _check_keys(data)
    return data


def _merge(base: dict, overrides: Mapping) -> dict:
    merged = {section: dict(values) for section, values in base.items()}
    for section, values in overrides.items():
        present = {k: v for k, v in values.items() if v is not None}
        if present:
            merged.setdefault(section, {}).update(present)
    return merged


def resolve_run_config(
    config_path=None,
    overrides: Mapping | None = None,
    environ: Mapping[str, str] | None = None,
) -> RunConfig:
    """
    Resolve the configuration of a run.

    Parameters
    ----------
    config_path : str or Path, optional
        TOML configuration file.
    overrides : Mapping, optional
        Command-line values as ``{section: {key: value}}``; ``None`` values are
        ignored.
    environ : Mapping, optional
        Environment to read ``SPADSIM_JOBS`` from; defaults to ``os.environ``.

    Returns
    -------
    RunConfig
        The merged configuration.
    """
    environ = os.environ if environ is None else environ
    data = read_config_file(config_path) if config_path is not None else {}
    jobs = environ.get(JOBS_ENV_VAR)
    if jobs:
        try:
            data = _merge(data, {"run": {"jobs": int(jobs)}})
        except ValueError:
            _fail(f"{JOBS_ENV_VAR} must be an integer, got '{jobs}'.")
    if overrides:
        _check_keys(overrides)
        data = _merge(data, overrides)
    config = RunConfig.from_dict(data)
    logger.debug(f"Resolved run configuration: {config.to_dict()}")
    return config
