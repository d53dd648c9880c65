"""
Sensor
------
Physical parameters of a single-photon avalanche diode pixel: detection
efficiency, dead time, exposure time and the flux assigned to full-scale
intensity.

"""

import hashlib
import json
import logging
import math
import numbers

from .constants import DEFAULT_EXPOSURE, DEFAULT_PHI_MAX, DEFAULT_Q, DEFAULT_TAU_D
from .errors import ConfigError

logger = logging.getLogger(__name__)


def _fail(message: str):
    logger.error(message)
    raise ConfigError(message)


class SensorConfig:
    """
    SPAD pixel configuration.

    Instances are treated as values: every field is validated on construction and
    ``with_exposure`` returns a modified copy instead of mutating the instance.
    """

    def __init__(
        self,
        q: float = DEFAULT_Q,
        tau_d: float = DEFAULT_TAU_D,
        T: float = DEFAULT_EXPOSURE,
        phi_max: float = DEFAULT_PHI_MAX,
        linearize_srgb: bool = False,
    ):
        """
        Initialize a SensorConfig object.

        Parameters
        ----------
        q : float
            Detection efficiency, a fraction in (0, 1].
        tau_d : float
            Dead time after each detection, in seconds. Zero gives a plain
            Poisson counter.
        T : float
            Exposure time in seconds.
        phi_max : float
            Photon flux (photons per second) assigned to intensity 255.
        linearize_srgb : bool
            Decode sRGB intensities to linear light before mapping them to flux.

        Raises
        ------
        ConfigError
            If any field violates its range.
        """
        self._q = self._check_q(q)
        self._tau_d = self._check_tau_d(tau_d)
        self._T = self._check_positive("T", T)
        self._phi_max = self._check_positive("phi_max", phi_max)
        if not isinstance(linearize_srgb, bool):
            _fail("linearize_srgb must be a boolean.")
        self._linearize_srgb = linearize_srgb

    @staticmethod
    def _as_float(name, value) -> float:
        if isinstance(value, bool) or not isinstance(value, numbers.Real):
            _fail(f"{name} must be a real number, got {type(value).__name__}.")
        value = float(value)
        if not math.isfinite(value):
            _fail(f"{name} must be finite, got {value}.")
        return value

    def _check_q(self, value) -> float:
        value = self._as_float("q", value)
        if not 0.0 < value <= 1.0:
            _fail(f"q must be in (0, 1], got {value}.")
        return value

    def _check_tau_d(self, value) -> float:
        value = self._as_float("tau_d", value)
        if value < 0.0:
            _fail(f"tau_d must be non-negative, got {value}.")
        return value

    def _check_positive(self, name, value) -> float:
        value = self._as_float(name, value)
        if value <= 0.0:
            _fail(f"{name} must be positive, got {value}.")
        return value

    @property
    def q(self) -> float:
        """Detection efficiency."""
        return self._q

    @property
    def tau_d(self) -> float:
        """Dead time in seconds."""
        return self._tau_d

    @property
    def T(self) -> float:
        """Exposure time in seconds."""
        return self._T

    @property
    def phi_max(self) -> float:
        """Flux at full-scale intensity, photons per second."""
        return self._phi_max

    @property
    def linearize_srgb(self) -> bool:
        """Whether intensities are sRGB-decoded before the flux mapping."""
        return self._linearize_srgb

    @property
    def max_count(self) -> float:
        """Hard ceiling on detections in one exposure (infinite without dead time)."""
        if self.tau_d == 0.0:
            return math.inf
        return math.floor(self.T / self.tau_d) + 1

    def with_exposure(self, T: float) -> "SensorConfig":
        """Return a copy of this configuration with exposure time ``T``."""
        return SensorConfig(
            q=self.q,
            tau_d=self.tau_d,
            T=T,
            phi_max=self.phi_max,
            linearize_srgb=self.linearize_srgb,
        )

    def to_dict(self) -> dict:
        """
        Convert the configuration to a dictionary.

        Returns
        -------
        dict
            Field names mapped to values.
        """
        return {
            "q": self.q,
            "tau_d": self.tau_d,
            "T": self.T,
            "phi_max": self.phi_max,
            "linearize_srgb": self.linearize_srgb,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SensorConfig":
        """
        Build a configuration from a dictionary produced by ``to_dict``.

        Missing keys take their defaults; unknown keys raise ``ConfigError``.
        """
        unknown = set(data) - {"q", "tau_d", "T", "phi_max", "linearize_srgb"}
        if unknown:
            _fail(f"Unknown sensor keys: {sorted(unknown)}.")
        return cls(**data)

    def canonical_bytes(self) -> bytes:
        """Canonical serialization used for hashing."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode(
            "utf-8"
        )

    @property
    def config_hash(self) -> str:
        """SHA-256 hex digest of the canonical serialization."""
        return hashlib.sha256(self.canonical_bytes()).hexdigest()

    @property
    def hash8(self) -> str:
        """First eight hex digits of ``config_hash``."""
        return self.config_hash[:8]

    def __eq__(self, other):
        if not isinstance(other, SensorConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.canonical_bytes())

    def __repr__(self):
        return (
            f"SensorConfig(q={self.q}, tau_d={self.tau_d}, T={self.T}, "
            f"phi_max={self.phi_max}, linearize_srgb={self.linearize_srgb})"
        )
