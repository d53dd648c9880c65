"""
Sampler
-------
Photon-count sampling driven by counter-based keyed randomness.

Every pixel draw is addressed by a key ``(seed, frame, x, y, channel)``. The key
is hashed to a 64-bit stream state and the ``k``-th random word of the stream is
``mix64(state + (k + 1) * GAMMA)``, i.e. a SplitMix64 sequence started from the
key state. ``mix64`` is the SplitMix64 finalizer and the key state is

    h = mix64(seed + GAMMA)
    h = mix64((h ^ field) + GAMMA)   for field in (frame, x, y, channel)

with all arithmetic modulo 2**64. Nothing is shared between keys, so results do
not depend on how pixels are split across workers. The mixing constants are
frozen; golden values in the test suite guard them.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import DEFAULT_ITERATION_CAP
from .errors import ConfigError, InputError, SimulationError
from .photon_model import expected_count, variance_count
from .sensor import SensorConfig

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_GAMMA = np.uint64(GAMMA)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S11, _S27, _S30, _S31 = (np.uint64(s) for s in (11, 27, 30, 31))
_TWO_POW_M53 = 2.0**-53


class SampleMode(Enum):
    """How detection counts are drawn."""

    EXACT_RENEWAL = "EXACT_RENEWAL"
    GAUSSIAN_APPROX = "GAUSSIAN_APPROX"

    @classmethod
    def from_name(cls, name: "str | SampleMode") -> "SampleMode":
        """Parse a mode from its name (case-insensitive)."""
        if isinstance(name, cls):
            return name
        try:
            return cls[str(name).upper()]
        except KeyError:
            message = (
                f"Unknown sample mode '{name}'. Expected one of "
                f"{[mode.name for mode in cls]}."
            )
            logger.error(message)
            raise ConfigError(message) from None


@dataclass(frozen=True)
class RngKey:
    """Address of one pixel draw."""

    seed: int
    frame: int
    x: int
    y: int
    channel: int

    def __post_init__(self):
        for name in ("seed", "frame", "x", "y", "channel"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int | np.integer):
                message = f"RngKey.{name} must be an integer, got {value!r}."
                logger.error(message)
                raise InputError(message)
            if not 0 <= int(value) <= _MASK64:
                message = f"RngKey.{name} must fit in an unsigned 64-bit integer."
                logger.error(message)
                raise InputError(message)
        if not 0 <= int(self.channel) <= 2:
            message = f"RngKey.channel must be 0, 1 or 2, got {self.channel}."
            logger.error(message)
            raise InputError(message)


def _as_u64(value) -> np.ndarray:
    array = np.asarray(value)
    if array.dtype == np.uint64:
        return array
    if array.dtype.kind not in "iu":
        raise InputError("Key fields must be integers.")
    if np.any(array < 0):
        raise InputError("Key fields must be non-negative.")
    return array.astype(np.uint64)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def key_states(seed, frame, x, y, channel) -> np.ndarray:
    """
    Hash key fields to stream states.

    Parameters
    ----------
    seed, frame, x, y, channel : int or array_like of int
        Key fields; arrays are broadcast against each other.

    Returns
    -------
    numpy.ndarray
        ``uint64`` stream states with the broadcast shape (at least 1-d).
    """
    if isinstance(seed, int) and not 0 <= seed <= _MASK64:
        raise InputError("seed must fit in an unsigned 64-bit integer.")
    fields = np.broadcast_arrays(
        *(np.atleast_1d(_as_u64(f)) for f in (seed, frame, x, y, channel))
    )
    with np.errstate(over="ignore"):
        state = _mix64(fields[0] + _GAMMA)
        for field in fields[1:]:
            state = _mix64((state ^ field) + _GAMMA)
    return state


def stream_words(states: np.ndarray, counter: int) -> np.ndarray:
    """Return the ``counter``-th 64-bit word of each stream."""
    increment = np.uint64(((counter + 1) * GAMMA) & _MASK64)
    with np.errstate(over="ignore"):
        return _mix64(states + increment)


def stream_uniforms(states: np.ndarray, counter: int) -> np.ndarray:
    """Return the ``counter``-th uniform draw of each stream, in the open (0, 1)."""
    words = stream_words(states, counter)
    return ((words >> _S11).astype(np.float64) + 0.5) * _TWO_POW_M53


class KeyedStream:
    """Sequential view on one counter-based stream."""

    def __init__(self, state: int):
        self._state = np.array([state], dtype=np.uint64)
        self.position = 0

    @property
    def state(self) -> int:
        """The 64-bit stream state derived from the key."""
        return int(self._state[0])

    def next_uint64(self) -> int:
        """Next raw 64-bit word."""
        word = int(stream_words(self._state, self.position)[0])
        self.position += 1
        return word

    def uniform(self) -> float:
        """Next uniform draw in the open interval (0, 1)."""
        value = float(stream_uniforms(self._state, self.position)[0])
        self.position += 1
        return value

    def __repr__(self):
        return f"KeyedStream(state=0x{self.state:016x}, position={self.position})"


def derive_stream(key: RngKey) -> KeyedStream:
    """
    Derive the random stream addressed by ``key``.

    Equal keys give equal streams; the first word for
    ``RngKey(0, 0, 0, 0, 0)`` is ``0xcbd37ad29b93b094``.
    """
    state = key_states(key.seed, key.frame, key.x, key.y, key.channel)[0]
    return KeyedStream(int(state))


def _checked_flux(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    if not np.all(np.isfinite(phi)):
        logger.error("Photon flux must be finite.")
        raise InputError("Photon flux must be finite.")
    if np.any(phi < 0):
        logger.error("Photon flux must be non-negative.")
        raise InputError("Photon flux must be non-negative.")
    return phi


def _epoch_increment(uniforms: np.ndarray, rate: np.ndarray) -> np.ndarray:
    # Inverse-CDF exponential waiting time; uniforms are never 0.
    return -np.log(uniforms) / rate


def first_detection_bits(phi, cfg: SensorConfig, states: np.ndarray) -> np.ndarray:
    """
    Whether each pixel detects at least one photon.

    Equal, pixel by pixel, to ``sample_counts_exact(...) > 0`` for the same
    states, but only the first detection epoch is evaluated.

    Returns
    -------
    numpy.ndarray
        Boolean array with the broadcast shape of ``phi`` and ``states``.
    """
    phi = _checked_flux(phi)
    phi, states = np.broadcast_arrays(phi, states)
    rate = cfg.q * phi
    bits = np.zeros(phi.shape, dtype=bool)
    lit = rate > 0
    first = _epoch_increment(stream_uniforms(states[lit], 0), rate[lit])
    bits[lit] = first <= cfg.T
    return bits


def sample_counts_exact(
    phi,
    cfg: SensorConfig,
    states: np.ndarray,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
) -> np.ndarray:
    """
    Simulate the dead-time renewal process for many pixels at once.

    The first detection happens at ``Exp(q phi)``; every further detection
    follows the previous one after ``tau_d + Exp(q phi)``. The ``k``-th waiting
    time of a pixel uses word ``k`` of its stream.

    Parameters
    ----------
    phi : array_like
        Photon flux per pixel, photons per second.
    cfg : SensorConfig
        Sensor configuration.
    states : numpy.ndarray
        Stream states from ``key_states``; broadcast against ``phi``.
    iteration_cap : int
        Maximum number of detections simulated for any pixel.

    Returns
    -------
    numpy.ndarray
        ``int64`` detection counts, at most ``cfg.max_count``.

    Raises
    ------
    SimulationError
        If a pixel would need more than ``iteration_cap`` detections.
    """
    phi = _checked_flux(phi)
    phi, states = np.broadcast_arrays(phi, states)
    shape = phi.shape
    rate = (cfg.q * phi).ravel()
    states = states.ravel()
    counts = np.zeros(rate.size, dtype=np.int64)

    if rate.size and float(expected_count(phi.max(), cfg)) > iteration_cap:
        message = (
            f"Expected detections per pixel exceed the iteration cap "
            f"({iteration_cap}); lower the flux, exposure or raise the cap."
        )
        logger.error(message)
        raise SimulationError(message)

    active = np.flatnonzero(rate > 0)
    epochs = _epoch_increment(stream_uniforms(states[active], 0), rate[active])
    draw = 1
    while active.size:
        detected = epochs <= cfg.T
        active = active[detected]
        epochs = epochs[detected]
        counts[active] += 1
        if active.size and draw >= iteration_cap:
            message = f"Renewal sampling exceeded the iteration cap ({iteration_cap})."
            logger.error(message)
            raise SimulationError(message)
        epochs = epochs + cfg.tau_d
        epochs += _epoch_increment(stream_uniforms(states[active], draw), rate[active])
        draw += 1
    return counts.reshape(shape)


def sample_counts_gaussian(phi, cfg: SensorConfig, states: np.ndarray) -> np.ndarray:
    """
    Draw moment-matched Gaussian counts for many pixels at once.

    The normal deviate is formed by Box-Muller from words 0 and 1 of each stream;
    the draw is rounded to the nearest integer and clamped below at zero.

    Returns
    -------
    numpy.ndarray
        ``int64`` counts with the broadcast shape of ``phi`` and ``states``.
    """
    phi = _checked_flux(phi)
    phi, states = np.broadcast_arrays(phi, states)
    mean = np.asarray(expected_count(phi, cfg), dtype=np.float64)
    std = np.sqrt(np.asarray(variance_count(phi, cfg), dtype=np.float64))
    u1 = stream_uniforms(states, 0)
    u2 = stream_uniforms(states, 1)
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
    return np.maximum(np.rint(mean + std * z), 0.0).astype(np.int64)


def sample_counts(
    phi,
    cfg: SensorConfig,
    states: np.ndarray,
    mode: SampleMode | str = SampleMode.EXACT_RENEWAL,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
) -> np.ndarray:
    """Dispatch to the exact or Gaussian sampler according to ``mode``."""
    mode = SampleMode.from_name(mode)
    if mode is SampleMode.EXACT_RENEWAL:
        return sample_counts_exact(phi, cfg, states, iteration_cap)
    return sample_counts_gaussian(phi, cfg, states)


def _key_state(key: RngKey) -> np.ndarray:
    return key_states(key.seed, key.frame, key.x, key.y, key.channel)


def sample_count_exact(
    phi: float,
    cfg: SensorConfig,
    key: RngKey,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
) -> int:
    """
    Sample the detection count of one pixel with the renewal simulator.

    Parameters
    ----------
    phi : float
        Photon flux, photons per second.
    cfg : SensorConfig
        Sensor configuration.
    key : RngKey
        Address of the draw; the same key always gives the same count.
    iteration_cap : int
        Maximum number of detections simulated.

    Returns
    -------
    int
        Number of detections in ``[0, T]``.
    """
    return int(sample_counts_exact([phi], cfg, _key_state(key), iteration_cap)[0])


def sample_count_gaussian(phi: float, cfg: SensorConfig, key: RngKey) -> int:
    """
    Sample the detection count of one pixel from the moment-matched normal law.

    Returns
    -------
    int
        ``max(0, round(Normal(mean, sqrt(variance))))``.
    """
    return int(sample_counts_gaussian([phi], cfg, _key_state(key))[0])


def derive_seed(seed: int, purpose: int, index: int) -> int:
    """
    Derive an independent 64-bit seed from a master seed.

    Used to give every dataset sample its own augmentation and frame seeds
    without a shared sequential stream.
    """
    return int(key_states(seed, purpose, index, 0, 0)[0])
