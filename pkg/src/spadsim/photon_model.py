"""
Photon model
------------
Closed-form statistics of a non-paralyzable dead-time SPAD pixel under Poisson
photon arrivals.

With detection rate ``r = q * phi`` the detections in ``[0, T]`` form a renewal
process with inter-detection times ``tau_d + Exp(r)``. Its asymptotic moments are

    mean     = q phi T / (1 + q phi tau_d)
    variance = q phi T / (1 + q phi tau_d) ** 3

A count is zero exactly when the first arrival falls after ``T``. The first
arrival is never blocked by dead time, so

    P(count > 0) = 1 - exp(-q phi T)

independently of ``tau_d``.

All functions accept a scalar flux (returning ``float``) or an array of fluxes
(returning an array of the same shape) and compute in double precision.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError
from .sensor import SensorConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhotonStats:
    """Mean, variance and bit probability of the detection count."""

    mean: float
    variance: float
    bit_prob: float


def _validate(phi, cfg: SensorConfig) -> np.ndarray:
    if not isinstance(cfg, SensorConfig):
        logger.error("cfg must be a SensorConfig instance.")
        raise ConfigError("cfg must be a SensorConfig instance.")
    phi = np.asarray(phi, dtype=np.float64)
    if not np.all(np.isfinite(phi)):
        logger.error("Photon flux must be finite.")
        raise InputError("Photon flux must be finite.")
    if np.any(phi < 0):
        logger.error("Photon flux must be non-negative.")
        raise InputError("Photon flux must be non-negative.")
    return phi


def _unwrap(result: np.ndarray):
    return float(result) if result.ndim == 0 else result


def expected_count(phi, cfg: SensorConfig):
    """
    Expected number of detections during one exposure.

    Parameters
    ----------
    phi : float or array_like
        Photon flux in photons per second.
    cfg : SensorConfig
        Sensor configuration.

    Returns
    -------
    float or numpy.ndarray
        ``q phi T / (1 + q phi tau_d)``. Bounded by ``T / tau_d`` when
        ``tau_d > 0``.

    Raises
    ------
    InputError
        If the flux is negative or not finite.
    ConfigError
        If ``cfg`` is not a SensorConfig.
    """
    phi = _validate(phi, cfg)
    rate = cfg.q * phi
    return _unwrap(rate * cfg.T / (1.0 + rate * cfg.tau_d))


def variance_count(phi, cfg: SensorConfig):
    """
    Variance of the number of detections during one exposure.

    Parameters
    ----------
    phi : float or array_like
        Photon flux in photons per second.
    cfg : SensorConfig
        Sensor configuration.

    Returns
    -------
    float or numpy.ndarray
        ``q phi T / (1 + q phi tau_d) ** 3``; never larger than the mean.
    """
    phi = _validate(phi, cfg)
    rate = cfg.q * phi
    return _unwrap(rate * cfg.T / (1.0 + rate * cfg.tau_d) ** 3)


def bit_probability(phi, cfg: SensorConfig):
    """
    Probability that a pixel registers at least one detection.

    Parameters
    ----------
    phi : float or array_like
        Photon flux in photons per second.
    cfg : SensorConfig
        Sensor configuration.

    Returns
    -------
    float or numpy.ndarray
        ``1 - exp(-q phi T)``. Underflow of the exponential yields exactly 1.0.
    """
    phi = _validate(phi, cfg)
    return _unwrap(-np.expm1(-cfg.q * phi * cfg.T))


def photon_stats(phi: float, cfg: SensorConfig) -> PhotonStats:
    """Bundle ``expected_count``, ``variance_count`` and ``bit_probability``."""
    return PhotonStats(
        mean=expected_count(phi, cfg),
        variance=variance_count(phi, cfg),
        bit_prob=bit_probability(phi, cfg),
    )
