"""
Flux recovery
-------------
Inversion of the sensor model: flux estimates from stacks of binary frames or
from raw detection counts.
"""

import logging
import math
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from .errors import InputError, SaturationError
from .frames import BinaryFrame, FluxMap
from .io.io import write_float_raster, write_png
from .sensor import SensorConfig
from .utils.conversions import to_uint8

logger = logging.getLogger(__name__)


def _fail(message: str):
    logger.error(message)
    raise InputError(message)


class BitStack:
    """Per-pixel, per-channel count of lit bits over ``n_frames`` binary frames."""

    def __init__(self, ones_count, n_frames: int):
        """
        Initialize a BitStack.

        Parameters
        ----------
        ones_count : array_like
            ``H x W x C`` integers in ``[0, n_frames]``.
        n_frames : int
            Number of accumulated frames, at least 1.
        """
        if isinstance(n_frames, bool) or not isinstance(n_frames, int | np.integer):
            _fail(f"n_frames must be an integer, got {n_frames!r}.")
        if n_frames < 1:
            _fail(f"n_frames must be at least 1, got {n_frames}.")
        ones_count = np.asarray(ones_count)
        if ones_count.ndim != 3:
            _fail(f"ones_count must have shape H x W x C, got {ones_count.shape}.")
        if ones_count.dtype.kind not in "iu":
            _fail(f"ones_count must hold integers, got dtype {ones_count.dtype}.")
        if np.any(ones_count < 0) or np.any(ones_count > n_frames):
            _fail(f"ones_count must lie in [0, {n_frames}].")
        self.ones_count = ones_count.astype(np.int64)
        self.n_frames = int(n_frames)

    @property
    def height(self) -> int:
        return self.ones_count.shape[0]

    @property
    def width(self) -> int:
        return self.ones_count.shape[1]

    @property
    def channels(self) -> int:
        return self.ones_count.shape[2]

    @classmethod
    def from_frames(cls, frames: Iterable[BinaryFrame | np.ndarray]) -> "BitStack":
        """
        Accumulate binary frames, consuming ``frames`` one at a time.

        Raises
        ------
        InputError
            If ``frames`` is empty or the frame dimensions differ.
        """
        ones = None
        n_frames = 0
        for frame in frames:
            bits = frame.bits if isinstance(frame, BinaryFrame) else np.asarray(frame)
            if ones is None:
                ones = np.zeros(bits.shape, dtype=np.int64)
            elif bits.shape != ones.shape:
                _fail(f"Frame shape {bits.shape} differs from {ones.shape}.")
            ones += bits == 255
            n_frames += 1
        if ones is None:
            _fail("Cannot build a BitStack from zero frames.")
        return cls(ones, n_frames)

    def bit_rate(self) -> np.ndarray:
        """Empirical bit probability ``ones_count / n_frames``."""
        return self.ones_count / self.n_frames

    def saturation_mask(self) -> np.ndarray:
        """True where every frame was lit."""
        return self.ones_count == self.n_frames

    def save(self, path) -> Path:
        """Write the stack as a compressed ``.npz`` archive."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez_compressed(path, ones_count=self.ones_count, n_frames=self.n_frames)
        return path if path.suffix == ".npz" else path.with_name(path.name + ".npz")

    @classmethod
    def load(cls, path) -> "BitStack":
        with np.load(path) as archive:
            return cls(archive["ones_count"], int(archive["n_frames"]))

    def __repr__(self):
        return (
            f"BitStack(height={self.height}, width={self.width}, "
            f"n_frames={self.n_frames})"
        )


def estimate_flux_from_bits(
    stack: BitStack, cfg: SensorConfig, return_mask: bool = False
) -> FluxMap | tuple[FluxMap, np.ndarray]:
    """
    Maximum-likelihood flux from a stack of binary frames.

    ``phi = -ln(1 - p) / (q T)`` with ``p = ones_count / n_frames``. Saturated
    pixels (``p = 1``) are clamped to ``p = 1 - 1 / (2 n_frames)``.

    Parameters
    ----------
    stack : BitStack
        Accumulated frames.
    cfg : SensorConfig
        Sensor the frames were taken with.
    return_mask : bool
        Also return the saturation mask.

    Returns
    -------
    FluxMap or tuple[FluxMap, numpy.ndarray]
        The flux estimate, and the boolean saturation mask if requested.
    """
    if not isinstance(stack, BitStack):
        _fail("stack must be a BitStack.")
    saturated = stack.saturation_mask()
    p = np.where(saturated, 1.0 - 1.0 / (2.0 * stack.n_frames), stack.bit_rate())
    flux = FluxMap(-np.log1p(-p) / (cfg.q * cfg.T), source_id="bitstack")
    if saturated.any():
        logger.warning(
            f"{int(saturated.sum())} saturated pixel value(s) clamped "
            f"at p = 1 - 1/{2 * stack.n_frames}."
        )
    return (flux, saturated) if return_mask else flux


def estimate_flux_from_count(n: float, cfg: SensorConfig) -> float:
    """
    Flux whose expected count equals ``n``.

    ``phi = n / (q (T - n tau_d))``, the inverse of
    ``photon_model.expected_count``.

    Raises
    ------
    InputError
        If ``n`` is negative or not finite.
    SaturationError
        If ``n * tau_d >= T``; no finite flux yields that many counts.
    """
    n = float(n)
    if not math.isfinite(n) or n < 0:
        _fail(f"Count must be a finite non-negative number, got {n}.")
    dead = n * cfg.tau_d
    if dead >= cfg.T:
        message = (
            f"Count {n} saturates the sensor: n * tau_d = {dead:.6g} s >= T = "
            f"{cfg.T:.6g} s."
        )
        logger.error(message)
        raise SaturationError(message)
    return n / (cfg.q * (cfg.T - dead))


def export_flux_png(path, flux: FluxMap, cfg: SensorConfig) -> Path:
    """Write ``flux`` as an 8-bit PNG scaled so ``phi_max`` maps to 255."""
    write_png(path, to_uint8(flux.data / cfg.phi_max * 255.0))
    return Path(path)


def export_flux_raster(path, flux: FluxMap, cfg: SensorConfig) -> Path:
    """Write ``flux`` losslessly as a float32 raster with the sensor in its header."""
    return write_float_raster(
        path,
        flux.data,
        phi_max=cfg.phi_max,
        units="photons/s",
        sensor=cfg.to_dict(),
        source=flux.source_id,
    )
