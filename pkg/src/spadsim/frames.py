"""
Frames
------
Conversion of 8-bit RGB images to photon flux and synthesis of binary
single-photon camera frames, channel by channel.

"""

import logging
import math
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy as sp

from .constants import (
    AUTO_EXPOSURE_BRACKET,
    AUTO_EXPOSURE_TOLERANCE,
    DEFAULT_ITERATION_CAP,
)
from .errors import InputError
from .photon_model import bit_probability
from .sampler import (
    SampleMode,
    first_detection_bits,
    key_states,
    sample_counts,
    sample_counts_gaussian,
)
from .sensor import SensorConfig
from .utils.conversions import srgb_to_linear

logger = logging.getLogger(__name__)


def _fail(message: str):
    logger.error(message)
    raise InputError(message)


def validate_rgb(image) -> np.ndarray:
    """
    Check that ``image`` is a non-empty ``H x W x 3`` raster of 8-bit values.

    Returns
    -------
    numpy.ndarray
        The image as a ``uint8`` array.

    Raises
    ------
    InputError
        On any other shape, dtype or value range.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        _fail(f"Expected an H x W x 3 RGB raster, got shape {image.shape}.")
    if image.shape[0] == 0 or image.shape[1] == 0:
        _fail("Image must not be empty.")
    if image.dtype != np.uint8:
        if image.dtype.kind not in "iu" or image.min() < 0 or image.max() > 255:
            _fail(f"Expected 8-bit intensities, got dtype {image.dtype}.")
        image = image.astype(np.uint8)
    return image


class FluxMap:
    """Per-pixel, per-channel photon flux in photons per second."""

    def __init__(self, data, source_id: str = ""):
        """
        Initialize a FluxMap.

        Parameters
        ----------
        data : array_like
            ``H x W x 3`` array of finite, non-negative fluxes.
        source_id : str
            Provenance of the flux (usually the source image path).
        """
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 3:
            _fail(f"Flux must have shape H x W x 3, got {data.shape}.")
        if not np.all(np.isfinite(data)):
            _fail("Flux must be finite.")
        if np.any(data < 0):
            _fail("Flux must be non-negative.")
        self.data = data
        self.source_id = source_id

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @classmethod
    def uniform(cls, height: int, width: int, phi: float, source_id: str = "uniform"):
        """A flux map with the same flux at every pixel and channel."""
        return cls(np.full((height, width, 3), float(phi)), source_id=source_id)

    def __repr__(self):
        return (
            f"FluxMap(height={self.height}, width={self.width}, "
            f"source_id='{self.source_id}')"
        )


class BinaryFrame:
    """One simulated exposure, 1 bit per channel stored as 0/255 bytes."""

    def __init__(
        self,
        bits: np.ndarray,
        seed: int,
        frame_index: int,
        config_hash: str,
        mode: SampleMode = SampleMode.EXACT_RENEWAL,
        source_id: str = "",
    ):
        bits = np.asarray(bits)
        if bits.dtype != np.uint8 or not np.all((bits == 0) | (bits == 255)):
            _fail("Binary frame values must be uint8 and exactly 0 or 255.")
        self.bits = bits
        self.seed = seed
        self.frame_index = frame_index
        self.config_hash = config_hash
        self.mode = mode
        self.source_id = source_id

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def channels(self) -> int:
        return self.bits.shape[2]

    def density(self) -> np.ndarray:
        """Fraction of lit pixels per channel."""
        return frame_density(self)

    def __repr__(self):
        return (
            f"BinaryFrame(height={self.height}, width={self.width}, seed={self.seed}, "
            f"frame_index={self.frame_index}, config={self.config_hash[:8]})"
        )


def frame_density(frame: BinaryFrame | np.ndarray) -> np.ndarray:
    """
    Per-channel fraction of 255 values.

    Parameters
    ----------
    frame : BinaryFrame or numpy.ndarray
        A frame or its ``H x W x 3`` bit raster.

    Returns
    -------
    numpy.ndarray
        Three densities in [0, 1].
    """
    bits = frame.bits if isinstance(frame, BinaryFrame) else np.asarray(frame)
    return (bits == 255).mean(axis=(0, 1))


def frame_filename(stem: str, frame_index: int, cfg: SensorConfig) -> str:
    """File name ``<stem>_f<index>_<hash8>.png`` of a simulated frame."""
    return f"{stem}_f{frame_index}_{cfg.hash8}.png"


def intensity_to_flux(image, cfg: SensorConfig, source_id: str = "") -> FluxMap:
    """
    Map 8-bit intensities to photon flux.

    ``phi = (v / 255) * phi_max``, after sRGB decoding of ``v / 255`` when
    ``cfg.linearize_srgb`` is set.

    Parameters
    ----------
    image : array_like
        ``H x W x 3`` raster of 8-bit intensities.
    cfg : SensorConfig
        Provides ``phi_max`` and the linearization flag.
    source_id : str
        Provenance recorded on the flux map.

    Returns
    -------
    FluxMap
        Flux with the dimensions of the image.

    Raises
    ------
    InputError
        If the image is not a 3-channel 8-bit raster.
    """
    image = validate_rgb(image)
    normalized = image.astype(np.float64) / 255.0
    if cfg.linearize_srgb:
        normalized = srgb_to_linear(normalized)
    return FluxMap(normalized * cfg.phi_max, source_id=source_id)


def _row_states(
    flux: np.ndarray, seed: int, frame_index: int, row_start: int
) -> np.ndarray:
    rows, cols, channels = flux.shape
    y, x, c = np.meshgrid(
        np.arange(row_start, row_start + rows, dtype=np.uint64),
        np.arange(cols, dtype=np.uint64),
        np.arange(channels, dtype=np.uint64),
        indexing="ij",
    )
    return key_states(seed, frame_index, x, y, c).reshape(flux.shape)


def _synthesize_rows(
    flux: np.ndarray,
    cfg: SensorConfig,
    seed: int,
    frame_index: int,
    row_start: int,
    mode: SampleMode,
) -> np.ndarray:
    states = _row_states(flux, seed, frame_index, row_start)
    if mode is SampleMode.EXACT_RENEWAL:
        lit = first_detection_bits(flux, cfg, states)
    else:
        lit = sample_counts_gaussian(flux, cfg, states) > 0
    return np.where(lit, np.uint8(255), np.uint8(0))


def _row_bands(height: int, jobs: int) -> list[tuple[int, int]]:
    jobs = max(1, min(jobs, height))
    edges = np.linspace(0, height, jobs + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:], strict=True)]


def synthesize_binary_frame(
    flux: FluxMap,
    cfg: SensorConfig,
    seed: int,
    frame_index: int = 0,
    mode: SampleMode | str = SampleMode.EXACT_RENEWAL,
    jobs: int = 1,
) -> BinaryFrame:
    """
    Simulate one binary exposure of a flux map.

    Every pixel and channel draws its count with key
    ``(seed, frame_index, x, y, channel)``; a channel bit is 255 when the count
    is positive. In exact mode only the first detection epoch decides the bit,
    which gives the same result as sampling the full count.

    Parameters
    ----------
    flux : FluxMap
        Flux to expose.
    cfg : SensorConfig
        Sensor configuration.
    seed : int
        Master seed of the frame.
    frame_index : int
        Index of the frame within a burst.
    mode : SampleMode or str
        Sampling law.
    jobs : int
        Number of row bands processed concurrently. The output does not depend
        on it.

    Returns
    -------
    BinaryFrame
        The simulated frame.
    """
    mode = SampleMode.from_name(mode)
    if not isinstance(flux, FluxMap):
        _fail("flux must be a FluxMap.")
    bits = np.empty(flux.data.shape, dtype=np.uint8)
    bands = _row_bands(flux.height, jobs)

    def run(band):
        start, stop = band
        bits[start:stop] = _synthesize_rows(
            flux.data[start:stop], cfg, seed, frame_index, start, mode
        )

    if len(bands) == 1:
        run(bands[0])
    else:
        with ThreadPoolExecutor(max_workers=len(bands)) as pool:
            list(pool.map(run, bands))

    return BinaryFrame(
        bits,
        seed=seed,
        frame_index=frame_index,
        config_hash=cfg.config_hash,
        mode=mode,
        source_id=flux.source_id,
    )


def synthesize_count_frame(
    flux: FluxMap,
    cfg: SensorConfig,
    seed: int,
    frame_index: int = 0,
    mode: SampleMode | str = SampleMode.EXACT_RENEWAL,
    jobs: int = 1,
    iteration_cap: int = DEFAULT_ITERATION_CAP,
) -> np.ndarray:
    """
    Simulate the detection counts behind one exposure of a flux map.

    Keys are the same as in ``synthesize_binary_frame``, so with the same
    arguments ``counts > 0`` reproduces the binary frame bit for bit.

    Parameters
    ----------
    flux : FluxMap
        Flux to expose.
    cfg : SensorConfig
        Sensor configuration.
    seed : int
        Master seed of the frame.
    frame_index : int
        Index of the frame within a burst.
    mode : SampleMode or str
        Sampling law.
    jobs : int
        Number of row bands processed concurrently.
    iteration_cap : int
        Maximum detections simulated per pixel in exact mode.

    Returns
    -------
    numpy.ndarray
        ``int64`` counts of shape ``H x W x 3``.

    Raises
    ------
    SimulationError
        If exact sampling would exceed ``iteration_cap``.
    """
    mode = SampleMode.from_name(mode)
    if not isinstance(flux, FluxMap):
        _fail("flux must be a FluxMap.")
    counts = np.empty(flux.data.shape, dtype=np.int64)
    bands = _row_bands(flux.height, jobs)

    def run(band):
        start, stop = band
        rows = flux.data[start:stop]
        states = _row_states(rows, seed, frame_index, start)
        counts[start:stop] = sample_counts(rows, cfg, states, mode, iteration_cap)

    if len(bands) == 1:
        run(bands[0])
    else:
        with ThreadPoolExecutor(max_workers=len(bands)) as pool:
            list(pool.map(run, bands))
    return counts


def iter_burst(
    flux: FluxMap,
    cfg: SensorConfig,
    seed: int,
    n_frames: int,
    mode: SampleMode | str = SampleMode.EXACT_RENEWAL,
    jobs: int = 1,
) -> Iterator[BinaryFrame]:
    """Yield the frames of ``synthesize_burst`` one at a time."""
    if isinstance(n_frames, bool) or not isinstance(n_frames, int) or n_frames < 1:
        _fail(f"n_frames must be a positive integer, got {n_frames!r}.")
    for frame_index in range(n_frames):
        yield synthesize_binary_frame(flux, cfg, seed, frame_index, mode, jobs)


def synthesize_burst(
    flux: FluxMap,
    cfg: SensorConfig,
    seed: int,
    n_frames: int,
    mode: SampleMode | str = SampleMode.EXACT_RENEWAL,
    jobs: int = 1,
) -> list[BinaryFrame]:
    """
    Simulate ``n_frames`` independent exposures of the same flux.

    Frame ``i`` uses ``frame_index = i`` in its keys, so a burst is a deterministic
    function of one seed.

    Returns
    -------
    list[BinaryFrame]
        Frames in index order.
    """
    frames = list(iter_burst(flux, cfg, seed, n_frames, mode, jobs))
    logger.debug(f"Synthesized a burst of {n_frames} frames from '{flux.source_id}'.")
    return frames


def mean_bit_density(flux: FluxMap, cfg: SensorConfig) -> float:
    """Expected fraction of lit pixels over all pixels and channels."""
    return float(np.mean(bit_probability(flux.data, cfg)))


def auto_exposure(flux: FluxMap, cfg: SensorConfig, target_density: float) -> float:
    """
    Find the exposure time giving a target mean bit density.

    Bisection on ``log T`` over the bracket in ``constants.AUTO_EXPOSURE_BRACKET``.

    Parameters
    ----------
    flux : FluxMap
        Scene flux.
    cfg : SensorConfig
        Sensor configuration; its exposure is ignored.
    target_density : float
        Desired mean of ``bit_probability`` over pixels and channels, in (0, 1).

    Returns
    -------
    float
        Exposure time ``T*`` in seconds.

    Raises
    ------
    InputError
        If the target is outside (0, 1), the flux is zero everywhere, or the
        target cannot be reached inside the bracket.
    """
    if not 0.0 < target_density < 1.0:
        _fail(f"target_density must be in (0, 1), got {target_density}.")
    if not np.any(flux.data > 0):
        _fail("Flux is zero everywhere; no exposure reaches the target density.")

    def residual(log_t):
        return mean_bit_density(flux, cfg.with_exposure(math.exp(log_t))) - (
            target_density
        )

    low, high = (math.log(t) for t in AUTO_EXPOSURE_BRACKET)
    if residual(low) > 0 or residual(high) < 0:
        _fail(
            f"Target density {target_density} is not reachable for exposures in "
            f"{AUTO_EXPOSURE_BRACKET} s."
        )
    log_t = sp.optimize.bisect(residual, low, high, xtol=1e-13, maxiter=500)
    exposure = math.exp(log_t)
    achieved = mean_bit_density(flux, cfg.with_exposure(exposure))
    if abs(achieved - target_density) > AUTO_EXPOSURE_TOLERANCE:
        logger.warning(
            f"Auto-exposure reached density {achieved:.8f} for target "
            f"{target_density}."
        )
    logger.info(f"Auto-exposure: T = {exposure:.6e} s for density {achieved:.6f}.")
    return exposure
