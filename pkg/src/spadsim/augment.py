"""
Augment
-------
Deterministic affine augmentation (zoom, rotation, shear, flips) applied to clean
RGB images before photon simulation.

"""

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy as sp

from .constants import DEFAULT_ROTATION_RANGE, DEFAULT_SHEAR_RANGE, DEFAULT_ZOOM_RANGE
from .errors import ConfigError
from .frames import validate_rgb
from .utils.conversions import to_uint8

logger = logging.getLogger(__name__)


def _fail(message: str):
    logger.error(message)
    raise ConfigError(message)


def _check_range(name: str, value) -> tuple[float, float]:
    try:
        low, high = (float(v) for v in value)
    except (TypeError, ValueError):
        _fail(f"{name} range must be a pair of numbers, got {value!r}.")
    if not (math.isfinite(low) and math.isfinite(high)) or low > high:
        _fail(f"{name} range must satisfy low <= high, got ({low}, {high}).")
    return low, high


@dataclass(frozen=True)
class AugmentRanges:
    """Sampling ranges for augmentation parameters, each ``(low, high)``."""

    zoom: tuple[float, float] = DEFAULT_ZOOM_RANGE
    rotation: tuple[float, float] = DEFAULT_ROTATION_RANGE
    shear: tuple[float, float] = DEFAULT_SHEAR_RANGE

    def __post_init__(self):
        object.__setattr__(self, "zoom", _check_range("zoom", self.zoom))
        object.__setattr__(self, "rotation", _check_range("rotation", self.rotation))
        object.__setattr__(self, "shear", _check_range("shear", self.shear))
        if self.zoom[0] <= 0:
            _fail(f"zoom range must be positive, got {self.zoom}.")
        if max(abs(s) for s in self.shear) >= 1:
            _fail(f"shear range must lie inside (-1, 1), got {self.shear}.")

    @classmethod
    def identity(cls) -> "AugmentRanges":
        """Ranges that only allow flips."""
        return cls(zoom=(1.0, 1.0), rotation=(0.0, 0.0), shear=(0.0, 0.0))

    def contains(self, spec: "AugmentSpec") -> bool:
        """Whether every parameter of ``spec`` lies inside these ranges."""
        return (
            self.zoom[0] <= spec.zoom <= self.zoom[1]
            and self.rotation[0] <= spec.rotation <= self.rotation[1]
            and self.shear[0] <= spec.shear_x <= self.shear[1]
            and self.shear[0] <= spec.shear_y <= self.shear[1]
        )

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentRanges":
        unknown = set(data) - {"zoom", "rotation", "shear"}
        if unknown:
            _fail(f"Unknown augmentation keys: {sorted(unknown)}.")
        return cls(**{k: tuple(v) for k, v in data.items()})


@dataclass(frozen=True)
class AugmentSpec:
    """One affine augmentation."""

    zoom: float = 1.0
    rotation: float = 0.0
    shear_x: float = 0.0
    shear_y: float = 0.0
    flip_h: bool = False
    flip_v: bool = False
    spec_id: str = "identity"

    def __post_init__(self):
        for name in ("zoom", "rotation", "shear_x", "shear_y"):
            value = getattr(self, name)
            if isinstance(value, bool) or not math.isfinite(float(value)):
                _fail(f"AugmentSpec.{name} must be a finite number, got {value!r}.")
            object.__setattr__(self, name, float(value))
        if self.zoom <= 0:
            _fail(f"AugmentSpec.zoom must be positive, got {self.zoom}.")
        if abs(self.shear_x) >= 1 or abs(self.shear_y) >= 1:
            _fail("AugmentSpec shear coefficients must lie inside (-1, 1).")
        object.__setattr__(self, "flip_h", bool(self.flip_h))
        object.__setattr__(self, "flip_v", bool(self.flip_v))

    @property
    def is_geometric_identity(self) -> bool:
        """True when zoom, rotation and shear leave pixels in place."""
        return (
            self.zoom == 1.0
            and self.rotation == 0.0
            and self.shear_x == 0.0
            and self.shear_y == 0.0
        )

    def forward_matrix(self) -> np.ndarray:
        """
        Linear part of the map ``shear . rotate . zoom`` in ``(x, y)`` pixel
        coordinates about the image center (flips excluded).
        """
        theta = math.radians(self.rotation)
        cos, sin = math.cos(theta), math.sin(theta)
        # Positive angles rotate counter-clockwise on screen (y axis points down).
        rotate = np.array([[cos, sin], [-sin, cos]])
        shear = np.array([[1.0, self.shear_x], [self.shear_y, 1.0]])
        return shear @ rotate @ (self.zoom * np.eye(2))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentSpec":
        return cls(**data)


def apply_affine(image, spec: AugmentSpec) -> np.ndarray:
    """
    Apply an augmentation to an RGB raster.

    The forward map is ``flip . shear . rotate . zoom`` about the image center.
    Resampling is bilinear with reflect padding; the output has the input's
    dimensions. Flips are exact index reversals applied last.

    Parameters
    ----------
    image : array_like
        ``H x W x 3`` ``uint8`` raster.
    spec : AugmentSpec
        The augmentation.

    Returns
    -------
    numpy.ndarray
        The augmented ``uint8`` raster.
    """
    image = validate_rgb(image)
    if not isinstance(spec, AugmentSpec):
        _fail("spec must be an AugmentSpec.")

    if spec.is_geometric_identity:
        out = image.copy()
    else:
        height, width = image.shape[:2]
        inverse_xy = np.linalg.inv(spec.forward_matrix())
        # scipy works in (row, col) = (y, x) order.
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        inverse_rc = swap @ inverse_xy @ swap
        center = np.array([(height - 1) / 2.0, (width - 1) / 2.0])
        offset = center - inverse_rc @ center
        channels = [
            sp.ndimage.affine_transform(
                image[:, :, c].astype(np.float64),
                inverse_rc,
                offset=offset,
                output_shape=(height, width),
                order=1,
                mode="reflect",
            )
            for c in range(image.shape[2])
        ]
        out = to_uint8(np.stack(channels, axis=2))

    if spec.flip_h:
        out = out[:, ::-1]
    if spec.flip_v:
        out = out[::-1, :]
    return np.ascontiguousarray(out)


def sample_augment_specs(
    seed: int, count: int, ranges: AugmentRanges | None = None
) -> list[AugmentSpec]:
    """
    Draw augmentation parameters.

    Parameters are uniform in ``ranges``, flips are Bernoulli(0.5). The same seed
    always gives the same list.

    Parameters
    ----------
    seed : int
        Seed of the draw.
    count : int
        Number of specs, at least 1.
    ranges : AugmentRanges, optional
        Sampling ranges; defaults to ``AugmentRanges()``.

    Returns
    -------
    list[AugmentSpec]
        Specs with ids ``aug-00000``, ``aug-00001``, ...
    """
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
        _fail(f"count must be a positive integer, got {count!r}.")
    ranges = AugmentRanges() if ranges is None else ranges
    if not isinstance(ranges, AugmentRanges):
        _fail("ranges must be an AugmentRanges instance.")

    rng = np.random.default_rng(seed)
    zoom = rng.uniform(*ranges.zoom, size=count)
    rotation = rng.uniform(*ranges.rotation, size=count)
    shear = rng.uniform(*ranges.shear, size=(count, 2))
    flips = rng.random(size=(count, 2)) < 0.5

    return [
        AugmentSpec(
            zoom=float(zoom[i]),
            rotation=float(rotation[i]),
            shear_x=float(shear[i, 0]),
            shear_y=float(shear[i, 1]),
            flip_h=bool(flips[i, 0]),
            flip_v=bool(flips[i, 1]),
            spec_id=f"aug-{i:05d}",
        )
        for i in range(count)
    ]
