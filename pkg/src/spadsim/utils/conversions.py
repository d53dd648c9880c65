import numpy as np


def srgb_to_linear(values):
    """
    Decode sRGB-encoded intensities to linear light.

    Parameters
    ----------
    values : array_like
        Intensities normalized to [0, 1].

    Returns
    -------
    numpy.ndarray
        Linear intensities in [0, 1], same shape as the input.
    """
    values = np.asarray(values, dtype=np.float64)
    return np.where(
        values <= 0.04045, values / 12.92, ((values + 0.055) / 1.055) ** 2.4
    )


def to_uint8(values):
    """
    Round an array to the nearest integer and clip it into an 8-bit raster.

    Parameters
    ----------
    values : array_like
        Values on the 0-255 scale.

    Returns
    -------
    numpy.ndarray
        ``uint8`` array of the same shape.
    """
    return np.clip(np.rint(values), 0, 255).astype(np.uint8)
