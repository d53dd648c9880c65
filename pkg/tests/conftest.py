import numpy as np
import pytest

from spadsim.io.io import write_png
from spadsim.sensor import SensorConfig


@pytest.fixture()
def sensor() -> SensorConfig:
    """Default sensor: q = 0.45, tau_d = 150 ns, T = 10 ns, phi_max = 1e8."""
    return SensorConfig()


@pytest.fixture()
def long_exposure_sensor() -> SensorConfig:
    """Sensor with a 10 us exposure, long enough for many detections per pixel."""
    return SensorConfig(q=0.45, tau_d=1.5e-7, T=1e-5)


@pytest.fixture()
def gradient_image() -> np.ndarray:
    """A 32 x 32 RGB raster with a different gradient in each channel."""
    rows, cols = np.mgrid[0:32, 0:32]
    image = np.stack(
        [rows * 8, cols * 8, (rows + cols) * 4],
        axis=2,
    )
    return np.clip(image, 0, 255).astype(np.uint8)


@pytest.fixture()
def random_image() -> np.ndarray:
    """A reproducible 32 x 32 RGB raster of uniform noise."""
    return np.random.RandomState(42).randint(0, 256, (32, 32, 3)).astype(np.uint8)


@pytest.fixture()
def scene_root(tmp_path, gradient_image):
    """
    An LLFF-style input tree with one scene of two images and a pose file::

        scenes/fern/images/img0.png
        scenes/fern/images/img1.png
        scenes/fern/poses_bounds.npy
    """
    root = tmp_path / "scenes"
    images = root / "fern" / "images"
    write_png(images / "img0.png", gradient_image)
    write_png(images / "img1.png", gradient_image[::-1].copy())
    np.save(root / "fern" / "poses_bounds.npy", np.arange(17.0).reshape(1, 17))
    return root
