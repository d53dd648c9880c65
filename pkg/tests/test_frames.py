import math
import re

import numpy as np
import pytest
import scipy as sp

from spadsim.errors import InputError, SimulationError
from spadsim.frames import (
    BinaryFrame,
    FluxMap,
    auto_exposure,
    frame_density,
    frame_filename,
    intensity_to_flux,
    mean_bit_density,
    synthesize_binary_frame,
    synthesize_burst,
    synthesize_count_frame,
)
from spadsim.photon_model import bit_probability
from spadsim.sampler import SampleMode, first_detection_bits, key_states
from spadsim.sensor import SensorConfig


def ln2_flux(cfg: SensorConfig) -> float:
    """Flux with q * phi * T = ln 2, i.e. a bit probability of one half."""
    return math.log(2) / (cfg.q * cfg.T)


def test_intensity_to_flux_scale(sensor):
    image = np.zeros((2, 3, 3), dtype=np.uint8)
    image[0, 0] = 255
    image[1, 2] = 128
    flux = intensity_to_flux(image, sensor, source_id="test")
    assert flux.data[0, 0, 0] == sensor.phi_max
    assert flux.data[1, 2, 1] == pytest.approx(5.0196e7, rel=1e-4)
    assert flux.data[0, 1].sum() == 0.0
    assert (flux.height, flux.width, flux.channels) == (2, 3, 3)
    assert flux.source_id == "test"


def test_intensity_to_flux_is_monotone(sensor):
    ramp = np.repeat(np.arange(256, dtype=np.uint8), 3).reshape(1, 256, 3)
    for cfg in (sensor, SensorConfig(linearize_srgb=True)):
        flux = intensity_to_flux(ramp, cfg).data[0, :, 0]
        assert np.all(np.diff(flux) > 0)
        assert flux[-1] == pytest.approx(cfg.phi_max, rel=1e-12)


def test_black_image_gives_zero_flux(sensor):
    flux = intensity_to_flux(np.zeros((4, 4, 3), dtype=np.uint8), sensor)
    assert not flux.data.any()


@pytest.mark.parametrize(
    "image",
    [
        np.zeros((4, 4), dtype=np.uint8),
        np.zeros((4, 4, 4), dtype=np.uint8),
        np.zeros((0, 4, 3), dtype=np.uint8),
        np.full((4, 4, 3), 0.5),
        np.full((4, 4, 3), 300),
    ],
)
def test_intensity_to_flux_rejects_bad_rasters(sensor, image):
    with pytest.raises(InputError):
        intensity_to_flux(image, sensor)


def test_flux_map_validation():
    with pytest.raises(InputError):
        FluxMap(np.full((2, 2, 3), -1.0))
    with pytest.raises(InputError):
        FluxMap(np.full((2, 2, 3), np.nan))
    with pytest.raises(InputError):
        FluxMap(np.zeros((2, 2)))


def test_binary_frame_rejects_other_values(sensor):
    with pytest.raises(InputError):
        BinaryFrame(np.ones((2, 2, 3), dtype=np.uint8), 0, 0, sensor.config_hash)


def test_zero_flux_gives_black_frame(sensor):
    frame = synthesize_binary_frame(FluxMap.uniform(8, 8, 0.0), sensor, seed=1)
    assert frame.bits.dtype == np.uint8
    assert not frame.bits.any()


def test_frame_is_deterministic_and_binary(sensor, gradient_image):
    flux = intensity_to_flux(gradient_image, sensor)
    a = synthesize_binary_frame(flux, sensor, seed=3, frame_index=2)
    b = synthesize_binary_frame(flux, sensor, seed=3, frame_index=2)
    np.testing.assert_array_equal(a.bits, b.bits)
    assert set(np.unique(a.bits)) <= {0, 255}
    assert a.bits.shape == gradient_image.shape
    assert a.config_hash == sensor.config_hash
    assert (a.seed, a.frame_index, a.mode) == (3, 2, SampleMode.EXACT_RENEWAL)


def test_frame_depends_on_seed_and_index(sensor):
    flux = FluxMap.uniform(32, 32, ln2_flux(sensor))
    base = synthesize_binary_frame(flux, sensor, seed=0).bits
    assert not np.array_equal(base, synthesize_binary_frame(flux, sensor, 1).bits)
    assert not np.array_equal(base, synthesize_binary_frame(flux, sensor, 0, 1).bits)


@pytest.mark.parametrize("mode", list(SampleMode))
def test_frame_is_invariant_under_jobs(sensor, gradient_image, mode):
    cfg = sensor.with_exposure(5e-8)
    flux = intensity_to_flux(gradient_image, cfg)
    serial = synthesize_binary_frame(flux, cfg, seed=5, mode=mode, jobs=1)
    parallel = synthesize_binary_frame(flux, cfg, seed=5, mode=mode, jobs=4)
    np.testing.assert_array_equal(serial.bits, parallel.bits)


def test_half_density_at_ln2(sensor):
    flux = FluxMap.uniform(256, 256, ln2_flux(sensor))
    frame = synthesize_binary_frame(flux, sensor, seed=0)
    assert np.mean(frame.bits == 255) == pytest.approx(0.5, abs=0.01)
    assert frame_density(frame) == pytest.approx([0.5, 0.5, 0.5], abs=0.02)
    np.testing.assert_array_equal(frame.density(), frame_density(frame.bits))


def test_channel_separability(sensor, gradient_image):
    cfg = sensor.with_exposure(3e-8)
    flux = intensity_to_flux(gradient_image, cfg)
    frame = synthesize_binary_frame(flux, cfg, seed=13, frame_index=4)
    y, x = np.mgrid[0:32, 0:32]
    for channel in range(3):
        states = key_states(13, 4, x, y, channel)
        bits = first_detection_bits(flux.data[:, :, channel], cfg, states)
        np.testing.assert_array_equal(frame.bits[:, :, channel] == 255, bits)


def test_burst_of_one_equals_single_frame(sensor, gradient_image):
    flux = intensity_to_flux(gradient_image, sensor)
    [frame] = synthesize_burst(flux, sensor, seed=7, n_frames=1)
    single = synthesize_binary_frame(flux, sensor, seed=7, frame_index=0)
    np.testing.assert_array_equal(frame.bits, single.bits)


def test_burst_of_zero_flux_is_black(sensor):
    frames = synthesize_burst(FluxMap.uniform(4, 4, 0.0), sensor, seed=7, n_frames=5)
    assert [f.frame_index for f in frames] == [0, 1, 2, 3, 4]
    assert not any(f.bits.any() for f in frames)


def test_burst_rejects_empty(sensor):
    with pytest.raises(InputError):
        synthesize_burst(FluxMap.uniform(4, 4, 1e7), sensor, seed=0, n_frames=0)


def test_burst_mean_converges_to_bit_probability(sensor):
    phi = 2e8
    frames = synthesize_burst(FluxMap.uniform(2, 2, phi), sensor, 21, 1000)
    mean = np.mean([f.bits == 255 for f in frames], axis=0)
    p = bit_probability(phi, sensor)
    sigma = math.sqrt(p * (1 - p) / 1000)
    assert np.all(np.abs(mean - p) <= 4 * sigma)


def test_mean_density_is_monotone(sensor):
    exposures = np.logspace(-10, -6, 9)
    fluxes = np.logspace(5, 9, 9)
    for phi in fluxes:
        flux = FluxMap.uniform(2, 2, phi)
        densities = [mean_bit_density(flux, sensor.with_exposure(t)) for t in exposures]
        assert np.all(np.diff(densities) >= 0)
    for t in exposures:
        cfg = sensor.with_exposure(t)
        densities = [mean_bit_density(FluxMap.uniform(2, 2, p), cfg) for p in fluxes]
        assert np.all(np.diff(densities) >= 0)


def test_auto_exposure_uniform_scene(sensor):
    phi = 5e7
    exposure = auto_exposure(FluxMap.uniform(4, 4, phi), sensor, 0.5)
    assert exposure == pytest.approx(math.log(2) / (sensor.q * phi), rel=1e-9)
    doubled = auto_exposure(FluxMap.uniform(4, 4, 2 * phi), sensor, 0.5)
    assert doubled == pytest.approx(exposure / 2, rel=1e-9)


def test_auto_exposure_natural_image(sensor, gradient_image):
    flux = intensity_to_flux(gradient_image, sensor)
    exposure = auto_exposure(flux, sensor, 0.5)
    achieved = mean_bit_density(flux, sensor.with_exposure(exposure))
    assert abs(achieved - 0.5) < 1e-6


@pytest.mark.parametrize("target", [0.0, 1.0, -0.2, 1.5])
def test_auto_exposure_rejects_targets(sensor, target):
    with pytest.raises(InputError):
        auto_exposure(FluxMap.uniform(4, 4, 1e7), sensor, target)


def test_auto_exposure_rejects_dark_scene(sensor):
    with pytest.raises(InputError):
        auto_exposure(FluxMap.uniform(4, 4, 0.0), sensor, 0.5)


def test_auto_exposure_rejects_unreachable_density(sensor):
    # Three quarters of the pixels are black, so the density cannot pass 0.25.
    data = np.zeros((2, 2, 3))
    data[0, 0] = 1e7
    with pytest.raises(InputError):
        auto_exposure(FluxMap(data), sensor, 0.5)


def test_frame_filename(sensor):
    name = frame_filename("fern_000", 12, sensor)
    assert re.fullmatch(r"fern_000_f12_[0-9a-f]{8}\.png", name)
    assert name.endswith(f"_{sensor.hash8}.png")


@pytest.mark.parametrize("phi", [1e3, 1e5, 1e6, 1e7, 1e8, 1e9])
def test_ones_fraction_follows_bit_probability(long_exposure_sensor, phi):
    frame = synthesize_binary_frame(
        FluxMap.uniform(256, 256, phi), long_exposure_sensor, seed=17
    )
    trials = frame.bits.size
    p = bit_probability(phi, long_exposure_sensor)
    sigma = sp.stats.binom.std(trials, p)
    assert abs(np.count_nonzero(frame.bits) - trials * p) <= 3 * sigma


@pytest.mark.parametrize("mode", list(SampleMode))
def test_count_frame_agrees_with_binary_frame(sensor, gradient_image, mode):
    cfg = sensor.with_exposure(5e-8)
    flux = intensity_to_flux(gradient_image, cfg)
    counts = synthesize_count_frame(flux, cfg, seed=9, frame_index=2, mode=mode, jobs=3)
    frame = synthesize_binary_frame(flux, cfg, seed=9, frame_index=2, mode=mode)
    assert counts.dtype == np.int64
    np.testing.assert_array_equal(counts > 0, frame.bits == 255)


def test_count_frame_honours_iteration_cap(long_exposure_sensor):
    flux = FluxMap.uniform(4, 4, 1e8)
    counts = synthesize_count_frame(flux, long_exposure_sensor, seed=0)
    assert counts.max() <= long_exposure_sensor.max_count
    with pytest.raises(SimulationError):
        synthesize_count_frame(flux, long_exposure_sensor, seed=0, iteration_cap=10)
