import numpy as np
import pytest

from spadsim.augment import (
    AugmentRanges,
    AugmentSpec,
    apply_affine,
    sample_augment_specs,
)
from spadsim.errors import ConfigError, InputError


def test_identity_returns_copy(random_image):
    out = apply_affine(random_image, AugmentSpec())
    np.testing.assert_array_equal(out, random_image)
    assert out is not random_image


def test_flips_are_involutions(random_image):
    flip_h = AugmentSpec(flip_h=True)
    once = apply_affine(random_image, flip_h)
    np.testing.assert_array_equal(once, random_image[:, ::-1])
    np.testing.assert_array_equal(apply_affine(once, flip_h), random_image)


def test_flips_commute(random_image):
    both = apply_affine(random_image, AugmentSpec(flip_h=True, flip_v=True))
    h_then_v = apply_affine(
        apply_affine(random_image, AugmentSpec(flip_h=True)), AugmentSpec(flip_v=True)
    )
    v_then_h = apply_affine(
        apply_affine(random_image, AugmentSpec(flip_v=True)), AugmentSpec(flip_h=True)
    )
    np.testing.assert_array_equal(both, h_then_v)
    np.testing.assert_array_equal(both, v_then_h)


def test_quarter_turn_is_exact():
    image = np.random.RandomState(0).randint(0, 256, (4, 4, 3)).astype(np.uint8)
    out = apply_affine(image, AugmentSpec(rotation=90.0))
    np.testing.assert_array_equal(out, np.rot90(image, k=1))


def test_output_keeps_dimensions():
    image = np.random.RandomState(1).randint(0, 256, (20, 30, 3)).astype(np.uint8)
    spec = AugmentSpec(zoom=1.2, rotation=13.0, shear_x=0.1, shear_y=-0.05)
    out = apply_affine(image, spec)
    assert out.shape == (20, 30, 3)
    assert out.dtype == np.uint8


def test_constant_image_stays_constant():
    image = np.full((16, 16, 3), 77, dtype=np.uint8)
    out = apply_affine(image, AugmentSpec(zoom=0.8, rotation=-20.0, shear_x=0.15))
    assert np.all(out == 77)


def test_apply_affine_rejects_grayscale():
    with pytest.raises(InputError):
        apply_affine(np.zeros((4, 4), dtype=np.uint8), AugmentSpec())


def test_sampling_is_deterministic():
    a = sample_augment_specs(seed=3, count=50)
    b = sample_augment_specs(seed=3, count=50)
    assert a == b
    assert a != sample_augment_specs(seed=4, count=50)


def test_sampling_count_and_ids():
    specs = sample_augment_specs(seed=0, count=15_000)
    assert len(specs) == 15_000
    assert specs[0].spec_id == "aug-00000"
    assert specs[-1].spec_id == "aug-14999"


def test_sampled_specs_respect_ranges():
    ranges = AugmentRanges()
    specs = sample_augment_specs(seed=11, count=500, ranges=ranges)
    assert all(ranges.contains(spec) for spec in specs)
    assert {spec.flip_h for spec in specs} == {True, False}
    assert {spec.flip_v for spec in specs} == {True, False}


def test_degenerate_ranges_only_flip():
    specs = sample_augment_specs(seed=2, count=100, ranges=AugmentRanges.identity())
    assert all(spec.is_geometric_identity for spec in specs)
    assert all(spec.zoom == 1.0 and spec.rotation == 0.0 for spec in specs)
    assert {spec.flip_h for spec in specs} == {True, False}


def test_spec_round_trips_through_dict():
    spec = sample_augment_specs(seed=5, count=1)[0]
    assert AugmentSpec.from_dict(spec.to_dict()) == spec
    ranges = AugmentRanges(zoom=(0.9, 1.1))
    assert AugmentRanges.from_dict(ranges.to_dict()) == ranges


@pytest.mark.parametrize(
    "kwargs",
    [{"zoom": 0.0}, {"zoom": -1.0}, {"shear_x": 1.0}, {"rotation": float("nan")}],
)
def test_invalid_spec(kwargs):
    with pytest.raises(ConfigError):
        AugmentSpec(**kwargs)


@pytest.mark.parametrize(
    "kwargs",
    [{"zoom": (1.3, 0.8)}, {"zoom": (0.0, 1.0)}, {"shear": (-1.0, 0.0)}],
)
def test_invalid_ranges(kwargs):
    with pytest.raises(ConfigError):
        AugmentRanges(**kwargs)


def test_invalid_count():
    with pytest.raises(ConfigError):
        sample_augment_specs(seed=0, count=0)
    with pytest.raises(ConfigError):
        AugmentRanges.from_dict({"scale": [1, 2]})
