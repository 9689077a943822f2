import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wrinklemap.errors import InvalidInputError
from wrinklemap.imagecore import (directional_gradient, gaussian_smooth, read_image,
                                  to_grayscale, write_png)


@pytest.mark.parametrize("v", [0, 1, 17, 128, 254, 255])
def test_grayscale_of_equal_channels_is_identity(v):
    img = np.full((4, 5, 3), v, dtype=np.uint8)
    assert np.array_equal(to_grayscale(img), np.full((4, 5), float(v)))


def test_grayscale_pure_red():
    img = np.zeros((1, 1, 3), dtype=np.uint8)
    img[0, 0] = (255, 0, 0)
    assert to_grayscale(img)[0, 0] == round(0.299 * 255) == 76


def test_grayscale_black_and_shape():
    out = to_grayscale(np.zeros((7, 3, 3), dtype=np.uint8))
    assert out.shape == (7, 3) and not out.any()


def test_grayscale_empty_rejected():
    with pytest.raises(InvalidInputError):
        to_grayscale(np.zeros((0, 4, 3), dtype=np.uint8))


@given(arrays(np.uint8, (6, 7, 3)))
def test_grayscale_range(img):
    g = to_grayscale(img)
    assert g.min() >= 0 and g.max() <= 255


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0, 3.7])
def test_smooth_constant_image(sigma):
    img = np.full((20, 30), 93.0)
    np.testing.assert_allclose(gaussian_smooth(img, sigma), img, rtol=0, atol=1e-12)


def test_smooth_zero_sigma_is_identity():
    rng = np.random.default_rng(0)
    img = rng.uniform(0, 255, (11, 13))
    out = gaussian_smooth(img, 0)
    assert np.array_equal(out, img) and out is not img


def test_smooth_impulse_matches_direct_kernel():
    img = np.zeros((21, 21))
    img[10, 10] = 1.0
    # direct evaluation: radius ceil(3 sigma) = 3, normalized over -3..3
    weights = [math.exp(-0.5 * x * x) for x in range(-3, 4)]
    k0 = 1.0 / sum(weights)
    out = gaussian_smooth(img, 1.0)
    assert abs(out[10, 10] - k0 * k0) < 1e-9
    assert abs(out[10, 12] - k0 * weights[5] * k0) < 1e-9
    assert out[10, 14] == 0.0  # outside the radius


def test_smooth_negative_sigma():
    with pytest.raises(InvalidInputError):
        gaussian_smooth(np.zeros((5, 5)), -0.1)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (12, 9), elements=st.floats(0, 255)), st.floats(0.3, 4.0))
def test_smooth_preserves_mean(img, sigma):
    out = gaussian_smooth(img, sigma)
    assert abs(out.mean() - img.mean()) <= 1e-6 * max(1.0, abs(img.mean()))


def test_gradient_constant():
    g = directional_gradient(np.full((5, 6), 3.0))
    assert not g.gx.any() and not g.gy.any()


def test_gradient_ramp():
    x = np.arange(8, dtype=float)
    img = np.tile(2.0 * x, (6, 1))
    g = directional_gradient(img)
    np.testing.assert_array_equal(g.gx[1:-1, 1:-1], 2.0)
    assert not g.gy.any()


def test_gradient_borders_are_one_sided():
    img = np.tile(np.array([0.0, 1.0, 4.0, 9.0]), (3, 1))
    g = directional_gradient(img)
    assert g.gx[0, 0] == 1.0 and g.gx[0, -1] == 5.0 and g.gx[0, 1] == 2.0


def test_gradient_transpose_symmetry():
    rng = np.random.default_rng(1)
    img = rng.normal(size=(9, 14))
    g = directional_gradient(img)
    t = directional_gradient(img.T)
    np.testing.assert_array_equal(t.gx, g.gy.T)
    np.testing.assert_array_equal(t.gy, g.gx.T)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_gradient_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    i, j = rng.normal(size=(2, 7, 8))
    lhs = directional_gradient(a * i + b * j)
    gi, gj = directional_gradient(i), directional_gradient(j)
    np.testing.assert_allclose(lhs.gx, a * gi.gx + b * gj.gx, atol=1e-9)
    np.testing.assert_allclose(lhs.gy, a * gi.gy + b * gj.gy, atol=1e-9)


def test_gradient_undersized():
    with pytest.raises(InvalidInputError):
        directional_gradient(np.zeros((2, 5)))


def test_png_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    rgb = rng.integers(0, 256, (5, 6, 3), dtype=np.uint8)
    gray = rng.integers(0, 256, (5, 6), dtype=np.uint8)
    write_png(tmp_path / "c.png", rgb)
    write_png(tmp_path / "g.png", gray)
    assert np.array_equal(read_image(tmp_path / "c.png"), rgb)
    assert np.array_equal(read_image(tmp_path / "g.png"), gray)
