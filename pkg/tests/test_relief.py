import json
import math

import numpy as np
import pytest

from wrinklemap.errors import InvalidInputError
from wrinklemap.relief import decode_normals, height_to_normal_map, write_normal_map


@pytest.mark.parametrize("value", [0.0, 37.0, 255.0])
def test_flat_map(value):
    out = height_to_normal_map(np.full((6, 7), value))
    assert out.dtype == np.uint8 and out.shape == (6, 7, 3)
    assert np.all(out == (128, 128, 255))


def test_zero_scale_is_flat():
    rng = np.random.default_rng(16)
    out = height_to_normal_map(rng.uniform(0, 255, (9, 9)), -1.0, 0.0)
    assert np.all(out == (128, 128, 255))


def test_ramp_matches_plane_normal():
    slope = 1 / 0.3  # 0.3 * slope = 1
    levels = np.tile(slope * np.arange(12.0), (8, 1))
    out = height_to_normal_map(levels)
    inner = out[1:-1, 1:-1]
    # analytic normal of h = -0.3 * slope * x is (1, 0, 1) / sqrt 2
    expected = [round(127.5 * (1 / math.sqrt(2) + 1)), 128, round(127.5 * (1 / math.sqrt(2) + 1))]
    assert expected[0] == 218
    assert np.abs(inner.astype(int) - expected).max() <= 1


def test_unit_length_everywhere():
    rng = np.random.default_rng(17)
    out = height_to_normal_map(rng.uniform(0, 255, (30, 30)), -1.0, 0.3)
    n = decode_normals(out)
    # each channel carries at most 0.5/127.5 rounding error
    assert np.abs(np.linalg.norm(n, axis=-1) - 1).max() <= math.sqrt(3) / 127.5
    assert np.all(n[..., 2] > 0)


def test_furrow_tilts_inwards():
    x = np.arange(21.0)
    levels = np.tile(255 * np.exp(-0.5 * ((x - 10) / 2.0) ** 2), (5, 1))
    n = decode_normals(height_to_normal_map(levels))[2]
    assert np.all(n[5:10, 0] > 0) and np.all(n[11:16, 0] < 0)


def test_scale_range():
    with pytest.raises(InvalidInputError):
        height_to_normal_map(np.zeros((4, 4)), -1.0, 1.5)


def test_sidecar(tmp_path):
    out = height_to_normal_map(np.zeros((4, 4)))
    sidecar = write_normal_map(tmp_path / "n.png", out, -1.0, 0.3)
    meta = json.loads(sidecar.read_text())
    assert meta["weight"] == -1.0 and meta["intensity_scale"] == 0.3
    assert "y-down" in meta["axis_convention"]
