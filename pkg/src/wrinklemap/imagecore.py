"""Grayscale images, Gaussian smoothing and first-order directional gradients.

Images are plain 2-D ``float64`` numpy arrays indexed ``[row, col]``, i.e.
``[y, x]``.  Pixel values stay real-valued through the whole pipeline and
are only quantized to 8 bits when written to disk.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import InvalidInputError

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class GradientPair(NamedTuple):
    gx: np.ndarray
    gy: np.ndarray


def as_gray(img, min_size: int = 1) -> np.ndarray:
    """Validate a single-channel image and return it as a float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2-D grayscale image, got shape {arr.shape}")
    h, w = arr.shape
    if h < min_size or w < min_size:
        raise InvalidInputError(
            f"image is {w}x{h}, operation needs at least {min_size}x{min_size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("image contains non-finite values")
    return arr


def to_grayscale(rgb) -> np.ndarray:
    """Rec.601 luma of an RGB image, rounded to the nearest integer level.

    A 2-D input is taken to be grayscale already and is returned as float.
    """
    arr = np.asarray(rgb)
    if arr.size == 0:
        raise InvalidInputError("empty image")
    if arr.ndim == 2:
        return arr.astype(np.float64)
    if arr.ndim != 3 or arr.shape[2] not in (3, 4):
        raise InvalidInputError(f"expected an HxWx3 colour image, got shape {arr.shape}")
    arr = arr[..., :3].astype(np.float64)
    luma = arr @ np.asarray(LUMA_WEIGHTS)
    # round half up; np.rint would round 0.5 to even
    return np.floor(luma + 0.5)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian sampled on integers in [-ceil(3 sigma), ceil(3 sigma)]."""
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(img, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflected borders.

    ``sigma == 0`` returns the input unchanged (as a float64 copy).
    """
    if sigma < 0 or not math.isfinite(sigma):
        raise InvalidInputError(f"sigma must be >= 0, got {sigma}")
    arr = as_gray(img)
    if sigma == 0:
        return arr.copy()
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(arr, k, axis=0, mode="reflect")
    return ndimage.correlate1d(out, k, axis=1, mode="reflect")


def directional_gradient(img) -> GradientPair:
    """First derivatives along x (columns) and y (rows).

    Central differences in the interior, one-sided differences on the border.
    """
    arr = as_gray(img, min_size=3)
    gy, gx = np.gradient(arr)
    return GradientPair(gx=gx, gy=gy)


def read_image(path) -> np.ndarray:
    """Read a PNG as uint8, RGB for colour files and 2-D for grayscale ones."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I", "F"):
            return np.asarray(im.convert("L"))
        return np.asarray(im.convert("RGB"))


def to_uint8(arr) -> np.ndarray:
    return np.clip(np.floor(np.asarray(arr, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def write_png(path, arr) -> None:
    """Write a 2-D (grayscale) or HxWx3 (RGB) array as an 8-bit PNG."""
    data = np.asarray(arr)
    if data.dtype != np.uint8:
        data = to_uint8(data)
    if data.ndim not in (2, 3):
        raise InvalidInputError(f"cannot write array of shape {data.shape} as PNG")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(data)).save(path, format="PNG")
