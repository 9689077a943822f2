"""Tangent-space normal maps from wrinkle intensity maps.

Heights are taken in 8-bit intensity levels, the units of an exported
wrinkle PNG.  A negative weight turns the bright wrinkle lines into
furrows, and the intensity scale flattens the relief.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .imagecore import as_gray, write_png

DEFAULT_WEIGHT = -1.0
DEFAULT_INTENSITY_SCALE = 0.3
# +x right, +y image-down, +z out of the surface
AXIS_CONVENTION = "x-right, y-down, z-out"


def height_to_normal_map(levels, weight: float = DEFAULT_WEIGHT,
                         intensity_scale: float = DEFAULT_INTENSITY_SCALE) -> np.ndarray:
    """Encode the normals of ``weight * intensity_scale * levels`` as RGB.

    ``levels`` is a wrinkle map in 0-255 units.  Each normal is
    ``normalize(-dh/dx, -dh/dy, 1)`` with central-difference slopes, stored
    as ``round(127.5 * (n + 1))`` per channel.  Returns uint8 HxWx3.
    """
    if not 0.0 <= intensity_scale <= 1.0:
        raise InvalidInputError(f"intensity_scale must lie in [0, 1], got {intensity_scale}")
    if not np.isfinite(weight):
        raise InvalidInputError(f"weight must be finite, got {weight}")
    h = weight * intensity_scale * as_gray(levels, min_size=2)
    dh_dy, dh_dx = np.gradient(h)
    nx, ny, nz = -dh_dx, -dh_dy, np.ones_like(h)
    norm = np.sqrt(nx * nx + ny * ny + 1.0)
    normals = np.stack([nx / norm, ny / norm, nz / norm], axis=-1)
    return np.floor(127.5 * (normals + 1.0) + 0.5).clip(0, 255).astype(np.uint8)


def decode_normals(rgb) -> np.ndarray:
    """Inverse of the channel encoding (no renormalization)."""
    return np.asarray(rgb, dtype=np.float64) / 127.5 - 1.0


def write_normal_map(path, normal_rgb, weight: float = DEFAULT_WEIGHT,
                     intensity_scale: float = DEFAULT_INTENSITY_SCALE) -> Path:
    """Write the PNG plus a ``.json`` sidecar; returns the sidecar path."""
    path = Path(path)
    write_png(path, normal_rgb)
    sidecar = path.with_suffix(".json")
    with open(sidecar, "w") as fh:
        json.dump({"weight": weight, "intensity_scale": intensity_scale,
                   "axis_convention": AXIS_CONVENTION,
                   "green_channel": "+y points down the image",
                   "encoding": "channel = round(127.5 * (component + 1))"},
                  fh, indent=1, sort_keys=True)
        fh.write("\n")
    return sidecar
