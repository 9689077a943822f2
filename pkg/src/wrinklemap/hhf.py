"""Orientation-extended hybrid Hessian filter.

A wrinkle is a thin dark furrow.  Across the furrow the directional gradient
changes sign, so its magnitude has a sharp valley on the furrow centreline.
The filter takes the magnitude of one gradient channel (``Gy`` for
horizontal furrows, ``Gx`` for vertical ones), computes the Hessian of that
channel and keeps the positive part of the largest-magnitude eigenvalue.
Both orientations are merged into a single map in ``[0, 1]``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError
from .imagecore import as_gray, directional_gradient, gaussian_smooth

DEFAULT_SIGMA = 2.0
DEFAULT_THRESHOLD = 0.3

# Raw responses below this (intensity levels per px^3) are float round-off.
RESPONSE_FLOOR = 1e-9


class Orientation(enum.Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


@dataclass(frozen=True)
class FilterParams:
    sigma: float = DEFAULT_SIGMA
    response_threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise InvalidInputError(f"sigma must be >= 0, got {self.sigma}")
        if not 0.0 <= self.response_threshold <= 1.0:
            raise InvalidInputError(
                f"response_threshold must lie in [0, 1], got {self.response_threshold}")


class HessianField(NamedTuple):
    """Per-pixel symmetric Hessian ``[[ha, hb], [hb, hc]]``.

    ``ha`` is d2/dy2, ``hb`` the mixed derivative and ``hc`` d2/dx2.
    """
    ha: np.ndarray
    hb: np.ndarray
    hc: np.ndarray


def _second_difference(arr: np.ndarray, axis: int) -> np.ndarray:
    # [1, -2, 1] stencil; the border rows reuse their neighbour's stencil,
    # which is still exact for quadratics
    a = np.moveaxis(arr, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = a[2:] - 2.0 * a[1:-1] + a[:-2]
    out[0] = out[1]
    out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


def hessian_field(img, sigma: float = 0.0) -> HessianField:
    """Hessian of ``img`` after Gaussian smoothing at scale ``sigma``."""
    arr = as_gray(img, min_size=5)
    smoothed = gaussian_smooth(arr, sigma)
    hc = _second_difference(smoothed, axis=1)
    ha = _second_difference(smoothed, axis=0)
    grad = directional_gradient(smoothed)
    hb = np.gradient(grad.gx, axis=0)
    return HessianField(ha=ha, hb=hb, hc=hc)


def max_eigen(ha: float, hb: float, hc: float) -> tuple[float, tuple[float, float]]:
    """Largest-magnitude eigenvalue of ``[[ha, hb], [hb, hc]]`` and its eigenvector.

    The eigenvector is returned as ``(dx, dy)`` in image coordinates.  When
    both eigenvalues have the same magnitude the algebraically larger one wins.
    """
    mean = 0.5 * (ha + hc)
    disc = math.hypot(0.5 * (ha - hc), hb)
    lam = mean + disc if mean >= 0 else mean - disc
    if hb != 0.0:
        # in (x, y) order the matrix is [[hc, hb], [hb, ha]]
        vx, vy = lam - ha, hb
        norm = math.hypot(vx, vy)
        return lam, (vx / norm, vy / norm)
    if lam == hc:
        return lam, (1.0, 0.0)
    return lam, (0.0, 1.0)


def max_eigenvalue_field(h: HessianField) -> np.ndarray:
    """Vectorized largest-magnitude eigenvalue, same tie rule as :func:`max_eigen`."""
    mean = 0.5 * (h.ha + h.hc)
    disc = np.hypot(0.5 * (h.ha - h.hc), h.hb)
    return np.where(mean >= 0, mean + disc, mean - disc)


def _check_params(params):
    if params is None:
        return FilterParams()
    if not isinstance(params, FilterParams):
        raise InvalidInputError(f"expected FilterParams, got {type(params).__name__}")
    return params


def _normalize(raw: np.ndarray) -> np.ndarray:
    peak = raw.max()
    if peak <= RESPONSE_FLOOR:
        return np.zeros_like(raw)
    out = raw / peak
    out[raw <= RESPONSE_FLOOR] = 0.0
    return out


def raw_response(img, orientation: Orientation, params: FilterParams | None = None) -> np.ndarray:
    """Unnormalized ridge strength for one orientation (intensity levels / px^3)."""
    params = _check_params(params)
    arr = as_gray(img, min_size=7)
    grad = directional_gradient(gaussian_smooth(arr, params.sigma))
    channel = grad.gy if Orientation(orientation) is Orientation.HORIZONTAL else grad.gx
    lam = max_eigenvalue_field(hessian_field(np.abs(channel), 0.0))
    return np.maximum(lam, 0.0)


def hhf_response(img, orientation: Orientation, params: FilterParams | None = None) -> np.ndarray:
    """Ridge response for one orientation, scaled so the strongest pixel is 1."""
    return _normalize(raw_response(img, orientation, params))


def combined_wrinkle_map(img, params: FilterParams | None = None) -> np.ndarray:
    """Pixel-wise maximum of the horizontal and vertical responses, peak 1.

    The maximum is taken before normalization so that a weak orientation is
    not inflated to the strength of the dominant one.
    """
    horizontal = raw_response(img, Orientation.HORIZONTAL, params)
    vertical = raw_response(img, Orientation.VERTICAL, params)
    return _normalize(np.maximum(horizontal, vertical))


def to_levels(wrinkle_map) -> np.ndarray:
    """WrinkleMap in [0, 1] -> 8-bit levels, round(255 * response)."""
    m = np.asarray(wrinkle_map, dtype=np.float64)
    return np.clip(np.floor(255.0 * m + 0.5), 0, 255).astype(np.uint8)
