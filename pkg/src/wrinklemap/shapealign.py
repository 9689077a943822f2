"""Landmark shapes, Procrustes alignment and piecewise-affine texture warping.

Shapes are ``(N, 2)`` float arrays of ``(x, y)`` pixel coordinates.  Face
shapes carry :data:`N_LANDMARKS` points: 64 inner points (eyebrows, eyes,
nose, mouth) followed by 24 contour points; the exact order is recorded in
the mask asset sidecar.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay

from .errors import DegenerateGeometryError, DegenerateShapeError, InvalidInputError

N_LANDMARKS = 88
N_INNER = 64
N_CONTOUR = 24

GPA_TOLERANCE = 1e-6
GPA_MAX_ITER = 100


def as_shape(points, n_points: int | None = None) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidInputError(f"expected an (N, 2) point array, got shape {arr.shape}")
    if n_points is not None and arr.shape[0] != n_points:
        raise InvalidInputError(f"expected {n_points} landmarks, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("landmarks contain non-finite coordinates")
    return arr


def _pair(shape, mean):
    a = as_shape(shape)
    b = as_shape(mean)
    if a.shape != b.shape:
        raise InvalidInputError(
            f"point-count mismatch: {a.shape[0]} landmarks vs {b.shape[0]} in the mean")
    return a, b


def load_landmarks(path, image_size: tuple[int, int] | None = None) -> np.ndarray:
    """Read a JSON array of 88 ``[x, y]`` pairs.

    With ``image_size=(width, height)`` every point must also fall inside
    the image.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read landmarks from {path}: {exc}") from exc
    pts = as_shape(data, N_LANDMARKS)
    if image_size is not None:
        w, h = image_size
        outside = (pts[:, 0] < 0) | (pts[:, 0] > w - 1) | (pts[:, 1] < 0) | (pts[:, 1] > h - 1)
        if outside.any():
            raise InvalidInputError(
                f"landmark {int(np.argmax(outside))} lies outside the {w}x{h} image")
    return pts


def save_landmarks(path, points) -> None:
    pts = as_shape(points)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump([[float(x), float(y)] for x, y in pts], fh)


def reorder_landmarks(points, index_map) -> np.ndarray:
    """Permute a detector's landmark list into this package's order.

    ``index_map[i]`` is the detector index of canonical landmark ``i``; use
    it to adapt landmark files from detectors with a different numbering.
    """
    pts = as_shape(points)
    idx = np.asarray(index_map, dtype=int)
    if idx.shape != (N_LANDMARKS,) or len(set(idx.tolist())) != N_LANDMARKS:
        raise InvalidInputError(f"index map must list {N_LANDMARKS} distinct indices")
    if idx.min() < 0 or idx.max() >= len(pts):
        raise InvalidInputError("index map refers to points that do not exist")
    return pts[idx]


def procrustes_distance(shape, mean) -> float:
    """Sum of squared point-to-point distances between two shapes."""
    a, b = _pair(shape, mean)
    return float(np.sum((a - b) ** 2))


@dataclass(frozen=True)
class SimilarityTransform:
    """``p -> scale * R(rotation) @ p + translation`` (no reflection)."""
    scale: float = 1.0
    rotation: float = 0.0
    translation: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidInputError(f"scale must be positive, got {self.scale}")

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return self.scale * np.array([[c, -s], [s, c]])

    def apply(self, points) -> np.ndarray:
        pts = as_shape(points)
        return pts @ self.matrix.T + np.asarray(self.translation)

    def inverse(self) -> "SimilarityTransform":
        inv_scale = 1.0 / self.scale
        c, s = math.cos(-self.rotation), math.sin(-self.rotation)
        tx, ty = self.translation
        t = -inv_scale * np.array([c * tx - s * ty, s * tx + c * ty])
        return SimilarityTransform(inv_scale, -self.rotation, (float(t[0]), float(t[1])))


def align_to_mean(shape, mean) -> tuple[np.ndarray, SimilarityTransform]:
    """Least-squares similarity fit of ``shape`` onto ``mean``.

    Returns the transformed shape and the transform.  Uses the complex-number
    closed form: with centred shapes ``z`` and ``w`` the optimal
    scale-rotation is ``c = <z, w> / <z, z>``.
    """
    a, b = _pair(shape, mean)
    ca, cb = a.mean(axis=0), b.mean(axis=0)
    z = (a[:, 0] - ca[0]) + 1j * (a[:, 1] - ca[1])
    w = (b[:, 0] - cb[0]) + 1j * (b[:, 1] - cb[1])
    zz = float(np.vdot(z, z).real)
    if zz <= 1e-12 * max(1.0, float(np.abs(a).max()) ** 2):
        raise DegenerateShapeError("cannot align a shape whose points all coincide")
    c = np.vdot(z, w) / zz
    if c == 0:
        raise DegenerateShapeError("shape is uncorrelated with the mean; no unique alignment")
    scale, rotation = float(abs(c)), float(np.angle(c))
    t = cb - np.array([(c * complex(ca[0], ca[1])).real, (c * complex(ca[0], ca[1])).imag])
    transform = SimilarityTransform(scale, rotation, (float(t[0]), float(t[1])))
    return transform.apply(a), transform


def _canonical_frame(shape: np.ndarray) -> np.ndarray:
    centred = shape - shape.mean(axis=0)
    size = np.linalg.norm(centred)
    if size == 0:
        raise DegenerateShapeError("cannot canonicalize a shape whose points all coincide")
    return centred / size


def mean_shape(shapes, reference=None, tol: float = GPA_TOLERANCE,
               max_iter: int = GPA_MAX_ITER) -> np.ndarray:
    """Generalized Procrustes mean.

    After each iteration the mean is re-registered onto ``reference`` (by a
    similarity fit), which fixes its centroid, size and orientation.  Without
    a reference the frame is centroid at the origin and unit Frobenius size,
    oriented like the first shape.
    """
    shapes = [as_shape(s) for s in shapes]
    if not shapes:
        raise InvalidInputError("mean_shape needs at least one shape")
    first = shapes[0]
    if any(s.shape != first.shape for s in shapes):
        raise InvalidInputError("all shapes must have the same number of points")
    ref = _canonical_frame(first) if reference is None else as_shape(reference, len(first))

    mean = align_to_mean(first, ref)[0]
    for _ in range(max_iter):
        aligned = np.stack([align_to_mean(s, mean)[0] for s in shapes])
        new_mean = align_to_mean(aligned.mean(axis=0), ref)[0]
        moved = float(np.abs(new_mean - mean).max())
        mean = new_mean
        if moved < tol:
            break
    return mean


def triangulate(points) -> np.ndarray:
    """Delaunay triangles of a point set, as an ``(M, 3)`` index array."""
    pts = as_shape(points)
    return np.ascontiguousarray(Delaunay(pts).simplices, dtype=np.int64)


def _bilinear(img: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    x = np.clip(x, 0, w - 1)
    y = np.clip(y, 0, h - 1)
    x0 = np.minimum(np.floor(x).astype(np.int64), w - 2) if w > 1 else np.zeros(x.shape, np.int64)
    y0 = np.minimum(np.floor(y).astype(np.int64), h - 2) if h > 1 else np.zeros(y.shape, np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    if img.ndim == 3:
        fx = fx[:, None]
        fy = fy[:, None]
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bottom = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    # exact pass-through on integer coordinates
    top = np.where(fx == 0, img[y0, x0], top)
    bottom = np.where(fx == 0, img[y1, x0], bottom)
    return np.where(fy == 0, top, top * (1 - fy) + bottom * fy)


def _snap(v: np.ndarray) -> np.ndarray:
    r = np.round(v)
    return np.where(np.abs(v - r) < 1e-7, r, v)


def warp_coverage(dst, out_size: tuple[int, int], triangles=None) -> np.ndarray:
    """Triangle index owning each output pixel, ``-1`` outside the mesh."""
    return _rasterize(as_shape(dst), out_size, triangles)[0]


def _rasterize(dst: np.ndarray, out_size, triangles):
    width, height = out_size
    tris = triangulate(dst) if triangles is None else np.asarray(triangles, dtype=np.int64)
    if tris.ndim != 2 or tris.shape[1] != 3 or tris.min() < 0 or tris.max() >= len(dst):
        raise InvalidInputError("triangles must be an (M, 3) array of valid point indices")
    owner = np.full((height, width), -1, dtype=np.int64)
    bary = np.zeros((height, width, 3))
    for t, (i, j, k) in enumerate(tris):
        p0, p1, p2 = dst[i], dst[j], dst[k]
        det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])
        scale = max(1.0, float(np.abs(np.stack([p0, p1, p2])).max()))
        if abs(det) <= 1e-9 * scale * scale:
            raise DegenerateGeometryError(
                f"destination triangle {t} (landmarks {i}, {j}, {k}) has zero area",
                triangle_index=t, vertices=(int(i), int(j), int(k)))
        lo = np.floor(np.minimum(np.minimum(p0, p1), p2)).astype(int)
        hi = np.ceil(np.maximum(np.maximum(p0, p1), p2)).astype(int)
        x_lo, y_lo = max(lo[0], 0), max(lo[1], 0)
        x_hi, y_hi = min(hi[0], width - 1), min(hi[1], height - 1)
        if x_lo > x_hi or y_lo > y_hi:
            continue
        ys, xs = np.mgrid[y_lo:y_hi + 1, x_lo:x_hi + 1]
        dx, dy = xs - p0[0], ys - p0[1]
        b1 = (dx * (p2[1] - p0[1]) - dy * (p2[0] - p0[0])) / det
        b2 = (dy * (p1[0] - p0[0]) - dx * (p1[1] - p0[1])) / det
        b0 = 1.0 - b1 - b2
        eps = 1e-9
        inside = (b0 >= -eps) & (b1 >= -eps) & (b2 >= -eps)
        # first triangle wins on shared edges
        free = owner[y_lo:y_hi + 1, x_lo:x_hi + 1] == -1
        take = inside & free
        owner[y_lo:y_hi + 1, x_lo:x_hi + 1][take] = t
        block = bary[y_lo:y_hi + 1, x_lo:x_hi + 1]
        block[take] = np.stack([b0[take], b1[take], b2[take]], axis=-1)
    return owner, bary, tris


def piecewise_affine_warp(img, src, dst, out_size: tuple[int, int], triangles=None) -> np.ndarray:
    """Warp ``img`` so that landmarks ``src`` land on ``dst``.

    ``out_size`` is ``(width, height)``.  Each output pixel inside the
    triangulated ``dst`` mesh is mapped through its triangle's affine map back
    into ``img`` and sampled bilinearly; pixels outside the mesh are 0.
    ``triangles`` defaults to the Delaunay triangulation of ``dst``.
    Returns a float64 array (2-D, or HxWxC for colour input).
    """
    image = np.asarray(img, dtype=np.float64)
    if image.ndim not in (2, 3) or image.size == 0:
        raise InvalidInputError(f"cannot warp an image of shape {image.shape}")
    src_pts, dst_pts = _pair(src, dst)
    width, height = (int(v) for v in out_size)
    if width < 1 or height < 1:
        raise InvalidInputError(f"invalid output size {out_size}")
    if (dst_pts[:, 0].min() < 0 or dst_pts[:, 1].min() < 0
            or dst_pts[:, 0].max() > width - 1 or dst_pts[:, 1].max() > height - 1):
        raise InvalidInputError("destination landmarks fall outside the output image")

    owner, bary, tris = _rasterize(dst_pts, (width, height), triangles)
    out = np.zeros((height, width) + image.shape[2:])
    ys, xs = np.nonzero(owner >= 0)
    if ys.size == 0:
        return out
    corners = src_pts[tris[owner[ys, xs]]]          # (P, 3, 2)
    weights = bary[ys, xs]                          # (P, 3)
    sx = _snap(np.einsum("pk,pk->p", weights, corners[:, :, 0]))
    sy = _snap(np.einsum("pk,pk->p", weights, corners[:, :, 1]))
    out[ys, xs] = _bilinear(image, sx, sy)
    return out
