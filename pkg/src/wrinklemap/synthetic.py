"""Synthetic faces with painted furrows, for demos and end-to-end checks.

Faces are drawn analytically in canonical mask coordinates and rendered
into a subject frame through a similarity pose, so the only resampling in
the pipeline is its own warp.  A cohort is built from matched pairs: both
members of a pair share age, pose and age-related furrows, and the smoker
additionally carries perioral furrows in the nasolabial and upper-lip
regions.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from . import maskgen
from .imagecore import write_png
from .regions import RegionMap, load_region_mask
from .shapealign import SimilarityTransform, save_landmarks

FRAME_SIZE = (360, 440)  # width, height of rendered subject images

SKIN = (205.0, 160.0, 140.0)
BACKGROUND = (45.0, 50.0, 60.0)
EYE = (55.0, 40.0, 35.0)
BROW = (85.0, 60.0, 45.0)
LIPS = (150.0, 75.0, 75.0)
NOSTRIL = (95.0, 60.0, 55.0)

FURROW_DEPTH = 70.0
FURROW_WIDTH = 1.5

# age-related furrows per decade above 18, and the orientation they favour
AGE_FURROW_RATE = {
    1: (1.0, "horizontal"),
    2: (0.3, "vertical"),
    3: (0.2, "horizontal"),
    4: (0.4, "any"),
    5: (0.3, "horizontal"),
    6: (0.8, "any"),
    7: (0.3, "any"),
    8: (0.2, "vertical"),
    9: (0.3, "vertical"),
    10: (0.2, "horizontal"),
}
PAIR_AGES = (19, 23, 26, 30, 34, 37, 40, 44, 47, 50, 54, 57, 60, 64, 67, 70, 74, 80, 84, 88)


class Furrow(NamedTuple):
    start: tuple
    end: tuple
    depth: float = FURROW_DEPTH
    width: float = FURROW_WIDTH


def segment_distance(x, y, p, q) -> np.ndarray:
    """Euclidean distance from points ``(x, y)`` to the segment ``p``-``q``."""
    px, py = p
    dx, dy = q[0] - px, q[1] - py
    length2 = dx * dx + dy * dy
    if length2 == 0:
        return np.hypot(x - px, y - py)
    t = np.clip(((x - px) * dx + (y - py) * dy) / length2, 0.0, 1.0)
    return np.hypot(x - px - t * dx, y - py - t * dy)


def furrow_darkness(x, y, furrows) -> np.ndarray:
    """Gaussian-profile darkening; overlapping furrows do not add up."""
    dark = np.zeros(np.broadcast(x, y).shape)
    for f in furrows:
        d = segment_distance(x, y, f.start, f.end)
        np.maximum(dark, f.depth * np.exp(-0.5 * (d / f.width) ** 2), out=dark)
    return dark


def _soft(inside_distance, edge=1.5):
    # 1 inside, 0 outside, smooth over ~edge px
    return 1.0 / (1.0 + np.exp(-inside_distance / edge))


def _ellipse_level(u, v, cx, cy, a, b):
    # approximate signed distance (px, positive inside)
    r = np.hypot((u - cx) / a, (v - cy) / b)
    return (1.0 - r) * min(a, b)


def face_texture(u, v, furrows=(), darkness=None) -> np.ndarray:
    """RGB intensities at canonical coordinates ``(u, v)``.

    ``darkness`` may carry a precomputed :func:`furrow_darkness` for the
    same points, in which case ``furrows`` is ignored.
    """
    out = np.empty(np.shape(u) + (3,))
    fx, fy, fa, fb = maskgen.FACE
    narrow = 1.0 - 0.22 * np.clip((v - fy) / fb, 0, None) ** 2
    face = _soft(_ellipse_level(u / narrow, v, fx / narrow, fy, fa, fb) - 2.0)
    layers = [
        (EYE, [_soft(_ellipse_level(u, v, *e)) for e in maskgen.EYES]),
        (LIPS, [_soft(_ellipse_level(u, v, *maskgen.MOUTH))]),
        (NOSTRIL, [_soft(_ellipse_level(u, v, cx, 272.0, 5.0, 3.0)) for cx in (148.0, 172.0)]),
        (BROW, [_soft(4.0 - np.min([segment_distance(u, v, b[i], b[i + 1]) for i in range(4)], axis=0))
                for b in (maskgen._brow(138.0, 74.0), maskgen._brow(182.0, 246.0))]),
    ]
    dark = furrow_darkness(u, v, furrows) if darkness is None else darkness
    for c in range(3):
        channel = np.full(np.shape(u), SKIN[c]) - dark
        for colour, alphas in layers:
            for alpha in alphas:
                channel = channel * (1 - alpha) + colour[c] * alpha
        out[..., c] = channel * face + BACKGROUND[c] * (1 - face)
    return out


def render_subject(furrows, pose: SimilarityTransform, frame_size=FRAME_SIZE,
                   landmark_jitter: float = 0.0, rng=None):
    """Render a face into a subject frame.

    Returns ``(rgb_uint8, landmarks)`` where ``landmarks`` are the canonical
    ones mapped by ``pose`` plus optional Gaussian jitter.
    """
    w, h = frame_size
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    canon = pose.inverse().apply(np.stack([xs.ravel(), ys.ravel()], axis=1)).reshape(h, w, 2)
    u, v = canon[..., 0], canon[..., 1]
    dark = np.zeros((h, w))
    for f in furrows:
        # a Gaussian profile is negligible beyond 6 widths
        ends = pose.apply([f.start, f.end])
        pad = 6.0 * f.width * pose.scale + 2.0
        x0, y0 = np.floor(ends.min(axis=0) - pad).astype(int)
        x1, y1 = np.ceil(ends.max(axis=0) + pad).astype(int)
        x0, y0, x1, y1 = max(x0, 0), max(y0, 0), min(x1, w - 1), min(y1, h - 1)
        if x0 > x1 or y0 > y1:
            continue
        crop = (slice(y0, y1 + 1), slice(x0, x1 + 1))
        np.maximum(dark[crop], furrow_darkness(u[crop], v[crop], [f]), out=dark[crop])
    rgb = face_texture(u, v, darkness=dark)
    landmarks = pose.apply(maskgen.canonical_landmarks())
    if landmark_jitter > 0:
        rng = np.random.default_rng() if rng is None else rng
        landmarks = landmarks + rng.normal(0.0, landmark_jitter, landmarks.shape)
    landmarks[:, 0] = np.clip(landmarks[:, 0], 0, w - 1)
    landmarks[:, 1] = np.clip(landmarks[:, 1], 0, h - 1)
    rgb = np.clip(np.floor(rgb + 0.5), 0, 255).astype(np.uint8)
    return rgb, landmarks


def eroded_region(regions: RegionMap, region_id: int, margin: float) -> np.ndarray:
    """Pixels of a region at least ``margin`` px away from any other label."""
    inside = regions.labels == region_id
    return ndimage.distance_transform_edt(inside) >= margin


def place_furrow(allowed: np.ndarray, rng, length: float, orientation: str = "any",
                 angle: float | None = None, tries: int = 200) -> Furrow | None:
    """Random segment whose whole length lies on ``allowed`` pixels."""
    ys, xs = np.nonzero(allowed)
    if xs.size == 0:
        return None
    h, w = allowed.shape
    for _ in range(tries):
        i = rng.integers(xs.size)
        cx, cy = xs[i] + rng.uniform(-0.5, 0.5), ys[i] + rng.uniform(-0.5, 0.5)
        if angle is not None:
            theta = angle + rng.normal(0.0, 0.1)
        elif orientation == "horizontal":
            theta = rng.normal(0.0, 0.15)
        elif orientation == "vertical":
            theta = math.pi / 2 + rng.normal(0.0, 0.15)
        else:
            theta = rng.uniform(0, math.pi)
        half = 0.5 * length * np.array([math.cos(theta), math.sin(theta)])
        p = np.array([cx, cy]) - half
        q = np.array([cx, cy]) + half
        samples = p + np.linspace(0, 1, 17)[:, None] * (q - p)
        sx, sy = np.round(samples[:, 0]).astype(int), np.round(samples[:, 1]).astype(int)
        if sx.min() < 0 or sy.min() < 0 or sx.max() >= w or sy.max() >= h:
            continue
        if allowed[sy, sx].all():
            return Furrow(tuple(p), tuple(q))
    return None


def age_furrows(regions: RegionMap, age: float, rng, margin: float = 5.0) -> list:
    furrows = []
    for region_id, (rate, orientation) in AGE_FURROW_RATE.items():
        allowed = eroded_region(regions, region_id, margin)
        count = int(round(rate * max(age - 18.0, 0.0) / 10.0))
        for _ in range(count):
            f = place_furrow(allowed, rng, rng.uniform(10, 22), orientation)
            if f is not None:
                furrows.append(f)
    return furrows


def smoker_furrows(regions: RegionMap, rng, margin: float = 7.0,
                   nasolabial: int = 2, upper_lip: int = 3) -> list:
    """Perioral furrows: along the nasolabial folds and across the upper lip."""
    furrows = []
    groove = eroded_region(regions, 7, margin)
    # fold axis from nose wing to mouth corner, mirrored on the right
    left_angle = math.atan2(326 - 262, 106 - 130)
    for side in range(nasolabial):
        half = groove.copy()
        if side % 2 == 0:
            half[:, regions.width // 2:] = False
            angle = left_angle
        else:
            half[:, :regions.width // 2] = False
            angle = math.pi - left_angle
        f = place_furrow(half, rng, 28.0, angle=angle)
        if f is not None:
            furrows.append(f)
    lip = eroded_region(regions, 8, margin)
    for _ in range(upper_lip):
        f = place_furrow(lip, rng, 12.0, "vertical")
        if f is not None:
            furrows.append(f)
    return furrows


def random_pose(rng, frame_size=FRAME_SIZE) -> SimilarityTransform:
    w, h = frame_size
    scale = rng.uniform(0.9, 1.05)
    rotation = math.radians(rng.uniform(-6.0, 6.0))
    c, s = math.cos(rotation), math.sin(rotation)
    cx, cy = maskgen.FACE[0], maskgen.FACE[1]
    tx = w / 2 - scale * (c * cx - s * cy) + rng.uniform(-6, 6)
    ty = h / 2 - scale * (s * cx + c * cy) + rng.uniform(-6, 6)
    return SimilarityTransform(scale, rotation, (tx, ty))


@dataclass(frozen=True)
class SyntheticSubject:
    subject_id: str
    age: float
    smoker: bool
    furrows: tuple
    pose: SimilarityTransform
    jitter_seed: int


def matched_cohort(regions: RegionMap | None = None, ages=PAIR_AGES, seed: int = 2017,
                   landmark_jitter: float = 0.3) -> list[SyntheticSubject]:
    """One smoker and one non-smoker per age, identical apart from perioral furrows."""
    regions = load_region_mask() if regions is None else regions
    subjects = []
    for i, age in enumerate(ages, start=1):
        rng = np.random.default_rng([seed, i])
        pose = random_pose(rng)
        base = tuple(age_furrows(regions, age, rng))
        extra = tuple(smoker_furrows(regions, rng))
        jitter_seed = int(rng.integers(2**31)) if landmark_jitter > 0 else 0
        subjects.append(SyntheticSubject(f"p{i:02d}n", age, False, base, pose, jitter_seed))
        subjects.append(SyntheticSubject(f"p{i:02d}s", age, True, base + extra, pose, jitter_seed))
    return subjects


def write_cohort(out_dir, subjects, landmark_jitter: float = 0.3) -> Path:
    """Render subjects to PNG + landmark JSON and write ``manifest.csv``."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "landmarks").mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject_id", "image", "landmarks", "age", "smoker"])
        for s in subjects:
            rgb, landmarks = render_subject(
                s.furrows, s.pose, landmark_jitter=landmark_jitter,
                rng=np.random.default_rng(s.jitter_seed))
            image = Path("images") / f"{s.subject_id}.png"
            lm = Path("landmarks") / f"{s.subject_id}.json"
            write_png(out / image, rgb)
            save_landmarks(out / lm, landmarks)
            writer.writerow([s.subject_id, image.as_posix(), lm.as_posix(), int(s.age),
                             "true" if s.smoker else "false"])
    return manifest
