"""Construction of the canonical face template shipped in ``data/mask``.

The template is a frontal face on a 320x400 canvas: 88 canonical landmarks
and a label image splitting the skin into ten wrinkle regions.  Region
outlines are simple geometric primitives placed relative to the landmark
features.  Run ``python -m wrinklemap.maskgen <dir>`` to regenerate the
asset; the output is deterministic.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

MASK_WIDTH = 320
MASK_HEIGHT = 400

REGION_NAMES = {
    1: "forehead",
    2: "glabella",
    3: "upper eyelids",
    4: "crow's feet",
    5: "lower eyelids",
    6: "cheeks",
    7: "nasolabial grooves",
    8: "upper lips",
    9: "marionette",
    10: "lower lips",
}

LANDMARK_GROUPS = {
    "left_eyebrow": [0, 8],
    "right_eyebrow": [8, 16],
    "left_eye": [16, 24],
    "right_eye": [24, 32],
    "nose": [32, 44],
    "mouth_outer": [44, 56],
    "mouth_inner": [56, 64],
    "contour": [64, 88],
}

# feature geometry (x, y, half-width, half-height), "left" = image left
FACE = (160.0, 205.0, 140.0, 190.0)
EYES = ((110.0, 165.0, 26.0, 10.0), (210.0, 165.0, 26.0, 10.0))
MOUTH = (160.0, 328.0, 42.0, 14.0)
MOUTH_INNER = (160.0, 328.0, 28.0, 4.0)
BROW_Y = 128.0


def _ellipse_points(cx, cy, a, b, n, start=0.0):
    t = start + 2 * np.pi * np.arange(n) / n
    return np.stack([cx + a * np.cos(t), cy + b * np.sin(t)], axis=1)


def _brow(x_inner, x_outer):
    # 5 points along the upper edge, 3 back along the lower edge
    xs = np.linspace(x_outer, x_inner, 5)
    u = (xs - x_outer) / (x_inner - x_outer)
    upper = np.stack([xs, BROW_Y - 10 * np.sin(np.pi * (0.35 + 0.65 * u)) - 2], axis=1)
    xl = np.linspace(x_inner, x_outer, 5)[1:4]
    ul = (xl - x_outer) / (x_inner - x_outer)
    lower = np.stack([xl, BROW_Y + 6 - 8 * np.sin(np.pi * (0.35 + 0.65 * ul))], axis=1)
    return np.vstack([upper, lower])


def _contour():
    cx, cy, a, b = FACE
    t = -np.pi / 2 + 2 * np.pi * np.arange(24) / 24
    s = np.sin(t)
    narrow = 1.0 - 0.22 * np.clip(s, 0, None) ** 2
    return np.stack([cx + a * np.cos(t) * narrow, cy + b * s], axis=1)


def canonical_landmarks() -> np.ndarray:
    """The 88 canonical landmarks in mask pixel coordinates."""
    nose = np.array([
        [160, 172], [160, 192], [160, 212], [160, 232],   # bridge
        [160, 258],                                       # tip
        [143, 254], [177, 254], [134, 266], [186, 266],   # alae
        [147, 274], [173, 274], [160, 277],               # nostrils, columella
    ], dtype=float)
    pts = np.vstack([
        _brow(138.0, 74.0),
        _brow(182.0, 246.0),
        _ellipse_points(*EYES[0], 8),
        _ellipse_points(*EYES[1], 8),
        nose,
        _ellipse_points(*MOUTH, 12),
        _ellipse_points(*MOUTH_INNER, 8),
        _contour(),
    ])
    assert pts.shape == (88, 2)
    return np.round(pts, 3)


def _in_ellipse(x, y, cx, cy, a, b, grow=0.0):
    return ((x - cx) / (a + grow)) ** 2 + ((y - cy) / (b + grow)) ** 2 <= 1.0


def _near_segment(x, y, p, q, radius):
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    d = q - p
    t = np.clip(((x - p[0]) * d[0] + (y - p[1]) * d[1]) / d.dot(d), 0, 1)
    return np.hypot(x - p[0] - t * d[0], y - p[1] - t * d[1]) <= radius


def _box(x, y, x0, x1, y0, y1):
    return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)


def region_labels() -> np.ndarray:
    """Label image (uint8, 0 = outside the mask) on the canonical canvas."""
    y, x = np.mgrid[0:MASK_HEIGHT, 0:MASK_WIDTH].astype(float)
    cx = 160.0
    mirror = 2 * cx - x
    labels = np.zeros((MASK_HEIGHT, MASK_WIDTH), dtype=np.uint8)

    def paint(mask, label):
        labels[mask] = label

    paint(_box(x, y, 40, 280, 40, 112), 1)
    paint(_box(np.minimum(x, mirror), y, 48, 128, 196, 300), 6)
    paint(_box(np.minimum(x, mirror), y, 44, 80, 140, 196), 4)
    for ex, ey, a, b in EYES:
        paint(_box(x, y, ex - 30, ex + 30, 138, ey), 3)
        paint(_box(x, y, ex - 30, ex + 30, ey, 194), 5)
    paint(_box(x, y, 142, 178, 104, 168), 2)
    paint(_box(x, y, 122, 198, 268, 314), 8)
    paint(_box(x, y, 124, 196, 344, 378), 10)
    paint(_near_segment(np.minimum(x, mirror), y, (130, 262), (106, 326), 13), 7)
    paint(_near_segment(np.minimum(x, mirror), y, (112, 338), (112, 376), 12), 9)

    # holes: facial features and everything outside the inset face outline
    fx, fy, fa, fb = FACE
    narrow = 1.0 - 0.22 * np.clip((y - fy) / fb, 0, None) ** 2
    outside = ((x - fx) / (fa * narrow - 14)) ** 2 + ((y - fy) / (fb - 14)) ** 2 > 1.0
    labels[outside] = 0
    for eye in EYES:
        labels[_in_ellipse(x, y, *eye, grow=3)] = 0
    labels[_in_ellipse(x, y, *MOUTH, grow=3)] = 0
    labels[_box(x, y, 128, 192, 236, 280) & _in_ellipse(x, y, 160, 258, 34, 24)] = 0
    return labels


def write_mask_asset(directory) -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    labels = region_labels()
    im = Image.frombytes("P", (MASK_WIDTH, MASK_HEIGHT), labels.tobytes())
    palette = [0, 0, 0] + [c for i in range(1, 11) for c in _palette_colour(i)]
    im.putpalette(palette + [0, 0, 0] * (256 - len(palette) // 3))
    im.save(out / "regions.png", format="PNG")
    sidecar = {
        "width": MASK_WIDTH,
        "height": MASK_HEIGHT,
        "regions": {str(k): v for k, v in REGION_NAMES.items()},
        "landmark_groups": LANDMARK_GROUPS,
        "landmarks": canonical_landmarks().tolist(),
        "generator": "wrinklemap.maskgen",
    }
    with open(out / "mask.json", "w") as fh:
        json.dump(sidecar, fh, indent=1)
        fh.write("\n")


def _palette_colour(i):
    import colorsys
    r, g, b = colorsys.hsv_to_rgb((i - 1) / 10.0, 0.65, 0.95)
    return int(r * 255), int(g * 255), int(b * 255)


if __name__ == "__main__":
    write_mask_asset(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "data" / "mask")
