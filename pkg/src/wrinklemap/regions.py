"""Canonical 10-region face mask and wrinkle-density quantification.

Density is ``10**4`` times the fraction of the whole mask area covered by
wrinkle pixels of a region (pixels whose normalized response reaches the
threshold), so the ten region densities add up to the face density.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import CorruptAssetError, InvalidInputError
from .shapealign import N_LANDMARKS, as_shape, triangulate

N_REGIONS = 10
DENSITY_SCALE = 1e4
REGION_IDS = tuple(range(1, N_REGIONS + 1))

DENSITY_COLUMNS = (["subject_id", "age", "smoker"]
                   + [f"r{i}" for i in REGION_IDS] + ["face"])


@dataclass(frozen=True, eq=False)
class RegionMap:
    labels: np.ndarray
    region_names: dict
    canonical_landmarks: np.ndarray
    triangles: np.ndarray = field(repr=False)

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height

    @property
    def mask_area(self) -> int:
        return int(np.count_nonzero(self.labels))

    def region_mask(self, region_id: int) -> np.ndarray:
        _check_region(region_id)
        return self.labels == region_id


@dataclass(frozen=True)
class DensityRecord:
    subject_id: str
    age: float
    smoker: bool
    region_density: tuple
    face_density: float

    def row(self) -> list[str]:
        return ([self.subject_id, _format_age(self.age), "true" if self.smoker else "false"]
                + [f"{v:.6f}" for v in self.region_density] + [f"{self.face_density:.6f}"])


def default_mask_dir() -> Path:
    return Path(str(resources.files("wrinklemap") / "data" / "mask"))


def load_region_mask(path=None) -> RegionMap:
    """Load ``regions.png`` and ``mask.json`` from a mask asset directory.

    ``path`` may also point at the PNG itself; the sidecar is then looked up
    next to it.  Defaults to the asset shipped with the package.
    """
    base = Path(path) if path is not None else default_mask_dir()
    png = base / "regions.png" if base.is_dir() else base
    sidecar = png.with_name("mask.json")
    try:
        with Image.open(png) as im:
            if im.mode not in ("P", "L"):
                raise CorruptAssetError(f"{png}: expected an 8-bit indexed PNG, got mode {im.mode}")
            labels = np.array(im, dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise CorruptAssetError(f"cannot read mask image {png}: {exc}") from exc
    try:
        with open(sidecar) as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptAssetError(f"cannot read mask sidecar {sidecar}: {exc}") from exc

    unknown = sorted(set(np.unique(labels).tolist()) - set(range(N_REGIONS + 1)))
    if unknown:
        raise CorruptAssetError(f"mask contains unknown label value(s) {unknown}")
    present = set(np.unique(labels).tolist())
    for region_id in REGION_IDS:
        if region_id not in present:
            raise CorruptAssetError(f"mask is missing region {region_id}")

    names = {int(k): str(v) for k, v in meta.get("regions", {}).items()}
    if set(names) != set(REGION_IDS):
        raise CorruptAssetError("mask sidecar must name regions 1-10")
    try:
        landmarks = as_shape(meta["landmarks"], N_LANDMARKS)
    except (KeyError, InvalidInputError) as exc:
        raise CorruptAssetError(f"mask sidecar has no valid canonical landmarks: {exc}") from exc
    h, w = labels.shape
    if (landmarks.min() < 0 or landmarks[:, 0].max() > w - 1
            or landmarks[:, 1].max() > h - 1):
        raise CorruptAssetError("canonical landmarks fall outside the mask canvas")
    labels.setflags(write=False)
    return RegionMap(labels=labels, region_names=names,
                     canonical_landmarks=landmarks, triangles=triangulate(landmarks))


def _check_region(region_id):
    if not isinstance(region_id, (int, np.integer)) or not 1 <= region_id <= N_REGIONS:
        raise InvalidInputError(f"region id must be an integer in 1..{N_REGIONS}, got {region_id!r}")


def _wrinkle_pixels(wrinkle_map, regions: RegionMap, threshold: float) -> np.ndarray:
    m = np.asarray(wrinkle_map, dtype=np.float64)
    if m.shape != regions.labels.shape:
        raise InvalidInputError(
            f"wrinkle map {m.shape[::-1]} and region mask {regions.size} differ in size")
    if not 0.0 <= threshold <= 1.0:
        raise InvalidInputError(f"threshold must lie in [0, 1], got {threshold}")
    return m >= threshold


def region_density(wrinkle_map, regions: RegionMap, region_id: int, threshold: float) -> float:
    _check_region(region_id)
    hits = _wrinkle_pixels(wrinkle_map, regions, threshold)
    count = int(np.count_nonzero(hits & (regions.labels == region_id)))
    return DENSITY_SCALE * count / regions.mask_area


def face_density(wrinkle_map, regions: RegionMap, threshold: float) -> float:
    hits = _wrinkle_pixels(wrinkle_map, regions, threshold)
    count = int(np.count_nonzero(hits & (regions.labels != 0)))
    return DENSITY_SCALE * count / regions.mask_area


def region_densities(wrinkle_map, regions: RegionMap, threshold: float) -> np.ndarray:
    """All ten region densities at once (index 0 is region 1)."""
    hits = _wrinkle_pixels(wrinkle_map, regions, threshold)
    counts = np.bincount(regions.labels[hits], minlength=N_REGIONS + 1)[1:]
    return DENSITY_SCALE * counts / regions.mask_area


def _format_age(age) -> str:
    return str(int(age)) if float(age).is_integer() else repr(float(age))


def write_densities_csv(path, records) -> None:
    """Write records sorted by subject id, header row first."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DENSITY_COLUMNS)
        for rec in sorted(records, key=lambda r: r.subject_id):
            writer.writerow(rec.row())


def read_densities_csv(path) -> list[DensityRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != DENSITY_COLUMNS:
            raise InvalidInputError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            DensityRecord(
                subject_id=row["subject_id"],
                age=float(row["age"]),
                smoker=row["smoker"] == "true",
                region_density=tuple(float(row[f"r{i}"]) for i in REGION_IDS),
                face_density=float(row["face"]),
            )
            for row in reader
        ]
