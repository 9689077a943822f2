"""Batch processing of a subject manifest into densities and a cohort report."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import relief
from .cohortstats import TESTS, CohortReport, cohort_report
from .errors import InvalidInputError, ManifestError, WrinkleMapError
from .hhf import DEFAULT_SIGMA, DEFAULT_THRESHOLD, FilterParams, combined_wrinkle_map, to_levels
from .imagecore import read_image, to_grayscale, write_png
from .regions import (DensityRecord, RegionMap, face_density, load_region_mask,
                      region_densities, write_densities_csv)
from .report import write_report
from .shapealign import (align_to_mean, load_landmarks, mean_shape, piecewise_affine_warp,
                         procrustes_distance, warp_coverage)

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ("subject_id", "image", "landmarks", "age", "smoker")
_TRUE = {"true", "1", "yes"}
_FALSE = {"false", "0", "no"}


@dataclass(frozen=True)
class ManifestEntry:
    subject_id: str
    image_path: Path
    landmarks_path: Path
    age: float
    smoker: bool


@dataclass
class RunConfig:
    out_dir: Path
    mask_dir: Path | None = None
    sigma: float = DEFAULT_SIGMA
    threshold: float = DEFAULT_THRESHOLD
    test: str = "mann-whitney"
    relief_weight: float = relief.DEFAULT_WEIGHT
    relief_scale: float = relief.DEFAULT_INTENSITY_SCALE
    recompute_mean: bool = False

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.filter_params = FilterParams(self.sigma, self.threshold)
        if self.test not in TESTS:
            raise InvalidInputError(f"unknown test {self.test!r}; choose from {TESTS}")
        if not 0.0 <= self.relief_scale <= 1.0:
            raise InvalidInputError(f"relief scale must lie in [0, 1], got {self.relief_scale}")


@dataclass
class RunResult:
    records: list
    failures: list = field(default_factory=list)
    report: CohortReport | None = None
    paths: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 0 if self.records else 1


def _parse_smoker(text: str) -> bool:
    value = text.strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"smoker must be one of true/false/1/0/yes/no, got {text!r}")


def parse_manifest(path) -> list[ManifestEntry]:
    """Read ``subject_id,image,landmarks,age,smoker`` rows.

    Relative paths are resolved against the manifest's directory.  File
    existence is not checked here; missing files fail per subject later.
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ManifestError(f"cannot open manifest {path}: {exc}") from exc
    entries, seen = [], set()
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ManifestError(f"{path}: manifest is empty")
        if tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise ManifestError(f"{path}: header must be {','.join(MANIFEST_COLUMNS)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(MANIFEST_COLUMNS):
                raise ManifestError(f"{path}, line {line}: expected 5 fields, got {len(row)}")
            sid, image, landmarks, age_text, smoker_text = (c.strip() for c in row)
            if not sid:
                raise ManifestError(f"{path}, line {line}: empty subject_id")
            try:
                age = float(age_text)
                smoker = _parse_smoker(smoker_text)
            except ValueError as exc:
                raise ManifestError(f"{path}, line {line}: {exc}") from exc
            if not age >= 18:
                raise ManifestError(f"{path}, line {line}: age {age_text} is out of range (< 18)")
            if sid in seen:
                raise ManifestError(f"{path}, line {line}: duplicate subject_id {sid!r}")
            seen.add(sid)
            entries.append(ManifestEntry(sid, path.parent / image, path.parent / landmarks,
                                         age, smoker))
    if not entries:
        raise ManifestError(f"{path}: manifest has no subjects")
    return entries


def _fill_outside(img: np.ndarray, inside: np.ndarray) -> np.ndarray:
    # extend the face texture past the mesh so its border is not a ridge
    if inside.all() or not inside.any():
        return img
    idx = ndimage.distance_transform_edt(~inside, return_distances=False, return_indices=True)
    return img[tuple(idx)]


def _load_subject(entry: ManifestEntry):
    try:
        rgb = read_image(entry.image_path)
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"cannot read image {entry.image_path}: {exc}") from exc
    gray = to_grayscale(rgb)
    h, w = gray.shape
    landmarks = load_landmarks(entry.landmarks_path, image_size=(w, h))
    return gray, landmarks


def process_subject(entry: ManifestEntry, mean, regions: RegionMap, config: RunConfig,
                    write_artifacts: bool = True) -> DensityRecord:
    """Align, warp, filter and quantify one subject.

    Raises :class:`WrinkleMapError` subclasses on bad input; the batch runner
    turns those into skipped subjects.
    """
    gray, landmarks = _load_subject(entry)
    aligned, _ = align_to_mean(landmarks, mean)
    logger.debug("%s: procrustes distance %.3f", entry.subject_id,
                 procrustes_distance(aligned, mean))

    warped = piecewise_affine_warp(gray, landmarks, mean, regions.size, regions.triangles)
    inside = warp_coverage(mean, regions.size, regions.triangles) >= 0
    wrinkles = combined_wrinkle_map(_fill_outside(warped, inside), config.filter_params)
    wrinkles[~inside] = 0.0
    peak = wrinkles.max()
    if peak > 0:
        wrinkles /= peak

    densities = region_densities(wrinkles, regions, config.threshold)
    record = DensityRecord(
        subject_id=entry.subject_id,
        age=entry.age,
        smoker=entry.smoker,
        region_density=tuple(float(v) for v in densities),
        face_density=face_density(wrinkles, regions, config.threshold),
    )
    if write_artifacts:
        subject_dir = config.out_dir / "subjects"
        levels = to_levels(wrinkles)
        write_png(subject_dir / f"{entry.subject_id}_warped.png", warped)
        write_png(subject_dir / f"{entry.subject_id}_wrinkles.png", levels)
        normals = relief.height_to_normal_map(levels, config.relief_weight, config.relief_scale)
        relief.write_normal_map(subject_dir / f"{entry.subject_id}_normal.png", normals,
                                config.relief_weight, config.relief_scale)
    return record


def _cohort_mean(entries, regions: RegionMap):
    shapes = []
    for entry in entries:
        try:
            shapes.append(_load_subject(entry)[1])
        except WrinkleMapError:
            continue
    if not shapes:
        return regions.canonical_landmarks
    return mean_shape(shapes, reference=regions.canonical_landmarks)


def run_pipeline(manifest, config: RunConfig) -> RunResult:
    """Process every subject (skipping failures) and write all outputs."""
    entries = parse_manifest(manifest) if not isinstance(manifest, list) else manifest
    regions = load_region_mask(config.mask_dir)
    mean = _cohort_mean(entries, regions) if config.recompute_mean else regions.canonical_landmarks
    config.out_dir.mkdir(parents=True, exist_ok=True)

    records, failures = [], []
    for entry in entries:
        try:
            records.append(process_subject(entry, mean, regions, config))
            logger.info("processed %s", entry.subject_id)
        except WrinkleMapError as exc:
            logger.error("skipping %s: %s", entry.subject_id, exc)
            failures.append((entry.subject_id, str(exc)))

    result = RunResult(records=records, failures=failures)
    result.paths["densities"] = config.out_dir / "densities.csv"
    write_densities_csv(result.paths["densities"], records)
    _write_failures(config.out_dir / "failures.csv", failures)
    if records:
        result.report = cohort_report(records, config.test)
        result.paths.update(write_report(config.out_dir, result.report,
                                         regions.region_names, failures))
    else:
        lines = ["no subject could be processed", ""]
        lines += [f"  {sid}: {msg}" for sid, msg in failures]
        (config.out_dir / "summary.txt").write_text("\n".join(lines) + "\n")
    return result


def _write_failures(path: Path, failures) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "error"])
        for sid, msg in sorted(failures):
            w.writerow([sid, msg])
