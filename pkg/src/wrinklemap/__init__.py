"""Facial wrinkle assessment: ridge filtering, face alignment, region
densities, cohort statistics and normal-map export."""

from .errors import (CorruptAssetError, DegenerateGeometryError, DegenerateShapeError,
                     InvalidInputError, ManifestError, OutOfRangeError,
                     UndefinedCorrelationError, WrinkleMapError)
from .hhf import FilterParams, Orientation, combined_wrinkle_map, hhf_response
from .regions import DensityRecord, RegionMap, load_region_mask

__version__ = "0.1.0"

__all__ = [
    "CorruptAssetError", "DegenerateGeometryError", "DegenerateShapeError",
    "InvalidInputError", "ManifestError", "OutOfRangeError", "UndefinedCorrelationError",
    "WrinkleMapError", "FilterParams", "Orientation", "combined_wrinkle_map",
    "hhf_response", "DensityRecord", "RegionMap", "load_region_mask",
]
