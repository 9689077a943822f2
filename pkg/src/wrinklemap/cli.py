"""Command-line entry point: ``wrinklemap run | filter | relief | synth``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import relief
from .cohortstats import TESTS
from .errors import WrinkleMapError
from .hhf import DEFAULT_SIGMA, DEFAULT_THRESHOLD, FilterParams, combined_wrinkle_map, to_levels
from .imagecore import read_image, to_grayscale, write_png

logger = logging.getLogger("wrinklemap")


def _add_filter_args(p):
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA,
                   help="Gaussian smoothing scale in pixels (default: %(default)s)")


def _add_relief_args(p):
    p.add_argument("--relief-weight", type=float, default=relief.DEFAULT_WEIGHT,
                   help="signed normal-map weight; negative carves furrows (default: %(default)s)")
    p.add_argument("--relief-scale", type=float, default=relief.DEFAULT_INTENSITY_SCALE,
                   help="fraction of the wrinkle intensity used as height (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wrinklemap",
                                     description="Facial wrinkle maps and cohort statistics.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="more logging (-v info, -vv debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="process a manifest of subjects and write the cohort report")
    run.add_argument("--manifest", required=True, type=Path,
                     help="CSV with header subject_id,image,landmarks,age,smoker")
    run.add_argument("--mask", type=Path, default=None,
                     help="mask asset directory (regions.png + mask.json); default: bundled asset")
    run.add_argument("--out", required=True, type=Path, help="output directory")
    _add_filter_args(run)
    run.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD,
                     help="wrinkle threshold on the normalized map (default: %(default)s)")
    run.add_argument("--test", choices=TESTS, default="mann-whitney",
                     help="smoker vs non-smoker test (default: %(default)s)")
    _add_relief_args(run)
    run.add_argument("--recompute-mean", action="store_true",
                     help="use the cohort's Procrustes mean shape instead of the mask's")

    flt = sub.add_parser("filter", help="wrinkle map of a single image (no alignment)")
    flt.add_argument("image", type=Path)
    flt.add_argument("--out", required=True, type=Path, help="output PNG (0-255 response)")
    _add_filter_args(flt)

    rel = sub.add_parser("relief", help="normal map from a wrinkle-map PNG")
    rel.add_argument("wrinkle_png", type=Path)
    rel.add_argument("--out", required=True, type=Path, help="output PNG; a .json sidecar is added")
    rel.add_argument("--weight", type=float, default=relief.DEFAULT_WEIGHT,
                     help="signed normal-map weight (default: %(default)s)")
    rel.add_argument("--scale", type=float, default=relief.DEFAULT_INTENSITY_SCALE,
                     help="intensity scale in [0, 1] (default: %(default)s)")

    syn = sub.add_parser("synth", help="render a matched synthetic smoker/non-smoker cohort")
    syn.add_argument("--out", required=True, type=Path, help="output directory")
    syn.add_argument("--seed", type=int, default=2017, help="random seed (default: %(default)s)")
    return parser


def _run(args) -> int:
    from .pipeline import RunConfig, run_pipeline

    config = RunConfig(out_dir=args.out, mask_dir=args.mask, sigma=args.sigma,
                       threshold=args.threshold, test=args.test,
                       relief_weight=args.relief_weight, relief_scale=args.relief_scale,
                       recompute_mean=args.recompute_mean)
    result = run_pipeline(args.manifest, config)
    print(f"{len(result.records)} subject(s) processed, {len(result.failures)} skipped; "
          f"outputs in {args.out}")
    for sid, msg in result.failures:
        print(f"  skipped {sid}: {msg}", file=sys.stderr)
    return result.exit_code


def _filter(args) -> int:
    gray = to_grayscale(read_image(args.image))
    wrinkles = combined_wrinkle_map(gray, FilterParams(sigma=args.sigma))
    write_png(args.out, to_levels(wrinkles))
    return 0


def _relief(args) -> int:
    levels = to_grayscale(read_image(args.wrinkle_png))
    normals = relief.height_to_normal_map(levels, args.weight, args.scale)
    relief.write_normal_map(args.out, normals, args.weight, args.scale)
    return 0


def _synth(args) -> int:
    from .synthetic import matched_cohort, write_cohort

    manifest = write_cohort(args.out, matched_cohort(seed=args.seed))
    print(f"manifest written to {manifest}")
    return 0


COMMANDS = {"run": _run, "filter": _filter, "relief": _relief, "synth": _synth}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (WrinkleMapError, OSError) as exc:
        print(f"wrinklemap: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
