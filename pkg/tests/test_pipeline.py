import csv
import json

import numpy as np
import pytest

from wrinklemap import cli, synthetic
from wrinklemap.errors import ManifestError
from wrinklemap.imagecore import read_image, write_png
from wrinklemap.pipeline import ManifestEntry, RunConfig, parse_manifest, process_subject, run_pipeline
from wrinklemap.shapealign import SimilarityTransform, save_landmarks

HEADER = "subject_id,image,landmarks,age,smoker\n"


def write_manifest(path, rows):
    path.write_text(HEADER + "".join(r + "\n" for r in rows))
    return path


def test_parse_row(tmp_path):
    m = write_manifest(tmp_path / "m.csv", ["s01,img/s01.png,lm/s01.json,48,true",
                                             "s02,img/s02.png,lm/s02.json,30,No"])
    entries = parse_manifest(m)
    assert entries[0] == ManifestEntry("s01", tmp_path / "img/s01.png", tmp_path / "lm/s01.json",
                                       48.0, True)
    assert entries[1].smoker is False


@pytest.mark.parametrize("flag,value", [("TRUE", True), ("1", True), ("yes", True),
                                        ("False", False), ("0", False), ("no", False)])
def test_smoker_flags(tmp_path, flag, value):
    m = write_manifest(tmp_path / "m.csv", [f"s,i.png,l.json,40,{flag}"])
    assert parse_manifest(m)[0].smoker is value


def test_duplicate_id(tmp_path):
    m = write_manifest(tmp_path / "m.csv", ["s01,a.png,a.json,40,true", "s01,b.png,b.json,41,false"])
    with pytest.raises(ManifestError, match="s01"):
        parse_manifest(m)


def test_underage_row(tmp_path):
    m = write_manifest(tmp_path / "m.csv", ["s01,a.png,a.json,40,true", "s02,b.png,b.json,17,false"])
    with pytest.raises(ManifestError, match="line 3"):
        parse_manifest(m)


@pytest.mark.parametrize("row", ["s01,a.png,a.json,forty,true", "s01,a.png,a.json,40,maybe",
                                 "s01,a.png,40,true"])
def test_unparseable_row(tmp_path, row):
    with pytest.raises(ManifestError, match="line 2"):
        parse_manifest(write_manifest(tmp_path / "m.csv", [row]))


def test_empty_manifest(tmp_path):
    with pytest.raises(ManifestError):
        parse_manifest(write_manifest(tmp_path / "m.csv", []))
    (tmp_path / "e.csv").write_text("")
    with pytest.raises(ManifestError):
        parse_manifest(tmp_path / "e.csv")


def flat_subject(tmp_path, regions, furrows=(), name="flat"):
    """Uniform skin in the canonical frame, optionally with furrows."""
    h, w = regions.labels.shape
    y, x = np.mgrid[0:h, 0:w].astype(float)
    img = 190.0 - synthetic.furrow_darkness(x, y, furrows)
    write_png(tmp_path / f"{name}.png", np.repeat(img[..., None], 3, axis=2))
    save_landmarks(tmp_path / f"{name}.json", regions.canonical_landmarks)
    return ManifestEntry(name, tmp_path / f"{name}.png", tmp_path / f"{name}.json", 50, False)


def test_flat_face_has_no_wrinkles(tmp_path, regions):
    entry = flat_subject(tmp_path, regions)
    rec = process_subject(entry, regions.canonical_landmarks, regions, RunConfig(tmp_path / "out"))
    assert rec.face_density == 0 and not any(rec.region_density)


def test_furrow_lands_in_its_region(tmp_path, regions):
    rng = np.random.default_rng(18)
    allowed = synthetic.eroded_region(regions, 7, 7.0)
    furrow = synthetic.place_furrow(allowed, rng, 24.0, angle=np.arctan2(64, -24))
    entry = flat_subject(tmp_path, regions, [furrow], "groove")
    rec = process_subject(entry, regions.canonical_landmarks, regions, RunConfig(tmp_path / "out"))
    d = rec.region_density
    assert d[6] > 0
    assert all(d[6] > v for i, v in enumerate(d) if i != 6)
    assert abs(sum(d) - rec.face_density) < 1e-9


def test_process_subject_is_deterministic(tmp_path, regions):
    subject = synthetic.matched_cohort(regions, ages=(60,))[1]
    rgb, lm = synthetic.render_subject(subject.furrows, subject.pose)
    write_png(tmp_path / "s.png", rgb)
    save_landmarks(tmp_path / "s.json", lm)
    entry = ManifestEntry("s", tmp_path / "s.png", tmp_path / "s.json", 60, True)
    outs = []
    for run in ("a", "b"):
        rec = process_subject(entry, regions.canonical_landmarks, regions, RunConfig(tmp_path / run))
        files = {p.name: p.read_bytes() for p in sorted((tmp_path / run / "subjects").iterdir())}
        outs.append((rec, files))
    assert outs[0] == outs[1]
    assert set(outs[0][1]) == {"s_warped.png", "s_wrinkles.png", "s_normal.png", "s_normal.json"}


def test_pose_invariance(tmp_path, regions):
    # the same face seen under two poses yields nearly the same densities
    subject = synthetic.matched_cohort(regions, ages=(70,))[0]
    recs = []
    for i, pose in enumerate([SimilarityTransform(1.0, 0.0, (20.0, 20.0)),
                              SimilarityTransform(0.93, 0.08, (45.0, 10.0))]):
        rgb, lm = synthetic.render_subject(subject.furrows, pose)
        write_png(tmp_path / f"{i}.png", rgb)
        save_landmarks(tmp_path / f"{i}.json", lm)
        entry = ManifestEntry(str(i), tmp_path / f"{i}.png", tmp_path / f"{i}.json", 70, False)
        recs.append(process_subject(entry, regions.canonical_landmarks, regions,
                                    RunConfig(tmp_path / "o"), write_artifacts=False))
    assert abs(recs[0].face_density - recs[1].face_density) < 0.2 * recs[0].face_density


def test_single_subject_run(tmp_path, regions):
    flat_subject(tmp_path, regions, name="one")
    m = write_manifest(tmp_path / "m.csv", ["one,one.png,one.json,33,true"])
    result = run_pipeline(m, RunConfig(tmp_path / "out"))
    assert result.exit_code == 0
    rows = list(csv.reader(open(tmp_path / "out" / "densities.csv")))
    assert len(rows) == 2 and rows[1][0] == "one"
    groups = list(csv.DictReader(open(tmp_path / "out" / "report_groups.csv")))
    populated = [g for g in groups if g["overall_average"] != ""]
    assert len(populated) == 1 and populated[0]["age_group"] == "28-37"
    assert populated[0]["nonsmoker_average"] == ""
    for name in ("report_regions.csv", "summary.txt", "figures/density_by_age.png",
                 "figures/region_comparison.png"):
        assert (tmp_path / "out" / name).exists()


def test_all_missing_images(tmp_path):
    m = write_manifest(tmp_path / "m.csv", ["a,nope.png,nope.json,40,true",
                                             "b,gone.png,gone.json,50,false"])
    result = run_pipeline(m, RunConfig(tmp_path / "out"))
    assert result.exit_code != 0
    rows = list(csv.reader(open(tmp_path / "out" / "densities.csv")))
    assert len(rows) == 1
    assert [f[0] for f in result.failures] == ["a", "b"]
    summary = (tmp_path / "out" / "summary.txt").read_text()
    assert "a:" in summary and "b:" in summary


def test_bad_subject_is_skipped(tmp_path, regions):
    flat_subject(tmp_path, regions, name="good")
    (tmp_path / "short.json").write_text(json.dumps([[1, 2]] * 80))
    write_png(tmp_path / "short.png", np.zeros((10, 10, 3), np.uint8))
    m = write_manifest(tmp_path / "m.csv", ["good,good.png,good.json,40,true",
                                             "short,short.png,short.json,50,false"])
    result = run_pipeline(m, RunConfig(tmp_path / "out"))
    assert [r.subject_id for r in result.records] == ["good"]
    assert result.failures[0][0] == "short" and "88" in result.failures[0][1]
    assert "short" in (tmp_path / "out" / "failures.csv").read_text()


def test_subject_isolation(tmp_path, regions):
    subjects = synthetic.matched_cohort(regions, ages=(30, 70))
    manifest = synthetic.write_cohort(tmp_path / "cohort", subjects)
    full = run_pipeline(manifest, RunConfig(tmp_path / "full")).records
    lines = manifest.read_text().splitlines()
    manifest.write_text("\n".join(lines[:2]) + "\n")
    alone = run_pipeline(manifest, RunConfig(tmp_path / "alone")).records
    assert alone[0] == next(r for r in full if r.subject_id == alone[0].subject_id)


def test_recompute_mean(tmp_path, regions):
    subjects = synthetic.matched_cohort(regions, ages=(40, 60))
    manifest = synthetic.write_cohort(tmp_path / "cohort", subjects)
    result = run_pipeline(manifest, RunConfig(tmp_path / "out", recompute_mean=True))
    assert len(result.records) == 4 and not result.failures


def test_cli_filter_and_relief(tmp_path, regions):
    entry = flat_subject(tmp_path, regions, [synthetic.Furrow((100.0, 60.0), (220.0, 62.0))], "f")
    assert cli.main(["filter", str(entry.image_path), "--out", str(tmp_path / "w.png")]) == 0
    w = read_image(tmp_path / "w.png")
    assert w.ndim == 2 and w.max() == 255
    assert cli.main(["relief", str(tmp_path / "w.png"), "--out", str(tmp_path / "n.png")]) == 0
    n = read_image(tmp_path / "n.png")
    assert n.shape == w.shape + (3,)
    assert json.loads((tmp_path / "n.json").read_text())["weight"] == -1.0


def test_cli_run_exit_codes(tmp_path, regions, capsys):
    flat_subject(tmp_path, regions, name="one")
    good = write_manifest(tmp_path / "good.csv", ["one,one.png,one.json,33,true"])
    bad = write_manifest(tmp_path / "bad.csv", ["x,none.png,none.json,33,true"])
    assert cli.main(["run", "--manifest", str(good), "--out", str(tmp_path / "o1"),
                     "--sigma", "1.5", "--threshold", "0.4", "--test", "welch"]) == 0
    assert cli.main(["run", "--manifest", str(bad), "--out", str(tmp_path / "o2")]) == 1
    assert cli.main(["run", "--manifest", str(tmp_path / "missing.csv"),
                     "--out", str(tmp_path / "o3")]) == 2


def test_cli_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        cli.main(["run", "--help"])
    text = capsys.readouterr().out
    for flag in ("--manifest", "--mask", "--sigma", "--threshold", "--test",
                 "--relief-weight", "--relief-scale", "--recompute-mean"):
        assert flag in text
    assert "default: 2.0" in text and "default: 0.3" in text
