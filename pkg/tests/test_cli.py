import csv
import json

import pytest

from twocover.cli import CATEGORIES, ExperimentConfig, category_counts, main, run_batch

WORKED = "--moduli=17,35,-7,3,-9,9"
CONTACT_CURVE = "--moduli=5,6,4,5,-1,-5"


@pytest.fixture(scope="module")
def worked_bundle(tmp_path_factory):
    path = tmp_path_factory.mktemp("bundle") / "worked.json"
    assert main(["generate", WORKED, "--out", str(path)]) == 0
    return path


def test_generate_is_deterministic(worked_bundle, tmp_path):
    again = tmp_path / "again.json"
    assert main(["generate", WORKED, "--out", str(again)]) == 0
    assert again.read_bytes() == worked_bundle.read_bytes()
    data = json.loads(worked_bundle.read_text())
    assert len(data["bitangents"]) == 28
    assert len(data["syzygies"]) == 315


def test_generate_rejects_collinear_input(capsys):
    assert main(["generate", "--moduli=2,0,3,7,5,-1"]) == 1
    assert "collinear p1,p3,p5" in capsys.readouterr().err


def test_descent_on_worked_bundle(worked_bundle, tmp_path):
    out = tmp_path / "report.json"
    assert main(["descent", "--bundle", str(worked_bundle), "--filter-bound", "5", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["conclusion"] == "NoRationalPoint"
    assert report["jacSelmer"] == {"dim": 9, "exact": True}


def test_descent_finds_contact_point(tmp_path):
    bundle = tmp_path / "c.json"
    assert main(["generate", CONTACT_CURVE, "--out", str(bundle)]) == 0
    out = tmp_path / "r.json"
    assert main(["descent", "--bundle", str(bundle), "--height", "0", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["conclusion"] == "HasRationalPoint"


def test_corrupt_bundles_are_rejected(worked_bundle, tmp_path, capsys):
    data = json.loads(worked_bundle.read_text())
    del data["bitangents"]["01"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    assert main(["descent", "--bundle", str(bad)]) == 1
    assert "schema" in capsys.readouterr().err

    data = json.loads(worked_bundle.read_text())
    data["contacts"]["01"]["a"] = "12345"
    bad.write_text(json.dumps(data))
    assert main(["descent", "--bundle", str(bad)]) == 1
    assert "disagrees" in capsys.readouterr().err

    bad.write_text("{not json")
    assert main(["pointsearch", "--bundle", str(bad)]) == 1


def test_smallfields(capsys):
    assert main(["smallfields", "--q", "7"]) == 0
    assert json.loads(capsys.readouterr().out)["completions"] == 0
    assert main(["smallfields", "--q", "9"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert (out["completions"], out["points"]) == (40, 28)


def test_pointsearch_zero_height(worked_bundle, capsys):
    assert main(["pointsearch", "--bundle", str(worked_bundle), "--height", "0"]) == 0
    assert json.loads(capsys.readouterr().out)["points"] == []


def test_batch_is_deterministic_and_resumable(tmp_path):
    config = ExperimentConfig(coord_range=6, samples=3, seed=5, height=30, out_dir=str(tmp_path / "a"))
    results, text = run_batch(config)
    assert sum(category_counts(results).values()) == 3
    assert all(r["category"] in CATEGORIES for r in results)
    rows = list(csv.DictReader(text.splitlines()))
    assert [r["seed"] for r in rows] == ["5"] * 3

    # a fresh run reproduces the CSV byte for byte
    fresh = ExperimentConfig(coord_range=6, samples=3, seed=5, height=30, out_dir=str(tmp_path / "b"))
    assert run_batch(fresh)[1] == text
    # a resumed run reuses the per-curve files
    (tmp_path / "a" / "curves" / "curve-00001.json").unlink()
    assert run_batch(config)[1] == text


def test_experiment_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(coord_range=0, samples=1, seed=0)
