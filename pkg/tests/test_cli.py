import json
import re
from pathlib import Path

import pytest

from appkeep.cli import main


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "apps.csv"
    assert main(["gen-data", "--n", "400", "--seed", "1", "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def model_file(tmp_path_factory, data_csv) -> Path:
    path = tmp_path_factory.mktemp("model") / "m.json"
    code = main(
        [
            "train",
            "--in",
            str(data_csv),
            "--model-out",
            str(path),
            "--variant",
            "developer",
            "--classifiers",
            "2",
            "--subset-size",
            "160",
            "--seed",
            "7",
        ]
    )
    assert code == 0
    return path


def strip_timestamp(text: str) -> str:
    return re.sub(r'"created_at": "[^"]*"', '"created_at": ""', text)


class TestGenData:
    def test_same_seed_identical_files(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run(capsys, "gen-data", "--n", "50", "--seed", "3", "--out", str(a))
        run(capsys, "gen-data", "--n", "50", "--seed", "3", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_truth_file(self, tmp_path, capsys):
        out, truth = tmp_path / "d.csv", tmp_path / "t.csv"
        code, _, _ = run(
            capsys, "gen-data", "--n", "20", "--seed", "2", "--out", str(out), "--truth-out", str(truth)
        )
        assert code == 0
        lines = truth.read_text().strip().splitlines()
        assert lines[0] == "row,probability"
        assert len(lines) == 21


class TestTrain:
    def test_reports_validation_auc_and_threshold(self, data_csv, tmp_path, capsys):
        model = tmp_path / "m.json"
        code, out, err = run(
            capsys,
            "train",
            "--in",
            str(data_csv),
            "--model-out",
            str(model),
            "--classifiers",
            "2",
            "--subset-size",
            "120",
            "--seed",
            "3",
        )
        assert code == 0
        body = json.loads(out)
        assert 0.0 <= body["validation_auc"] <= 1.0
        assert 0.0 <= body["threshold"] <= 1.0
        assert model.exists()

    def test_developer_variant_defaults_to_one_classifier(self, data_csv, tmp_path, capsys):
        model = tmp_path / "one.json"
        code, out, _ = run(
            capsys,
            "train",
            "--in",
            str(data_csv),
            "--model-out",
            str(model),
            "--subset-size",
            "100",
            "--seed",
            "1",
        )
        assert code == 0
        assert json.loads(out)["n_classifiers"] == 1
        doc = json.loads(model.read_text())
        assert len(doc["members"]) == 1

    def test_missing_column_exits_2_naming_it(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("title,genre\nX,Casino\n")
        code, _, err = run(
            capsys, "train", "--in", str(bad), "--model-out", str(tmp_path / "m.json")
        )
        assert code == 2
        assert "description" in err

    def test_missing_file_exits_2(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "train", "--in", str(tmp_path / "nope.csv"), "--model-out", str(tmp_path / "m.json")
        )
        assert code == 2

    def test_same_seed_byte_identical_models_modulo_timestamp(self, data_csv, tmp_path, capsys):
        m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
        args = ["--in", str(data_csv), "--classifiers", "2", "--subset-size", "100", "--seed", "5"]
        run(capsys, "train", *args, "--model-out", str(m1))
        run(capsys, "train", *args, "--model-out", str(m2))
        assert strip_timestamp(m1.read_text()) == strip_timestamp(m2.read_text())

    def test_jobs_level_does_not_change_model(self, data_csv, tmp_path, capsys):
        m1, m2 = tmp_path / "j1.json", tmp_path / "j4.json"
        args = ["--in", str(data_csv), "--classifiers", "3", "--subset-size", "80", "--seed", "9"]
        run(capsys, "train", *args, "--model-out", str(m1), "--jobs", "1")
        run(capsys, "train", *args, "--model-out", str(m2), "--jobs", "4")
        assert strip_timestamp(m1.read_text()) == strip_timestamp(m2.read_text())

    def test_drop_report_written(self, data_csv, tmp_path, capsys):
        report = tmp_path / "drops.csv"
        run(
            capsys,
            "train",
            "--in",
            str(data_csv),
            "--model-out",
            str(tmp_path / "m.json"),
            "--classifiers",
            "1",
            "--subset-size",
            "80",
            "--drop-report",
            str(report),
        )
        assert report.read_text().splitlines()[0] == "row,reason"


class TestEvaluate:
    def test_report_and_roc_csv(self, data_csv, model_file, tmp_path, capsys):
        roc = tmp_path / "roc.csv"
        code, out, err = run(
            capsys,
            "evaluate",
            "--model",
            str(model_file),
            "--in",
            str(data_csv),
            "--roc-out",
            str(roc),
        )
        assert code == 0
        body = json.loads(out)
        assert 0.0 <= body["auc"] <= 1.0
        assert "confusion" in body
        header = roc.read_text().splitlines()[0]
        assert header == "threshold,fpr,tpr"

    def test_missing_model_exits_2(self, data_csv, tmp_path, capsys):
        code, _, err = run(
            capsys, "evaluate", "--model", str(tmp_path / "no.json"), "--in", str(data_csv)
        )
        assert code == 2


class TestPredictCommand:
    def test_json_input(self, model_file, tmp_path, capsys):
        app = tmp_path / "one_app.json"
        app.write_text(json.dumps({"title": "X", "genre": "Casino", "content_rating": "Teen"}))
        code, out, _ = run(capsys, "predict", "--model", str(model_file), "--in", str(app))
        assert code == 0
        body = json.loads(out)
        assert 0.0 < body["score"] < 1.0
        assert body["label"] in ("Removed", "Stable")

    def test_unknown_attribute_exits_2(self, model_file, tmp_path, capsys):
        app = tmp_path / "bad_app.json"
        app.write_text(json.dumps({"nope": 1}))
        code, _, err = run(capsys, "predict", "--model", str(model_file), "--in", str(app))
        assert code == 2

    def test_csv_input(self, model_file, data_csv, capsys):
        code, out, _ = run(capsys, "predict", "--model", str(model_file), "--in", str(data_csv))
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "row,score,label"
        assert len(lines) == 401


class TestFlagsFile:
    def test_at_file_expands_to_flags(self, data_csv, model_file, tmp_path, capsys):
        flags = tmp_path / "flags.txt"
        flags.write_text(f"evaluate\n--model\n{model_file}\n--in\n{data_csv}\n")
        code, out, _ = run(capsys, f"@{flags}")
        assert code == 0
        assert 0.0 <= json.loads(out)["auc"] <= 1.0


class TestImportanceCommand:
    def test_normalized_ranking(self, model_file, capsys):
        code, out, _ = run(capsys, "importance", "--model", str(model_file))
        assert code == 0
        entries = json.loads(out)
        assert sum(e["score"] for e in entries) == pytest.approx(1.0, abs=1e-9)
        scores = [e["score"] for e in entries]
        assert scores == sorted(scores, reverse=True)


class TestGrid:
    def test_small_grid(self, data_csv, capsys):
        code, out, err = run(
            capsys,
            "grid",
            "--in",
            str(data_csv),
            "--classifiers",
            "1,2",
            "--sizes",
            "60,120",
            "--seed",
            "2",
        )
        assert code == 0
        cells = json.loads(out)
        assert len(cells) == 4
        assert {(c["n_classifiers"], c["subset_size"]) for c in cells} == {
            (1, 60),
            (1, 120),
            (2, 60),
            (2, 120),
        }
        assert "subset_size" in err
