"""End-to-end command-line runs on small synthetic datasets."""

import json

import pytest

from archaug.cli import main
from archaug.data_io import load_jsonl, load_model, write_jsonl


@pytest.fixture(scope="module")
def data_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "synthetic.jsonl"
    rc = main(["gen-synthetic", "--space", "synthetic", "-n", "40",
               "--seed", "5", "--noise", "0.0", "-o", str(path)])
    assert rc == 0
    return path


@pytest.fixture(scope="module")
def model_file(tmp_path_factory, data_file):
    path = tmp_path_factory.mktemp("model") / "model.json"
    rc = main(["train", str(data_file), "--model", "rf", "--augment", "on",
               "--scheme", "onehot", "--seed", "3", "-o", str(path)])
    assert rc == 0
    return path


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


class TestGenSynthetic:
    def test_writes_requested_count(self, data_file):
        assert len(load_jsonl(data_file)) == 40

    def test_manifest_written(self, data_file):
        doc = read_json(f"{data_file}.manifest.json")
        assert doc["command"] == "gen-synthetic"
        assert doc["seed"] == 5
        assert doc["outputs"] == [str(data_file)]
        assert "total_s" in doc["timings"]

    def test_deterministic_rerun(self, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (a, b):
            assert main(["gen-synthetic", "-n", "10", "--seed", "9",
                         "-o", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestAugment:
    def test_full_expansion_factor(self, data_file, tmp_path, capsys):
        out = tmp_path / "aug.jsonl"
        assert main(["augment", str(data_file), "--seed", "1", "-o", str(out)]) == 0
        rows = load_jsonl(out)
        assert len(rows) == 40 * 120
        assert "x120" in capsys.readouterr().out

    def test_limit_zero_is_passthrough(self, data_file, tmp_path):
        out = tmp_path / "copy.jsonl"
        assert main(["augment", str(data_file), "--limit", "0", "-o", str(out)]) == 0
        assert out.read_bytes() == data_file.read_bytes()

    def test_limit_counts_added_forms(self, data_file, tmp_path):
        out = tmp_path / "aug30.jsonl"
        assert main(["augment", str(data_file), "--limit", "30", "--seed", "2",
                     "-o", str(out)]) == 0
        assert len(load_jsonl(out)) == 40 * 31

    def test_rows_keep_source_label(self, data_file, tmp_path):
        out = tmp_path / "aug.jsonl"
        assert main(["augment", str(data_file), "--limit", "5", "-o", str(out)]) == 0
        originals = {r.id: r for r in load_jsonl(data_file)}
        for row in load_jsonl(out):
            src = originals[row.id.split("#")[0]]
            assert row.val_acc == src.val_acc

    def test_space_mismatch_fails(self, data_file, tmp_path, capsys):
        out = tmp_path / "x.jsonl"
        rc = main(["augment", str(data_file), "--space", "nb201", "-o", str(out)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestTrain:
    def test_model_file_and_manifest(self, model_file):
        model, extras = load_model(model_file, with_extras=True)
        assert extras["scheme"] == "onehot"
        assert extras["augment"] == "on"
        assert extras["space"] == "synthetic"
        doc = read_json(f"{model_file}.manifest.json")
        assert doc["command"] == "train"
        assert list(doc["inputs"])  # input hash recorded

    def test_rerun_is_byte_identical(self, data_file, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = [str(data_file), "--model", "rf", "--augment", "off",
                "--scheme", "hard", "--seed", "7"]
        for out in (a, b):
            assert main(["train", *args, "-o", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_prints_training_size(self, data_file, tmp_path, capsys):
        out = tmp_path / "m.json"
        assert main(["train", str(data_file), "--augment", "off",
                     "--seed", "1", "-o", str(out)]) == 0
        assert "40 rows x 51 features" in capsys.readouterr().out

    def test_augment_flag_changes_rows_not_width(self, data_file, tmp_path, capsys):
        out = tmp_path / "m.json"
        assert main(["train", str(data_file), "--augment", "on",
                     "--seed", "1", "-o", str(out)]) == 0
        assert "4800 rows x 51 features" in capsys.readouterr().out

    def test_pre_augmented_file_trains_without_reaugmenting(
        self, data_file, tmp_path, capsys
    ):
        aug = tmp_path / "aug.jsonl"
        assert main(["augment", str(data_file), "--limit", "3", "-o", str(aug)]) == 0
        out = tmp_path / "m.json"
        assert main(["train", str(aug), "--augment", "off",
                     "--seed", "1", "-o", str(out)]) == 0
        assert "160 rows x 51 features" in capsys.readouterr().out

    def test_baseline_models(self, data_file, tmp_path):
        for kind in ("linear", "knn"):
            out = tmp_path / f"{kind}.json"
            assert main(["train", str(data_file), "--model", kind,
                         "--augment", "off", "--seed", "1", "-o", str(out)]) == 0
            assert load_model(out).n_features == 51


class TestEval:
    def test_report_fields(self, model_file, data_file, tmp_path):
        report = tmp_path / "report.json"
        assert main(["eval", str(model_file), str(data_file),
                     "-o", str(report)]) == 0
        doc = read_json(report)
        assert set(doc) == {"ktau", "mse", "n"}
        assert doc["n"] == 40
        assert -1.0 <= doc["ktau"] <= 1.0

    def test_rank_csv(self, model_file, data_file, tmp_path):
        report = tmp_path / "report.json"
        ranks = tmp_path / "ranks.csv"
        assert main(["eval", str(model_file), str(data_file), "-o", str(report),
                     "--ranks", str(ranks)]) == 0
        lines = ranks.read_text().splitlines()
        assert lines[0] == "true_rank,predicted_rank"
        assert len(lines) == 41

    def test_identical_rerun(self, model_file, data_file, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert main(["eval", str(model_file), str(data_file),
                         "-o", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_memorized_training_data_scores_high(self, data_file, tmp_path):
        # memorizing predictor on its own training rows: near-perfect order
        model = tmp_path / "m.json"
        report = tmp_path / "r.json"
        assert main(["train", str(data_file), "--model", "knn", "--knn-k", "1",
                     "--augment", "off", "--seed", "1", "-o", str(model)]) == 0
        assert main(["eval", str(model), str(data_file), "-o", str(report)]) == 0
        assert read_json(report)["ktau"] > 0.99


class TestSearch:
    def test_result_document(self, model_file, tmp_path):
        out = tmp_path / "result.json"
        assert main(["search", str(model_file), "--space", "synthetic",
                     "--population", "20", "--cycles", "30", "--tournament", "4",
                     "--top-k", "5", "--seed", "2", "-o", str(out)]) == 0
        doc = read_json(out)
        assert len(doc["selected"]) == 5
        assert doc["evaluations"] == 50
        assert len(doc["history"]) == 30
        scores = [e["score"] for e in doc["selected"]]
        assert scores == sorted(scores, reverse=True)
        assert "ground_truth" not in doc

    def test_ground_truth_requires_covering_dataset(
        self, model_file, data_file, tmp_path, capsys
    ):
        # 40 records cannot cover the whole space, so the lookup must fail
        out = tmp_path / "result.json"
        rc = main(["search", str(model_file), "--space", "synthetic",
                   "--population", "20", "--cycles", "30", "--tournament", "4",
                   "--top-k", "5", "--seed", "2", "--ground-truth",
                   str(data_file), "-o", str(out)])
        assert rc == 1
        assert "not in the dataset" in capsys.readouterr().err

    def test_seeded_rerun_identical(self, model_file, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["--space", "synthetic", "--population", "15", "--cycles", "20",
                "--tournament", "3", "--top-k", "3", "--seed", "8"]
        for out in (a, b):
            assert main(["search", str(model_file), *args, "-o", str(out)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_space_mismatch_rejected(self, model_file, tmp_path, capsys):
        out = tmp_path / "r.json"
        rc = main(["search", str(model_file), "--space", "nb101", "-o", str(out)])
        assert rc == 1
        assert "trained on space" in capsys.readouterr().err


class TestErrors:
    def test_missing_input_file(self, tmp_path, capsys):
        rc = main(["augment", str(tmp_path / "absent.jsonl"),
                   "-o", str(tmp_path / "out.jsonl")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_model_file(self, data_file, tmp_path, capsys):
        bogus = tmp_path / "bogus.json"
        bogus.write_text("{}\n")
        rc = main(["eval", str(bogus), str(data_file),
                   "-o", str(tmp_path / "r.json")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_mixed_spaces_rejected(self, data_file, tmp_path, capsys):
        records = load_jsonl(data_file)
        from dataclasses import replace

        mixed = [records[0], replace(records[1], space="nb101")]
        path = tmp_path / "mixed.jsonl"
        write_jsonl(mixed, path)
        rc = main(["augment", str(path), "-o", str(tmp_path / "out.jsonl")])
        assert rc == 1
        assert "mix" in capsys.readouterr().err
