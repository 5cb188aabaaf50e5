import json
import shutil
import subprocess

import numpy as np
import pytest

from emgds.cli import main
from emgds.features import read_features_csv


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Corpus + features produced through the CLI itself."""
    root = tmp_path_factory.mktemp("cli")
    corpus = str(root / "corpus.csv")
    feats = str(root / "features.csv")
    assert main(["synth", "--out", corpus, "--subjects", "2", "--reps", "6",
                 "--rate", "500", "--duration", "1", "--seed", "7"]) == 0
    assert main(["features", "--in", corpus, "--out", feats]) == 0
    return root


def test_synth_counts_and_determinism(tmp_path, capsys):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["--subjects", "2", "--reps", "4", "--rate", "500", "--duration", "1",
            "--seed", "7"]
    assert main(["synth", "--out", str(out1)] + args) == 0
    printed = capsys.readouterr().out
    assert "48 recordings" in printed
    assert "24000 rows" in printed
    assert main(["synth", "--out", str(out2)] + args) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_synth_reps_guard_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--out", str(tmp_path / "x.csv"), "--reps", "1"])
    assert exc.value.code == 2


def test_features_column_counts(workdir, tmp_path):
    corpus = str(workdir / "corpus.csv")
    out = tmp_path / "f.csv"
    assert main(["features", "--in", corpus, "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0].split(",")
    assert len(header) == 4 + 22
    rows = read_features_csv(out)
    assert len(rows) == 2 * 6 * 6
    out2 = tmp_path / "f2.csv"
    assert main(["features", "--in", corpus, "--out", str(out2),
                 "--ar-order", "2"]) == 0
    header2 = out2.read_text().splitlines()[0].split(",")
    assert len(header2) == 4 + 18


def test_features_sliding_window(workdir, tmp_path):
    corpus = str(workdir / "corpus.csv")
    out = tmp_path / "sliding.csv"
    assert main(["features", "--in", corpus, "--out", str(out),
                 "--window", "sliding:200:100"]) == 0
    rows = read_features_csv(out)
    # 500 samples -> windows at offsets 0, 100, 200, 300 per recording
    assert len(rows) == 2 * 6 * 6 * 4
    assert {r.window_index for r in rows} == {0, 1, 2, 3}
    with pytest.raises(SystemExit) as exc:
        main(["features", "--in", corpus, "--out", str(out), "--window", "sliding:x"])
    assert exc.value.code == 2


def test_features_corrupt_csv_exit1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("subject,activity,repetition,sample_index,ch1,ch2\n"
                   "s1,P,1,0,0.1,0.2\n"
                   "s1,P,1,not-an-int,0.3,0.4\n")
    code = main(["features", "--in", str(bad), "--out", str(tmp_path / "o.csv")])
    assert code == 1
    err = capsys.readouterr().err
    assert ":3:" in err  # line-numbered diagnostic


def test_train_dual_model_schema(workdir, tmp_path):
    feats = str(workdir / "features.csv")
    model_path = tmp_path / "dual.json"
    assert main(["train", "--features", feats, "--mode", "dual",
                 "--model", str(model_path), "--seed", "5"]) == 0
    doc = json.loads(model_path.read_text())
    assert doc["mode"] == "dual"
    assert doc["format_version"] == 1
    for key in ("stage1", "stage2_power", "stage2_precision"):
        assert "pca" in doc[key] and "svm" in doc[key]
    assert doc["split"]["protocol"] == "holdout"
    report = json.loads((tmp_path / "dual.json.train.json").read_text())
    assert report["kind"] == "train-report"
    assert 0.0 <= report["training_accuracy"] <= 1.0
    assert report["config"]["seed"] == 5


def test_train_pca_dims_respected(workdir, tmp_path):
    feats = str(workdir / "features.csv")
    model_path = tmp_path / "single2.json"
    assert main(["train", "--features", feats, "--mode", "single",
                 "--model", str(model_path), "--pca-dims", "2"]) == 0
    doc = json.loads(model_path.read_text())
    assert len(doc["pca"]["eigenvalues"]) == 2


def test_train_subject_filter_echoed(workdir, tmp_path):
    feats = str(workdir / "features.csv")
    model_path = tmp_path / "s1.json"
    assert main(["train", "--features", feats, "--mode", "single",
                 "--model", str(model_path), "--subject", "subj1"]) == 0
    with open(str(model_path) + ".train.json") as fh:
        report = json.load(fh)
    assert report["config"]["subject"] == "subj1"
    assert report["n_train"] == 6 * 4  # one subject: floor(0.7*6)=4 reps per cell


def test_train_missing_class_exit1(workdir, tmp_path, capsys):
    rows = (workdir / "features.csv").read_text().splitlines()
    header, body = rows[0], rows[1:]
    filtered = [r for r in body if r.split(",")[1] != "T"]
    partial = tmp_path / "partial.csv"
    partial.write_text("\n".join([header] + filtered) + "\n")
    code = main(["train", "--features", str(partial), "--mode", "single",
                 "--model", str(tmp_path / "m.json")])
    assert code == 1
    assert "lacks" in capsys.readouterr().err


def test_train_split_kfold_exclusive(workdir, tmp_path):
    feats = str(workdir / "features.csv")
    with pytest.raises(SystemExit) as exc:
        main(["train", "--features", feats, "--mode", "single",
              "--model", str(tmp_path / "m.json"), "--split", "0.7",
              "--kfold", "3"])
    assert exc.value.code == 2


def test_train_kfold_and_evaluate(workdir, tmp_path, capsys):
    feats = str(workdir / "features.csv")
    model_path = tmp_path / "kf.json"
    assert main(["train", "--features", feats, "--mode", "single",
                 "--model", str(model_path), "--kfold", "3", "--seed", "2"]) == 0
    doc = json.loads(model_path.read_text())
    assert doc["split"] == {"protocol": "kfold", "k": 3, "fold": 0, "seed": 2,
                            "subject": None}
    capsys.readouterr()
    assert main(["evaluate", "--features", feats, "--model", str(model_path)]) == 0
    out = capsys.readouterr().out
    # 6 reps per cell, k=3 -> 2 reps per cell in fold 0: 2 subjects x 6 x 2
    assert "n_test=24" in out


def test_train_kernel_flags(workdir, tmp_path):
    feats = str(workdir / "features.csv")
    for extra, kind in ((["--kernel", "linear"], "linear"),
                        (["--kernel", "poly", "--degree", "2", "--coef0", "1.0"],
                         "poly"),
                        (["--kernel", "rbf", "--gamma", "0.25"], "rbf")):
        model_path = tmp_path / f"{kind}.json"
        assert main(["train", "--features", feats, "--mode", "single",
                     "--model", str(model_path)] + extra) == 0
        doc = json.loads(model_path.read_text())
        kernels = {m["kernel"]["kind"] for m in doc["svm"]["models"]}
        assert kernels == {kind}
    with pytest.raises(SystemExit) as exc:
        main(["train", "--features", feats, "--mode", "single",
              "--model", str(tmp_path / "g.json"), "--gamma", "nope"])
    assert exc.value.code == 2


def test_evaluate_and_compare(workdir, tmp_path, capsys):
    feats = str(workdir / "features.csv")
    single_path = str(tmp_path / "single.json")
    dual_path = str(tmp_path / "dual.json")
    assert main(["train", "--features", feats, "--mode", "single",
                 "--model", single_path, "--seed", "11"]) == 0
    assert main(["train", "--features", feats, "--mode", "dual",
                 "--model", dual_path, "--seed", "11"]) == 0
    capsys.readouterr()
    report_path = tmp_path / "report.json"
    assert main(["evaluate", "--features", feats, "--model", dual_path,
                 "--report", str(report_path), "--compare", single_path]) == 0
    out = capsys.readouterr().out
    assert "accuracy=" in out
    assert "single=" in out and "dual=" in out
    doc = json.loads(report_path.read_text())
    assert doc["mode"] == "dual"
    assert doc["format_version"] == 1
    conf = np.array(doc["confusion"])
    assert conf.sum() == doc["n_test"]
    assert doc["accuracy"] == np.trace(conf) / conf.sum()
    assert doc["class_order"] == ["P", "L", "T", "H", "S", "C"]
    assert doc["split"]["seed"] == 11


def test_evaluate_compare_same_mode_usage_error(workdir, tmp_path):
    feats = str(workdir / "features.csv")
    single_path = str(tmp_path / "s.json")
    assert main(["train", "--features", feats, "--mode", "single",
                 "--model", single_path, "--seed", "1"]) == 0
    with pytest.raises(SystemExit) as exc:
        main(["evaluate", "--features", feats, "--model", single_path,
              "--compare", single_path])
    assert exc.value.code == 2


def test_evaluate_tampered_model_exit1(workdir, tmp_path):
    feats = str(workdir / "features.csv")
    model_path = tmp_path / "m.json"
    assert main(["train", "--features", feats, "--mode", "single",
                 "--model", str(model_path), "--seed", "1"]) == 0
    model_path.write_text(model_path.read_text()[:120])
    assert main(["evaluate", "--features", feats, "--model", str(model_path)]) == 1


def test_dendrogram_outputs(workdir, tmp_path, capsys):
    feats = str(workdir / "features.csv")
    out = tmp_path / "dendro.json"
    dot = tmp_path / "dendro.dot"
    nwk = tmp_path / "dendro.nwk"
    assert main(["dendrogram", "--features", feats, "--out", str(out),
                 "--dot", str(dot), "--newick", str(nwk)]) == 0
    printed = capsys.readouterr().out
    assert "root split" in printed
    assert out.exists() and dot.exists() and nwk.exists()
    assert main(["dendrogram", "--features", feats, "--out", str(out),
                 "--linkage", "complete"]) == 0


def test_dendrogram_single_sample_class_exit1(workdir, tmp_path):
    rows = (workdir / "features.csv").read_text().splitlines()
    header, body = rows[0], rows[1:]
    kept, seen_t = [], 0
    for r in body:
        if r.split(",")[1] == "T":
            seen_t += 1
            if seen_t > 1:
                continue
        kept.append(r)
    path = tmp_path / "one-t.csv"
    path.write_text("\n".join([header] + kept) + "\n")
    assert main(["dendrogram", "--features", str(path),
                 "--out", str(tmp_path / "d.json")]) == 1


def test_unknown_flag_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--nope"])
    assert exc.value.code == 2


@pytest.mark.skipif(shutil.which("emgds") is None,
                    reason="console script not on PATH")
def test_console_script_help():
    proc = subprocess.run(["emgds", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "synth" in proc.stdout
