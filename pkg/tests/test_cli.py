import json

import numpy as np
import pytest

from wavemorph import cli
from wavemorph import dataio as dio
from wavemorph import metrics as mt
from wavemorph import selection as sel
from wavemorph import wavelet as wv

COMMON = ["--resize", "0", "--dist-bins", "8"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli") / "ds"
    assert cli.main(["gen-synthetic-dataset", "-o", str(root), "--n-bonafide", "12",
                     "--n-morphs", "12", "--size", "32", "--seed", "7"]) == 0
    return root


@pytest.fixture(scope="module")
def ranking(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("rank") / "ranking.csv"
    assert cli.main(["rank", str(dataset), "-o", str(out), *COMMON]) == 0
    return out


def test_gen_writes_dataset_and_runlog(dataset):
    manifest = dio.load_manifest(dataset)
    assert len(manifest.entries) == 24
    log = json.loads((dataset / "runlog.json").read_text())
    assert log["command"] == "gen-synthetic-dataset"
    assert log["config"]["seed"] == 7


def test_rank_output_and_runlog(dataset, ranking):
    table = sel.read_ranking_csv(ranking)
    assert sorted(table.selected) == list(range(1, 49))
    log = json.loads((ranking.parent / (ranking.name + ".runlog.json")).read_text())
    assert log["command"] == "rank"
    # dataset inputs are identified by their manifest hash
    (value,) = log["inputs"].values()
    assert value == "manifest:" + dio.load_manifest(dataset).content_hash()
    assert str(ranking) in log["outputs"]


def test_rank_is_idempotent(dataset, ranking, tmp_path):
    again = tmp_path / "ranking2.csv"
    assert cli.main(["rank", str(dataset), "-o", str(again), *COMMON]) == 0
    assert again.read_bytes() == ranking.read_bytes()


def test_rank_worker_pool_matches_serial(dataset, ranking, tmp_path):
    out = tmp_path / "ranking_mt.csv"
    assert cli.main(["rank", str(dataset), "-o", str(out), *COMMON, "--workers", "4"]) == 0
    assert out.read_bytes() == ranking.read_bytes()


def test_rank_rejects_duplicate_dataset_ids(dataset, tmp_path):
    assert cli.main(["rank", str(dataset), str(dataset), "-o", str(tmp_path / "r.csv"), *COMMON]) == 2


def test_rank_dump_entropy(dataset, tmp_path):
    out = tmp_path / "r.csv"
    dump = tmp_path / "entropy.csv"
    assert cli.main(["rank", str(dataset), "-o", str(out), "--dump-entropy", str(dump), *COMMON]) == 0
    from wavemorph.features import read_entropy_csv

    samples = read_entropy_csv(dump)
    train = dio.load_manifest(dataset).subset(split="train")
    assert len(samples) == 48 * len(train)


def test_select_and_export_flow(dataset, ranking, tmp_path):
    sel_path = tmp_path / "sel.json"
    assert cli.main(["select", "--ranking", str(ranking), "--top-k", "3", "-o", str(sel_path)]) == 0
    indices = sel.read_selection_json(sel_path)
    assert indices == sel.read_ranking_csv(ranking).selected[:3]

    out_dir = tmp_path / "tensors"
    assert cli.main(["export", str(dataset), "--selection", str(sel_path),
                     "--split", "test", "-o", str(out_dir), *COMMON]) == 0
    manifest = dio.load_manifest(dataset)
    test_entries = manifest.subset(split="test")
    tensors = sorted(out_dir.glob("*.wsb"))
    assert len(tensors) == len(test_entries)
    t = dio.read_tensor(tensors[0])
    assert t.shape == (3, 32, 32)
    log = json.loads((out_dir / "runlog.json").read_text())
    assert log["command"] == "export"
    assert str(sel_path) in log["inputs"]


def test_select_requires_exactly_one_policy(ranking, tmp_path):
    out = str(tmp_path / "s.json")
    assert cli.main(["select", "--ranking", str(ranking), "-o", out]) == 2
    assert cli.main(["select", "--ranking", str(ranking), "--top-k", "2",
                     "--threshold", "0.1", "-o", out]) == 2


def test_select_threshold_policy(ranking, tmp_path):
    out = tmp_path / "s.json"
    assert cli.main(["select", "--ranking", str(ranking), "--threshold=-1e9", "-o", str(out)]) == 0
    assert sel.read_selection_json(out) == sel.read_ranking_csv(ranking).selected


def test_sweep_flow(dataset, ranking, tmp_path):
    out = tmp_path / "sweep.csv"
    assert cli.main(["sweep", str(dataset), "--ranking", str(ranking),
                     "--k", "1,3", "-o", str(out), *COMMON]) == 0
    import csv

    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["k"]) for r in rows] == [1, 3]
    assert all(0.0 <= float(r["auc_validation"]) <= 1.0 for r in rows)


def test_sweep_rejects_bad_k_list(dataset, ranking, tmp_path):
    out = str(tmp_path / "s.csv")
    assert cli.main(["sweep", str(dataset), "--ranking", str(ranking), "--k", "1,two", "-o", out, *COMMON]) == 2
    assert cli.main(["sweep", str(dataset), "--ranking", str(ranking), "--k", ",", "-o", out, *COMMON]) == 2


def test_decompose_flow(dataset, tmp_path, capsys):
    src = next((dataset / "bonafide").glob("*.pgm"))
    out = tmp_path / "one.wst"
    assert cli.main(["decompose", str(src), "-o", str(out), "--resize", "0"]) == 0
    captured = capsys.readouterr().out
    assert "48 sub-bands" in captured
    stack = wv.read_stack(out)
    assert stack.bands.shape == (48, 32, 32)
    assert cli.main(["decompose", str(tmp_path / "missing.pgm"), "-o", str(out)]) == 2


def test_evaluate_flow(tmp_path):
    scores = tmp_path / "scores.csv"
    scores.write_text(
        "image_id,label,score\n"
        "a,bonafide,0.1\nb,bonafide,0.3\nc,morphed,0.2\nd,morphed,0.9\n"
    )
    out = tmp_path / "metrics.json"
    det = tmp_path / "det.csv"
    assert cli.main(["evaluate", "--scores", str(scores), "-o", str(out), "--det", str(det)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"deer", "deer_threshold", "bpcer_at_5", "bpcer_at_10", "auc"}
    assert doc["auc"] == 0.75
    assert det.is_file()
    bad = tmp_path / "bad.csv"
    bad.write_text("image_id,label\n")
    assert cli.main(["evaluate", "--scores", str(bad), "-o", str(out)]) == 2


def test_synth_morph_flow(dataset, tmp_path):
    imgs = sorted((dataset / "bonafide").glob("*.pgm"))[:2]
    out = tmp_path / "blend.pgm"
    assert cli.main(["synth-morph", str(imgs[0]), str(imgs[1]), "--alpha", "0.25", "-o", str(out)]) == 0
    blend = dio.read_pgm(out)
    a = dio.read_pgm(imgs[0])
    b = dio.read_pgm(imgs[1])
    # written blend is the quantized convex combination
    assert np.max(np.abs(blend - (0.25 * a + 0.75 * b))) <= 0.5 / 255 + 1e-12
    assert cli.main(["synth-morph", str(imgs[0]), str(imgs[1]), "--alpha", "2.0", "-o", str(out)]) == 2


def test_config_file_with_flag_override(dataset, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("wavelet = db2\nresize = 0\ndist_bins = 8\n")
    out = tmp_path / "r.csv"
    assert cli.main(["rank", str(dataset), "-o", str(out), "--config", str(cfg), "--wavelet", "haar"]) == 0
    assert "wavelet=haar" in capsys.readouterr().out  # flag beats file
    log = json.loads((tmp_path / "r.csv.runlog.json").read_text())
    assert log["config"]["wavelet"] == "haar"
    assert log["config"]["dist_bins"] == 8  # file beats default


def test_missing_config_file_is_input_error(dataset, tmp_path):
    assert cli.main(["rank", str(dataset), "-o", str(tmp_path / "r.csv"),
                     "--config", str(tmp_path / "none.cfg")]) == 2


def test_invalid_flag_value_is_input_error(dataset, tmp_path):
    assert cli.main(["rank", str(dataset), "-o", str(tmp_path / "r.csv"), "--entropy-levels", "1"]) == 2


def test_io_failure_maps_to_exit_3(tmp_path, monkeypatch):
    scores = tmp_path / "scores.csv"
    scores.write_text("image_id,label,score\na,bonafide,0.1\nb,morphed,0.9\n")
    blocker = tmp_path / "file.txt"
    blocker.write_text("x")
    # output path routes through an existing regular file
    assert cli.main(["evaluate", "--scores", str(scores), "-o", str(blocker / "m.json")]) == 3


def test_internal_error_maps_to_exit_4(tmp_path, monkeypatch):
    scores = tmp_path / "scores.csv"
    scores.write_text("image_id,label,score\na,bonafide,0.1\nb,morphed,0.9\n")

    def boom(path):
        raise AssertionError("synthetic invariant failure")

    monkeypatch.setattr(mt, "read_scores_csv", boom)
    assert cli.main(["evaluate", "--scores", str(scores), "-o", str(tmp_path / "m.json")]) == 4


def test_console_entry_point():
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "wavemorph.cli", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    for sub in ("decompose", "rank", "select", "export", "sweep", "evaluate"):
        assert sub in proc.stdout
