import numpy as np
import pandas as pd
import pytest

from hafpn.cli import main
from hafpn.core.random import Rng, rand_uniform
from hafpn.data.dataset import format_detections, load_ground_truth, read_index
from hafpn.data.tensor_io import save_tensor
from hafpn.data.typing import DetBox
from hafpn.evaluation.detection_metrics import EvalReport
from hafpn.utils.config import config_to_text


@pytest.fixture(scope="function")
def image_file(tmp_path):
    path = tmp_path / "image.htsr"
    save_tensor(path, rand_uniform((1, 3, 16, 16), Rng(0)))
    return path


@pytest.fixture(scope="function")
def small_config_file(tmp_path, small_config):
    path = tmp_path / "neck.cfg"
    path.write_text(config_to_text(small_config))
    return path


def test_forward(tmp_path, image_file, capsys):
    out = tmp_path / "levels"
    assert main(["forward", "--input", str(image_file), "--output", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "variant = hafpn" in stdout
    assert "p3: [1, 16, 8, 8]" in stdout
    assert "p5: [1, 16, 2, 2]" in stdout
    assert sorted(p.name for p in out.iterdir()) == [
        "manifest.txt",
        "p3.htsr",
        "p4.htsr",
        "p5.htsr",
    ]


def test_identity_ham_matches_fpn_bytes(tmp_path, image_file, small_config_file):
    common = ["--input", str(image_file), "--config", str(small_config_file)]
    fpn, hafpn = tmp_path / "fpn", tmp_path / "hafpn"
    assert main(["forward", *common, "--variant", "fpn", "--output", str(fpn)]) == 0
    argv = ["forward", *common, "--identity-ham=true", "--output", str(hafpn)]
    assert main(argv) == 0
    for name in ("p3.htsr", "p4.htsr", "p5.htsr"):
        assert (fpn / name).read_bytes() == (hafpn / name).read_bytes()


def test_forward_bad_inputs(tmp_path, image_file):
    corrupt = tmp_path / "corrupt.htsr"
    corrupt.write_bytes(b"not a tensor")
    out = str(tmp_path / "out")
    assert main(["forward", "--input", str(corrupt), "--output", out]) == 2
    gray = tmp_path / "gray.htsr"
    save_tensor(gray, np.zeros((1, 1, 16, 16), dtype=np.float32))
    assert main(["forward", "--input", str(gray), "--output", out]) == 2
    argv = ["forward", "--input", str(image_file), "--output", out]
    assert main([*argv, "--use-emsa=false", "--use-ca=false"]) == 2
    assert main([*argv, "--config", str(tmp_path / "missing.cfg")]) == 2


def test_unknown_flag_exits_with_usage_error(image_file):
    with pytest.raises(SystemExit) as e:
        main(["forward", "--input", str(image_file), "--output", "x", "--depth", "3"])
    assert e.value.code == 2


def test_gradcheck(tmp_path):
    csv = tmp_path / "layer.csv"
    argv = ["gradcheck", "--scope", "layer", "--num-seeds", "1", "--output", str(csv)]
    assert main(argv) == 0
    table = pd.read_csv(csv, index_col="op")
    assert table["passed"].all()
    assert "conv2d" in table.index


def test_synth_and_split(tmp_path):
    data = tmp_path / "data"
    argv = ["synth", "--output", str(data), "--num-images", "10", "--size=[16,16]"]
    assert main(argv) == 0
    split_dir = tmp_path / "split"
    argv = ["split", "--input", str(data / "index.txt"), "--output", str(split_dir)]
    assert main([*argv, "--seed", "3"]) == 0
    sizes = [
        len((split_dir / f"{part}.txt").read_text().split())
        for part in ("train", "val", "test")
    ]
    assert sizes == [8, 1, 1]
    assert main([*argv, "--fractions=[0.5,0.2,0.2]"]) == 2


def test_eval(tmp_path, synthetic_dataset):
    index = read_index(synthetic_dataset / "index.txt")
    gts = load_ground_truth(index)
    dets = [DetBox(g.image_id, g.class_id, 1.0, *g.box) for g in gts]
    dets_file = tmp_path / "dets.txt"
    dets_file.write_text(format_detections(dets))
    out = tmp_path / "report"
    argv = ["eval", "--gt", str(synthetic_dataset), "--input", str(dets_file)]
    assert main([*argv, "--output", str(out)]) == 0
    report = EvalReport.from_key_values((out / "report.txt").read_text())
    assert report.precision_all == 1.0 and report.recall_all == 1.0
    assert (out / "pr_insufficient.csv").exists()
    assert (out / "pr_shifting.csv").exists()
    assert main([*argv, "--output", str(out), "--iou-thr", "1.5"]) == 2


def test_heatmap(tmp_path):
    features = tmp_path / "p3.htsr"
    save_tensor(features, rand_uniform((1, 4, 8, 8), Rng(1)))
    pgm = tmp_path / "p3.pgm"
    argv = ["heatmap", "--input", str(features), "--output", str(pgm)]
    assert main([*argv, "--colormap", "viridis"]) == 0
    assert pgm.read_bytes().startswith(b"P5\n8 8\n255\n")
    assert (tmp_path / "p3.png").exists()


def test_heatmap_rejects_non_finite_features(tmp_path):
    features = np.ones((1, 2, 3, 3), dtype=np.float32)
    features[0, 1] = np.nan
    save_tensor(tmp_path / "p3.htsr", features)
    pgm = tmp_path / "p3.pgm"
    argv = ["heatmap", "--input", str(tmp_path / "p3.htsr"), "--output", str(pgm)]
    assert main(argv) == 2
    assert not pgm.exists()


def test_bench(tmp_path, small_config_file):
    csv = tmp_path / "bench.csv"
    argv = ["bench", "--config", str(small_config_file), "--input-shape=[1,3,16,16]"]
    assert main([*argv, "--repeat", "1", "--output", str(csv)]) == 0
    assert list(pd.read_csv(csv, index_col="variant").index) == [
        "fpn",
        "pafpn",
        "hafpn",
    ]


def test_ablation(tmp_path, small_config_file):
    out = tmp_path / "ablation"
    argv = ["ablation", "--config", str(small_config_file), "--output", str(out)]
    assert main([*argv, "--num-images", "1", "--size=[16,16]"]) == 0
    assert (out / "fpn.txt").exists()
    assert (out / "pafpn_emsa_ca.txt").exists()
    summary = pd.read_csv(out / "summary.csv", index_col="row")
    assert len(summary) == 6


def test_variant_flag_turns_attention_off(tmp_path, image_file, capsys):
    argv = ["forward", "--input", str(image_file), "--output", str(tmp_path / "o")]
    assert main([*argv, "--variant", "pafpn", "--use-ca=true"]) == 0
    stdout = capsys.readouterr().out
    assert "use_emsa = false" in stdout and "use_ca = true" in stdout


def test_eval_without_detections(tmp_path, synthetic_dataset):
    dets_file = tmp_path / "dets.txt"
    dets_file.write_text("")
    out = tmp_path / "report"
    argv = ["eval", "--gt", str(synthetic_dataset), "--input", str(dets_file)]
    assert main([*argv, "--output", str(out)]) == 0
    report = EvalReport.from_key_values((out / "report.txt").read_text())
    assert report.map == 0.0 and report.recall_all == 0.0


def test_plain_variant_from_config_file(tmp_path, image_file, capsys):
    path = tmp_path / "fpn.cfg"
    path.write_text("variant = fpn\nchannels = 8\n")
    argv = ["forward", "--input", str(image_file), "--config", str(path)]
    assert main([*argv, "--output", str(tmp_path / "fpn")]) == 0
    stdout = capsys.readouterr().out
    assert "use_emsa = false" in stdout and "use_ca = false" in stdout
    assert main([*argv, "--variant", "hafpn", "--output", str(tmp_path / "h")]) == 0
    stdout = capsys.readouterr().out
    assert "use_emsa = true" in stdout and "use_ca = true" in stdout
