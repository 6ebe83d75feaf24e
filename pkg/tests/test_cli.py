import json
import os

import numpy as np
import pytest

from skeldiff import cli
from skeldiff.data_io import load_poses, save_poses
from skeldiff.graph import default_skeleton
from skeldiff.rng import Rng


def run(args, tmp_path):
    log = str(tmp_path / "runs.jsonl")
    return cli.main(args + ["--log", log]), log


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Tiny end-to-end artifacts shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    log = str(root / "runs.jsonl")
    data = str(root / "data.json")
    ae = str(root / "ae.ckpt")
    model = str(root / "model.ckpt")
    assert cli.main(["gen", "--n", "6", "--t", "24", "--seed", "7",
                     "-o", data, "--log", log]) == 0
    assert cli.main(["pretrain", "--data", data, "--epochs", "2",
                     "--batch-size", "3", "-o", ae, "--log", log]) == 0
    assert cli.main(["train", "--data", data, "--ae", ae, "--epochs", "2",
                     "-o", model, "--log", log]) == 0
    return {"root": root, "log": log, "data": data, "ae": ae, "model": model}


class TestGen:
    def test_creates_loadable_dataset(self, workdir):
        seqs = load_poses(workdir["data"])
        assert len(seqs) == 6
        assert seqs[0].shape == (3, 24, 12)

    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("a.json", "b.json"):
            code, _ = run(["gen", "--n", "3", "--t", "10", "--seed", "5",
                           "-o", str(tmp_path / name)], tmp_path)
            assert code == 0
        assert (tmp_path / "a.json").read_bytes() \
            == (tmp_path / "b.json").read_bytes()


class TestTrainCommands:
    def test_checkpoints_written(self, workdir):
        assert os.path.exists(workdir["ae"])
        assert os.path.exists(workdir["ae"] + ".bin")
        assert os.path.exists(workdir["model"])

    def test_log_lines_carry_config_and_metrics(self, workdir):
        lines = [json.loads(line)
                 for line in open(workdir["log"], encoding="utf-8")]
        assert [rec["command"] for rec in lines[:3]] \
            == ["gen", "pretrain", "train"]
        for rec in lines:
            assert rec["config"]["seed"] == 7
            assert "metrics" in rec and "artifacts" in rec
        assert "final_loss" in lines[1]["metrics"]


class TestInfer:
    def test_transition_length_contract(self, workdir, tmp_path):
        skel = default_skeleton()
        pre = str(tmp_path / "pre.json")
        post = str(tmp_path / "post.json")
        out = str(tmp_path / "out.json")
        seqs = load_poses(workdir["data"])
        save_poses(pre, [seqs[0][:, :8]], 12)
        save_poses(post, [seqs[1][:, :6]], 12)
        code, _ = run(["infer", "--model", workdir["model"], "--pre", pre,
                       "--post", post, "--trans", "20", "-o", out], tmp_path)
        assert code == 0
        result = load_poses(out)[0]
        assert result.shape == (3, 8 + 20 + 6, 12)
        assert np.array_equal(result[:, :8], seqs[0][:, :8])
        assert np.array_equal(result[:, 28:], seqs[1][:, :6])

    def test_svg_dump(self, workdir, tmp_path):
        pre = str(tmp_path / "pre.json")
        post = str(tmp_path / "post.json")
        out = str(tmp_path / "out.json")
        svg = str(tmp_path / "frames")
        seqs = load_poses(workdir["data"])
        save_poses(pre, [seqs[0][:, :4]], 12)
        save_poses(post, [seqs[1][:, :4]], 12)
        code, _ = run(["infer", "--model", workdir["model"], "--pre", pre,
                       "--post", post, "--trans", "5", "-o", out,
                       "--dump-svg", svg], tmp_path)
        assert code == 0
        files = sorted(os.listdir(svg))
        assert len(files) == 13
        body = open(os.path.join(svg, files[0])).read()
        assert body.startswith("<svg") and "<line" in body

    def test_multi_sequence_segment_rejected(self, workdir, tmp_path):
        multi = str(tmp_path / "multi.json")
        seqs = load_poses(workdir["data"])
        save_poses(multi, seqs[:2], 12)
        code, _ = run(["infer", "--model", workdir["model"], "--pre", multi,
                       "--post", multi, "--trans", "5",
                       "-o", str(tmp_path / "x.json")], tmp_path)
        assert code == cli.EXIT_BAD_FORMAT


class TestEval:
    def test_interval_protocol_report(self, workdir, tmp_path):
        report_path = str(tmp_path / "report.json")
        code, _ = run(["eval", "--model", workdir["model"],
                       "--data", workdir["data"], "--remove", "8",
                       "--every", "12", "-o", report_path], tmp_path)
        assert code == 0
        doc = json.loads(open(report_path).read())
        assert doc["protocol"] == {"mode": "interval", "remove": 8,
                                   "every": 12}
        assert len(doc["per_sequence"]) == 6
        assert all(r["observed_exact"] for r in doc["per_sequence"])

    def test_reports_byte_identical_across_runs(self, workdir, tmp_path):
        paths = [str(tmp_path / f"r{i}.json") for i in (0, 1)]
        for p in paths:
            code, _ = run(["eval", "--model", workdir["model"],
                           "--data", workdir["data"], "--remove", "8",
                           "--every", "12", "--seed", "3", "-o", p], tmp_path)
            assert code == 0
        assert open(paths[0]).read() == open(paths[1]).read()

    def test_random_mask_mode(self, workdir, tmp_path):
        report_path = str(tmp_path / "rand.json")
        code, _ = run(["eval", "--model", workdir["model"],
                       "--data", workdir["data"], "--mask-mode", "random",
                       "--ratio", "0.4", "-o", report_path], tmp_path)
        assert code == 0
        doc = json.loads(open(report_path).read())
        assert doc["protocol"]["mode"] == "random"


class TestErrorExits:
    def test_unknown_flag_is_usage_error(self, tmp_path, capsys):
        assert cli.main(["gen", "--frobnicate", "1"]) == cli.EXIT_USAGE
        capsys.readouterr()

    def test_missing_file(self, tmp_path):
        code, _ = run(["pretrain", "--data", str(tmp_path / "nope.json"),
                       "-o", str(tmp_path / "ae.ckpt")], tmp_path)
        assert code == cli.EXIT_MISSING_FILE

    def test_joint_mismatch(self, workdir, tmp_path):
        bad = str(tmp_path / "bad.json")
        save_poses(bad, [np.zeros((3, 10, 5))], 5)
        code, _ = run(["pretrain", "--data", bad,
                       "-o", str(tmp_path / "ae.ckpt")], tmp_path)
        assert code == cli.EXIT_JOINT_MISMATCH

    def test_bad_format(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _ = run(["pretrain", "--data", str(bad),
                       "-o", str(tmp_path / "ae.ckpt")], tmp_path)
        assert code == cli.EXIT_BAD_FORMAT

    @pytest.mark.filterwarnings("ignore:invalid value", "ignore:overflow")
    def test_nonfinite_abort(self, tmp_path):
        # spread so large that pose normalization overflows to NaN
        seq = np.zeros((3, 8, 12))
        seq[:, :, 0] = 1e308
        seq[:, :, 1:] = -1e308
        bad = str(tmp_path / "huge.json")
        save_poses(bad, [seq, seq], 12)
        code, _ = run(["pretrain", "--data", bad, "--epochs", "1",
                       "--batch-size", "2",
                       "-o", str(tmp_path / "ae.ckpt")], tmp_path)
        assert code == cli.EXIT_NONFINITE

    def test_eval_on_autoencoder_checkpoint_rejected(self, workdir, tmp_path):
        code, _ = run(["eval", "--model", workdir["ae"],
                       "--data", workdir["data"],
                       "-o", str(tmp_path / "r.json")], tmp_path)
        assert code == cli.EXIT_BAD_CHECKPOINT

    def test_error_envelope_is_machine_parsable(self, tmp_path, capsys):
        cli.main(["pretrain", "--data", str(tmp_path / "nope.json"),
                  "-o", str(tmp_path / "ae.ckpt"),
                  "--log", str(tmp_path / "l.jsonl")])
        err = capsys.readouterr().err.strip()
        doc = json.loads(err)
        assert doc["error"]["code"] == cli.EXIT_MISSING_FILE
        assert doc["error"]["type"] == "FileNotFoundError"


class TestConfigFile:
    def test_config_file_with_flag_override(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"seed": 99}))
        out = str(tmp_path / "d.json")
        code, log = run(["gen", "--n", "2", "--t", "8",
                         "--config", str(cfg_path), "-o", out], tmp_path)
        assert code == 0
        rec = json.loads(open(log).readline())
        assert rec["seed"] == 99
        code, log2 = run(["gen", "--n", "2", "--t", "8",
                          "--config", str(cfg_path), "--seed", "3",
                          "-o", out], tmp_path)
        last = open(log2).read().splitlines()[-1]
        assert json.loads(last)["seed"] == 3

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"wat": 1}))
        code, _ = run(["gen", "--n", "1", "--t", "8",
                       "--config", str(cfg_path),
                       "-o", str(tmp_path / "d.json")], tmp_path)
        assert code == cli.EXIT_BAD_FORMAT
