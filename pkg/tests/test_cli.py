import json

import numpy as np
import pytest

from projeq import cli, serialize


def run(args):
    return cli.main(args)


class TestVerifyCommand:
    def test_groups_scope_passes(self, tmp_path, capsys):
        code = run(["verify", "--scope", "groups", "--out", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "verify_report.json").read_text())
        assert report["passed"] is True
        names = [c["name"] for c in report["suites"]["groups"]]
        assert "flip-group-character-table-rows" in names

    def test_su2_scope_includes_commutator_reconstruction(self, tmp_path, capsys):
        code = run(["verify", "--scope", "su2", "--out", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "verify_report.json").read_text())
        names = [c["name"] for c in report["suites"]["su2"]]
        assert "every-element-is-a-commutator" in names

    def test_network_scope_includes_slot_equivariance(self, tmp_path, capsys):
        code = run(["verify", "--scope", "network", "--out", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "verify_report.json").read_text())
        names = [c["name"] for c in report["suites"]["network"]]
        assert "slot-equivariance-cyclic3-net" in names


class TestBasesCommand:
    def test_vierer_filter_bases(self, tmp_path, capsys):
        code = run(["bases", "--group", "vierer", "--rep", "filter3x3", "--out", str(tmp_path)])
        assert code == 0
        dims = []
        for i in range(4):
            payload = json.loads((tmp_path / f"basis_char{i}.json").read_text())
            dims.append(payload["dimension"])
            assert (tmp_path / f"basis_char{i}_grid.txt").exists()
        assert dims == [4, 2, 2, 1]
        assert (tmp_path / "filter_bases.png").exists()

    def test_cyclic_shift_bases(self, tmp_path, capsys):
        code = run(["bases", "--group", "cyclic-4", "--rep", "shift", "--out", str(tmp_path)])
        assert code == 0
        for i in range(4):
            payload = json.loads((tmp_path / f"basis_char{i}.json").read_text())
            assert payload["dimension"] == 1

    def test_perfect_group_only_trivial_slot(self, tmp_path, capsys):
        code = run(["bases", "--group", "alternating-5", "--rep", "standard", "--out", str(tmp_path)])
        assert code == 0
        payload = json.loads((tmp_path / "basis_char0.json").read_text())
        assert payload["dimension"] >= 1
        assert not (tmp_path / "basis_char1.json").exists()

    def test_unknown_group_usage_error(self, tmp_path, capsys):
        code = run(["bases", "--group", "monster", "--rep", "shift", "--out", str(tmp_path)])
        assert code == cli.USAGE_ERROR


class TestTrainCommands:
    def test_spinor_determinism(self, tmp_path, capsys):
        args = [
            "train-spinor", "--variant", "spinors-as-features", "--epochs", "2",
            "--train-size", "16", "--eval-size", "8", "--seed", "3",
        ]
        code = run(args + ["--out", str(tmp_path / "a")])
        assert code == 0
        code = run(args + ["--out", str(tmp_path / "b")])
        assert code == 0
        name = "metrics_spinors-as-features_noise0_seed3.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        sa = (tmp_path / "a" / "summary_spinors-as-features.json").read_text()
        sb = (tmp_path / "b" / "summary_spinors-as-features.json").read_text()
        assert sa == sb
        ca = (tmp_path / "a" / "checkpoint_spinors-as-features_noise0_seed3.pjeq").read_bytes()
        cb = (tmp_path / "b" / "checkpoint_spinors-as-features_noise0_seed3.pjeq").read_bytes()
        assert ca == cb

    def test_vierer_tiny_run(self, tmp_path, capsys):
        code = run(
            [
                "train-vierer", "--model", "baseline", "--epochs", "1", "--train-size", "64",
                "--eval-size", "32", "--widths", "2,2", "--seed", "1", "--out", str(tmp_path),
            ]
        )
        assert code == 0
        metrics = (tmp_path / "metrics_baseline_seed1.csv").read_text()
        assert metrics.splitlines()[0] == "epoch,split,loss,accuracy"
        ckpt = serialize.read_checkpoint(tmp_path / "checkpoint_baseline_seed1.pjeq")
        assert "conv0.kernel" in ckpt
        summary = json.loads((tmp_path / "summary_baseline.json").read_text())
        assert summary["repeats"][0]["parameters"] > 0
        assert (tmp_path / "curves_baseline_seed1.png").exists()

    def test_vierer_repeats_derived_seeds(self, tmp_path, capsys):
        code = run(
            [
                "train-vierer", "--model", "vierer", "--epochs", "1", "--train-size", "48",
                "--eval-size", "16", "--widths", "2", "--seed", "5", "--repeats", "2",
                "--out", str(tmp_path),
            ]
        )
        assert code == 0
        assert (tmp_path / "metrics_vierer_seed5.csv").exists()
        assert (tmp_path / "metrics_vierer_seed6.csv").exists()

    def test_idx_ingestion_path(self, tmp_path, capsys):
        # synthetic IDX fixtures exercise the external-data route end to end
        from projeq import data

        rng = np.random.default_rng(3)
        root = tmp_path / "idx"
        root.mkdir()
        data.write_idx_images(root / "train-images-idx3-ubyte", rng.uniform(size=(24, 12, 12)))
        data.write_idx_labels(root / "train-labels-idx1-ubyte", rng.integers(0, 10, size=24))
        data.write_idx_images(root / "t10k-images-idx3-ubyte", rng.uniform(size=(12, 12, 12)))
        data.write_idx_labels(root / "t10k-labels-idx1-ubyte", rng.integers(0, 10, size=12))
        code = run(
            [
                "train-vierer", "--model", "vierer", "--epochs", "1", "--widths", "2",
                "--train-size", "24", "--eval-size", "12", "--seed", "2",
                "--mnist-dir", str(root), "--out", str(tmp_path / "out"),
            ]
        )
        assert code == 0
        assert (tmp_path / "out" / "metrics_vierer_seed2.csv").exists()

    def test_missing_mnist_dir_is_data_error(self, tmp_path, capsys):
        code = run(
            [
                "train-vierer", "--model", "baseline", "--epochs", "1",
                "--mnist-dir", str(tmp_path / "nope"), "--out", str(tmp_path),
            ]
        )
        assert code == cli.DATA_ERROR

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text(
            "variant = spinors-as-features\n"
            "epochs = 2\n"
            "train-size = 16\n"
            "eval-size = 8\n"
            "# a comment\n"
            f"out = {tmp_path / 'cfg_out'}\n"
        )
        code = run(["train-spinor", "--config", str(config), "--epochs", "1"])
        assert code == 0
        metrics = (tmp_path / "cfg_out" / "metrics_spinors-as-features_noise0_seed0.csv").read_text()
        epochs = {line.split(",")[0] for line in metrics.splitlines()[1:]}
        assert epochs == {"0"}  # the explicit flag overrode the file value

    def test_unknown_config_key_usage_error(self, tmp_path, capsys):
        config = tmp_path / "bad.cfg"
        config.write_text("no_such_key = 3\n")
        code = run(["train-spinor", "--config", str(config)])
        assert code == cli.USAGE_ERROR


class TestUsageErrors:
    def test_unknown_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            cli.main(["frobnicate"])
        assert err.value.code == 2

    def test_bad_variant_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            cli.main(["train-spinor", "--variant", "nope"])
        assert err.value.code == 2


class TestCheckpointFormat:
    def test_container_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        tensors = {"a.weight": rng.normal(size=(3, 4)), "b": rng.normal(size=7), "c.scalar": np.array(2.5)}
        path = tmp_path / "state.pjeq"
        serialize.write_checkpoint(path, tensors)
        blob = path.read_bytes()
        assert blob[:4] == b"PJEQ"
        back = serialize.read_checkpoint(path)
        assert set(back) == set(tensors)
        for k in tensors:
            assert np.array_equal(back[k], np.asarray(tensors[k], dtype=np.float64))

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.pjeq"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(serialize.CheckpointError):
            serialize.read_checkpoint(path)

    def test_truncated_rejected(self, tmp_path):
        path = tmp_path / "trunc.pjeq"
        serialize.write_checkpoint(path, {"x": np.ones(4)})
        blob = path.read_bytes()
        path.write_bytes(blob[:-8])
        with pytest.raises(serialize.CheckpointError):
            serialize.read_checkpoint(path)

    def test_complex_rejected(self, tmp_path):
        with pytest.raises(serialize.CheckpointError):
            serialize.write_checkpoint(tmp_path / "c.pjeq", {"z": np.ones(2, dtype=complex)})
