"""
命令注册、命令管理器与命令行入口测试
"""
import asyncio
import json

import numpy as np
import pandas as pd
import pytest

from commands import CommandConfig, CommandManager, get_command_manager, get_registry
from commands.base_command import BaseCommand, SimpleCommandFactory
from commands.registry import CommandRegistry
from main import EXIT_FAILED, EXIT_OK, main
from models.manifest import load_manifest
from network import save_model

EXPECTED_COMMANDS = {"train", "eval", "sweep-frames", "predict", "gradcheck", "dump-maps", "psnr"}


@pytest.fixture
def run_config(tmp_path, noise_dataset):
    """tiny 网络、D=4、16×16 窗口、2 个 epoch 的运行配置文件"""
    path = tmp_path / "run.json"
    path.write_text(json.dumps({
        "manifest": str(noise_dataset),
        "model": {"branch_channels": 4, "trunk_channels": [8, 4, 1], "fc_hidden": 8},
        "frames": 4,
        "window": 16,
        "lr": 1e-3,
        "epochs": 2,
        "batch_size": 8,
        "repeats": 1,
        "seed": 5,
        "output_dir": str(tmp_path / "runs"),
    }))
    return path


@pytest.fixture
def video_pair(noise_dataset):
    manifest = load_manifest(noise_dataset)
    entry = manifest.distorted[2]
    return str(manifest.resolve(manifest.reference(entry.reference_id).file)), str(manifest.resolve(entry.file))


@pytest.fixture
def checkpoint(tmp_path, tiny_params):
    return str(save_model(tmp_path / "tiny.ckpt", tiny_params))


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


class _Sleepy(BaseCommand):
    command_name = "sleepy"

    def run(self, seconds: float = 0.0, **kwargs):
        import time
        time.sleep(seconds)
        return {"slept": seconds}


class _Broken(BaseCommand):
    command_name = "broken"

    def run(self, **kwargs):
        raise RuntimeError("坏了")


class TestRegistry:

    def test_all_commands_registered(self):
        assert EXPECTED_COMMANDS <= set(get_registry().list_commands())

    def test_command_info(self):
        info = get_registry().get_command_info("eval")
        assert info["metadata"]["scorers"] == ["c3dvqa", "psnr"]
        assert info["config"]["description"]

    def test_timeout_override(self):
        registry = CommandRegistry()
        registry.register_class("sleepy", _Sleepy)
        assert registry.create_command("sleepy").config.timeout is None
        assert registry.create_command("sleepy", timeout=3).config.timeout == 3
        assert registry.get_config("sleepy").timeout is None

    def test_unregister(self):
        registry = CommandRegistry()
        registry.register_class("sleepy", _Sleepy)
        assert registry.unregister("sleepy")
        assert not registry.unregister("sleepy")
        assert registry.create_command("sleepy") is None


class TestCommandManager:

    @pytest.fixture
    def manager(self):
        registry = CommandRegistry()
        registry.register_class("sleepy", _Sleepy)
        registry.register("broken", SimpleCommandFactory(_Broken), CommandConfig(name="broken"))
        return CommandManager(registry)

    def test_success(self, manager):
        response = manager.run("sleepy", seconds=0.0)
        assert response.success
        assert response.data == {"slept": 0.0}
        assert response.command_name == "sleepy"

    def test_exception_becomes_failure(self, manager):
        response = manager.run("broken")
        assert not response.success
        assert response.error == "RuntimeError: 坏了"

    def test_timeout(self, manager):
        response = asyncio.run(manager.execute_command("sleepy", timeout=1, seconds=3.0))
        assert not response.success
        assert "超时" in response.error

    def test_unknown_command(self, manager):
        response = manager.run("nope")
        assert not response.success
        assert "nope" in response.error

    def test_statistics(self, manager):
        manager.run("sleepy")
        manager.run("broken")
        stats = manager.get_statistics()
        assert stats["total_executions"] == 2
        assert stats["failed_executions"] == 1
        assert len(manager.get_execution_history("broken")) == 1


class TestPsnrCli:

    def test_value(self, video_pair, capsys):
        ref, dist = video_pair
        assert main(["psnr", "--reference", ref, "--distorted", dist, "--json"]) == EXIT_OK
        data = _json_out(capsys)
        assert not data["identical"]
        assert data["psnr"] == pytest.approx(10 * np.log10(255 ** 2 / data["mse"]))
        assert data["frames"] == 8

    def test_identical(self, video_pair, capsys):
        ref, _ = video_pair
        assert main(["psnr", "--reference", ref, "--distorted", ref, "--json"]) == EXIT_OK
        data = _json_out(capsys)
        assert data["identical"] and data["psnr"] is None

    def test_missing_file(self, tmp_path, video_pair, capsys):
        ref, _ = video_pair
        assert main(["psnr", "--reference", ref, "--distorted", str(tmp_path / "none.y")]) == EXIT_FAILED
        assert "error" in capsys.readouterr().err


class TestPredictCli:

    def test_segments_and_mean(self, checkpoint, video_pair, capsys):
        ref, dist = video_pair
        assert main(["predict", "--checkpoint", checkpoint, "--reference", ref, "--distorted", dist,
                     "--json"]) == EXIT_OK
        data = _json_out(capsys)
        # 8 帧 / D=4 → 2 段，32×32 / 16 → 4 块
        assert len(data["segments"]) == 8
        assert data["score"] == pytest.approx(np.mean([s["score"] for s in data["segments"]]), rel=1e-5)
        assert "scaled_score" not in data

    def test_text_output(self, checkpoint, video_pair, capsys):
        ref, dist = video_pair
        assert main(["predict", "--checkpoint", checkpoint, "--reference", ref, "--distorted", dist]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[-1].startswith("score:")

    def test_bad_checkpoint(self, tmp_path, video_pair):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"not a checkpoint")
        ref, dist = video_pair
        assert main(["predict", "--checkpoint", str(bad), "--reference", ref, "--distorted", dist]) == EXIT_FAILED


class TestDumpMapsCli:

    def test_writes_maps(self, tmp_path, checkpoint, video_pair, capsys):
        ref, dist = video_pair
        out = tmp_path / "maps"
        assert main(["dump-maps", "--checkpoint", checkpoint, "--reference", ref, "--distorted", dist,
                     "--out-dir", str(out), "--segment", "1", "--frames", "0", "--json"]) == EXIT_OK
        data = _json_out(capsys)
        assert len(data["files"]) == 4
        assert all(p.endswith(".pgm") for p in data["files"])
        assert data["segment"] == {"frame": 0, "row": 0, "col": 16}

    def test_segment_out_of_range(self, tmp_path, checkpoint, video_pair):
        ref, dist = video_pair
        assert main(["dump-maps", "--checkpoint", checkpoint, "--reference", ref, "--distorted", dist,
                     "--out-dir", str(tmp_path / "maps"), "--segment", "99"]) == EXIT_FAILED


class TestTrainCli:

    def test_train_writes_artifacts(self, run_config, tmp_path, capsys):
        assert main(["train", "--config", str(run_config), "--json"]) == EXIT_OK
        data = _json_out(capsys)
        assert data["epochs"] == 2
        assert len(data["losses"]) == 2
        assert data["best_loss"] == min(data["losses"])
        assert not set(data["train_references"]) & set(data["test_references"])
        log = pd.read_csv(data["train_log"])
        assert list(log.columns) == ["epoch", "loss", "lr", "seconds"]
        assert len(log) == 2

    def test_override_epochs(self, run_config, capsys):
        assert main(["train", "--config", str(run_config), "--epochs", "1", "--json"]) == EXIT_OK
        assert _json_out(capsys)["epochs"] == 1

    def test_same_seed_same_losses(self, run_config, tmp_path, capsys):
        losses = []
        for name in ("a", "b"):
            assert main(["train", "--config", str(run_config), "--output-dir", str(tmp_path / name),
                         "--json"]) == EXIT_OK
            losses.append(_json_out(capsys)["losses"])
        assert losses[0] == losses[1]

    def test_invalid_window(self, run_config):
        assert main(["train", "--config", str(run_config), "--window", "18"]) == EXIT_FAILED

    def test_missing_manifest(self, tmp_path):
        assert main(["train", "--manifest", str(tmp_path / "missing.json")]) == EXIT_FAILED


class TestEvalCli:

    def test_psnr_scorer(self, run_config, tmp_path, capsys):
        assert main(["eval", "--config", str(run_config), "--scorer", "psnr", "--repeats", "3",
                     "--json"]) == EXIT_OK
        data = _json_out(capsys)
        assert len(data["runs"]) == 3
        assert [r["seed"] for r in data["runs"]] == [5, 6, 7]
        assert data["median_srocc"] == pytest.approx(np.median([r["srocc"] for r in data["runs"]]))
        report = pd.read_csv(data["report"])
        assert len(report) == 4

    def test_single_repeat_median(self, run_config, capsys):
        assert main(["eval", "--config", str(run_config), "--scorer", "psnr", "--json"]) == EXIT_OK
        data = _json_out(capsys)
        assert data["median_plcc"] == data["runs"][0]["plcc"]

    def test_requires_checkpoint(self, run_config):
        assert main(["eval", "--config", str(run_config)]) == EXIT_FAILED

    def test_checkpoint_scorer(self, run_config, tmp_path, capsys):
        assert main(["train", "--config", str(run_config), "--epochs", "1", "--json"]) == EXIT_OK
        ckpt = _json_out(capsys)["checkpoint"]
        assert main(["eval", "--config", str(run_config), "--checkpoint", ckpt, "--json"]) == EXIT_OK
        data = _json_out(capsys)
        assert -1.0 <= data["median_srocc"] <= 1.0

    def test_checkpoint_never_scores_its_training_content(self, run_config, capsys):
        assert main(["train", "--config", str(run_config), "--epochs", "1", "--json"]) == EXIT_OK
        trained = _json_out(capsys)
        assert main(["eval", "--config", str(run_config), "--checkpoint", trained["checkpoint"],
                     "--repeats", "4", "--json"]) == EXIT_OK
        data = _json_out(capsys)
        assert len(data["runs"]) == 1
        assert data["runs"][0]["seed"] == 5
        for tested in data["test_references"]:
            assert tested == trained["test_references"]
            assert not set(tested) & set(trained["train_references"])

    def test_checkpoint_without_recorded_split(self, run_config, checkpoint):
        assert main(["eval", "--config", str(run_config), "--checkpoint", checkpoint]) == EXIT_FAILED

    def test_checkpoint_config_mismatch(self, run_config, capsys):
        assert main(["train", "--config", str(run_config), "--epochs", "1", "--json"]) == EXIT_OK
        ckpt = _json_out(capsys)["checkpoint"]
        assert main(["eval", "--config", str(run_config), "--checkpoint", ckpt, "--frames", "2"]) == EXIT_FAILED

    def test_train_per_repeat(self, run_config, capsys):
        assert main(["eval", "--config", str(run_config), "--train-per-repeat", "--epochs", "1",
                     "--json"]) == EXIT_OK
        assert len(_json_out(capsys)["runs"]) == 1


class TestSweepCli:

    def test_failed_frames_recorded(self, run_config, capsys):
        assert main(["sweep-frames", "--config", str(run_config), "--epochs", "1",
                     "--frames-list", "4", "16", "--json"]) == EXIT_OK
        data = _json_out(capsys)
        assert data["failed"] == [16]
        frame = pd.read_csv(data["csv"])
        assert list(frame.columns) == ["D", "PLCC", "SROCC", "epoch_seconds"]
        assert frame["D"].tolist() == [4, 16]
        assert np.isnan(frame["PLCC"].iloc[1])
        assert np.isfinite(frame["SROCC"].iloc[0])


def test_global_manager_is_shared():
    assert get_command_manager() is get_command_manager()
