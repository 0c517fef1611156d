import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from spinpair.cli import main
from spinpair.config import OUTPUT_DIR_ENV, parse_config
from spinpair.errors import ConfigError
from spinpair.output import (
    ENSEMBLE_HEADER,
    TRAJECTORY_HEADER,
    read_ensemble_csv,
    write_ensemble_csv,
    write_trajectory_csv,
)
from spinpair.photon_channel import PhysicalParams
from spinpair.trajectory import Protocol, run_ensemble, run_trajectory
from spinpair.collective_spin import SampleSpec

MINIMAL = """
# paper-scale setup
n_atoms = 20
delta_tau = 0.1
detuning_ratio = 150
protocol = consecutive
n_photons = 5000
n_before_rotation = 2500
trajectories = 100
seed = 42
"""


@pytest.fixture()
def minimal_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(MINIMAL)
    return path


class TestParseConfig:
    def test_minimal_paper_setup(self, minimal_config):
        cfg = parse_config(minimal_config)
        assert cfg.n_atoms_1 == cfg.n_atoms_2 == 20
        assert cfg.delta_tau == 0.1
        assert cfg.detuning_ratio == 150.0
        assert cfg.protocol == "consecutive"
        assert cfg.n_photons_total == 5000
        assert cfg.n_photons_before_rotation == 2500
        assert cfg.n_trajectories == 100
        assert cfg.base_seed == 42
        assert cfg.rotation_angle == math.pi / 2
        assert cfg.clamp_mode == "permissive"
        assert cfg.snapshot_stride == 1
        params = cfg.physical_params()
        assert params.gamma_over_delta == pytest.approx(1.0 / 150.0)

    def test_detuning_ratio_omitted_means_ideal(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("n_atoms=4\ndelta_tau=0.1\nprotocol=continuous\nn_photons=10\n")
        cfg = parse_config(path)
        assert cfg.detuning_ratio == 0.0
        assert cfg.physical_params().scatter_scale == 0.0
        assert cfg.rotation_angle == math.pi / 5

    def test_negative_delta_tau_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("n_atoms=4\ndelta_tau=-0.1\nprotocol=continuous\nn_photons=10\n")
        with pytest.raises(ConfigError, match="delta_tau"):
            parse_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("n_atoms=4\ndelta_tau=0.1\nprotocol=continuous\nn_photons=10\nbogus=1\n")
        with pytest.raises(ConfigError, match="bogus"):
            parse_config(path)

    def test_missing_required_key_named(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("n_atoms=4\ndelta_tau=0.1\nprotocol=consecutive\nn_photons=10\n")
        with pytest.raises(ConfigError, match="n_before_rotation"):
            parse_config(path)
        path.write_text("delta_tau=0.1\nprotocol=continuous\nn_photons=10\n")
        with pytest.raises(ConfigError, match="n_atoms"):
            parse_config(path)

    def test_overrides_win(self, minimal_config):
        cfg = parse_config(minimal_config, {"seed": "7", "trajectories": "3"})
        assert cfg.base_seed == 7
        assert cfg.n_trajectories == 3

    def test_round_trip_idempotent(self, minimal_config, tmp_path):
        cfg = parse_config(minimal_config)
        rewritten = tmp_path / "echo.cfg"
        rewritten.write_text(
            "\n".join(f"{k} = {v}" for k, v in cfg.to_file_dict().items()) + "\n"
        )
        assert parse_config(rewritten) == cfg

    def test_env_var_default_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "envout"))
        path = tmp_path / "c.cfg"
        path.write_text("n_atoms=2\ndelta_tau=0.1\nprotocol=continuous\nn_photons=1\n")
        assert parse_config(path).output_dir == str(tmp_path / "envout")

    def test_bad_detuning_rejected(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text(
            "n_atoms=4\ndelta_tau=0.1\ndetuning_ratio=0.5\nprotocol=continuous\nn_photons=1\n"
        )
        with pytest.raises(ConfigError, match="detuning_ratio"):
            parse_config(path)


class TestCsvWriters:
    def make_record(self, n_photons=3, seed=1):
        return run_trajectory(
            SampleSpec(4),
            SampleSpec(4),
            PhysicalParams(0.1, 1.0 / 150.0),
            Protocol.consecutive_zy(n_photons, n_photons // 2),
            seed=seed,
        )

    def test_trajectory_schema_golden(self, tmp_path):
        rec = self.make_record()
        out = tmp_path / "t.csv"
        write_trajectory_csv(rec, out)
        lines = out.read_text().splitlines()
        assert lines[0] == TRAJECTORY_HEADER
        assert len(lines) == 1 + 3  # one row per recorded snapshot
        for line in lines[1:]:
            assert len(line.split(",")) == len(TRAJECTORY_HEADER.split(","))

    def test_ensemble_round_trip(self, tmp_path):
        stats, _ = run_ensemble(
            SampleSpec(4),
            SampleSpec(4),
            PhysicalParams(0.1, 0.0),
            Protocol.consecutive_zy(20, 10),
            4,
            base_seed=2,
        )
        out = tmp_path / "e.csv"
        write_ensemble_csv(stats, out)
        lines = out.read_text().splitlines()
        assert lines[0] == ENSEMBLE_HEADER
        cols = read_ensemble_csv(out)
        np.testing.assert_array_equal(cols["event_index"], stats.event_index)
        np.testing.assert_allclose(cols["mean_entropy"], stats.mean_entropy, rtol=1e-15)
        np.testing.assert_allclose(cols["std_entropy"], stats.std_entropy, rtol=1e-15)

    def test_theta_empty_unless_scatter(self, tmp_path):
        rec = self.make_record(n_photons=40, seed=6)
        out = tmp_path / "t.csv"
        write_trajectory_csv(rec, out)
        for line in out.read_text().splitlines()[1:]:
            parts = line.split(",")
            channel, theta = parts[2], parts[3]
            if channel == "S":
                assert theta != ""
            else:
                assert theta == ""


class TestCliCommands:
    def run_cli(self, argv):
        return main(argv)

    def test_run_byte_identical(self, minimal_config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        base = [
            "run",
            "--config",
            str(minimal_config),
            "--n_photons_total",
            "60",
            "--n_photons_before_rotation",
            "30",
            "--base_seed",
            "7",
        ]
        assert self.run_cli(base + ["--output_dir", str(out1)]) == 0
        assert self.run_cli(base + ["--output_dir", str(out2)]) == 0
        assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()

    def test_ensemble_parallelism_equivalent(self, minimal_config, tmp_path):
        out1, out2 = tmp_path / "p1", tmp_path / "p8"
        base = [
            "ensemble",
            "--config",
            str(minimal_config),
            "--n_photons_total",
            "40",
            "--n_photons_before_rotation",
            "20",
            "--n_trajectories",
            "6",
            "--n_atoms",
            "6",
        ]
        assert self.run_cli(base + ["--output_dir", str(out1), "--parallelism", "1"]) == 0
        assert self.run_cli(base + ["--output_dir", str(out2), "--parallelism", "8"]) == 0
        a = read_ensemble_csv(out1 / "ensemble.csv")
        b = read_ensemble_csv(out2 / "ensemble.csv")
        np.testing.assert_allclose(a["mean_entropy"], b["mean_entropy"], atol=1e-12)
        assert (out1 / "ensemble.csv").read_bytes() == (out2 / "ensemble.csv").read_bytes()

    def test_compare_outputs_and_pairing(self, minimal_config, tmp_path):
        out = tmp_path / "cmp"
        rc = self.run_cli(
            [
                "compare",
                "--config",
                str(minimal_config),
                "--n_photons_total",
                "30",
                "--n_photons_before_rotation",
                "15",
                "--n_trajectories",
                "3",
                "--n_atoms",
                "6",
                "--output_dir",
                str(out),
            ]
        )
        assert rc == 0
        for name in ("ensemble_ideal.csv", "ensemble_scatter.csv", "compare.csv", "summary.json"):
            assert (out / name).is_file()
        lines = (out / "compare.csv").read_text().splitlines()
        assert lines[0] == "event_index,mean_entropy_ideal,mean_entropy_scatter,entropy_difference"
        ideal = read_ensemble_csv(out / "ensemble_ideal.csv")
        scatter = read_ensemble_csv(out / "ensemble_scatter.csv")
        row = lines[1].split(",")
        assert float(row[3]) == pytest.approx(
            ideal["mean_entropy"][0] - scatter["mean_entropy"][0], abs=1e-15
        )

    def test_compare_requires_scattering(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("n_atoms=4\ndelta_tau=0.1\nprotocol=continuous\nn_photons=5\n")
        assert self.run_cli(["compare", "--config", str(cfg), "--output_dir", str(tmp_path / "x")]) == 1

    def test_summary_json_contents(self, minimal_config, tmp_path):
        out = tmp_path / "s"
        self.run_cli(
            [
                "run",
                "--config",
                str(minimal_config),
                "--n_photons_total",
                "25",
                "--n_photons_before_rotation",
                "10",
                "--output_dir",
                str(out),
            ]
        )
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["n_photons_total"] == 25
        counts = summary["channel_counts"]
        assert counts["plus"] + counts["minus"] + counts["scatter"] == 25
        assert "clamp_events" in summary and "wall_time_s" in summary

    def test_config_error_reported_machine_readable(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n_atoms=4\ndelta_tau=9.99\nprotocol=continuous\nn_photons=5\n")
        rc = self.run_cli(["run", "--config", str(cfg), "--output_dir", str(tmp_path / "o")])
        assert rc == 1
        err = capsys.readouterr().err.strip().splitlines()[-1]
        payload = json.loads(err)
        assert payload["error"] == "configuration"
        assert "delta_tau" in payload["message"]

    def test_selftest_exits_zero(self):
        assert self.run_cli(["selftest"]) == 0


class TestConsoleScript:
    def test_entry_point_runs(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(
            "n_atoms=3\ndelta_tau=0.1\nprotocol=continuous\nn_photons=4\nseed=1\n"
        )
        env = dict(os.environ, **{OUTPUT_DIR_ENV: str(tmp_path / "out")})
        proc = subprocess.run(
            [sys.executable, "-m", "spinpair.cli", "run", "--config", str(cfg)],
            capture_output=True,
            text=True,
            env=env,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "out" / "trajectory.csv").is_file()
