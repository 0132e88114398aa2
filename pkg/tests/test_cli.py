import json
from pathlib import Path

import numpy as np
import pytest

from noisyvqe.artifacts import (
    read_sweep_csv,
    read_trace_csv,
    write_sweep_csv,
    write_trace_csv,
)
from noisyvqe.cli import main
from noisyvqe.config import ConfigError, load_config
from noisyvqe.estimator import BackendConfig
from noisyvqe.experiment import SweepConfig, run_noise_sweep, run_vqe
from noisyvqe.optimize import NftConfig


def write(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


SWEEP_TOML = """
[run]
kind = "SWEEP"
output_dir = "{out}"
seed = 5

[ansatz]
kind = "RXYZ"

[optimizer]
name = "nft"
[optimizer.params]
sweeps = 2

[backend]
mode = "NOISY"
shots = 128
[backend.noise]
p_readout = 0.0

[sweep]
noise_axis = "READOUT"
intensities = [0.0, 0.05, 0.1]
repetitions = 2
ground_basin_start = true
"""


class TestConfigValidation:
    def test_unknown_key_exit_code_and_message(self, tmp_path, capsys):
        cfg = write(tmp_path / "bad.toml", SWEEP_TOML.format(out=tmp_path / "o").replace("shots", "shotz"))
        rc = main(["run", "--config", str(cfg)])
        assert rc == 2
        err = capsys.readouterr().err
        assert "shotz" in err
        assert "bad.toml:" in err

    def test_unknown_key_line_anchor(self, tmp_path):
        cfg = write(tmp_path / "bad.toml", SWEEP_TOML.format(out="o").replace("shots = 128", "shotz = 128"))
        with pytest.raises(ConfigError) as err:
            load_config(cfg)
        assert err.value.line is not None
        assert "shotz" in str(err.value)

    def test_bad_kind_rejected(self, tmp_path):
        cfg = write(tmp_path / "bad.toml", "[run]\nkind = \"NOPE\"\noutput_dir = \"x\"\n")
        with pytest.raises(ConfigError):
            load_config(cfg)

    def test_missing_required_section(self, tmp_path):
        cfg = write(tmp_path / "bad.toml", "[run]\nkind = \"SWEEP\"\noutput_dir = \"x\"\n")
        with pytest.raises(ConfigError):
            load_config(cfg)

    def test_hash_stable_under_key_order(self, tmp_path):
        a = load_config(write(tmp_path / "a.toml", "[run]\nkind = \"EXACT_SPECTRUM\"\noutput_dir = \"x\"\nseed = 1\n"))
        b = load_config(write(tmp_path / "b.toml", "[run]\nseed = 1\nkind = \"EXACT_SPECTRUM\"\noutput_dir = \"x\"\n"))
        assert a.config_hash() == b.config_hash()

    def test_json_config_accepted(self, tmp_path):
        cfg = write(
            tmp_path / "c.json",
            json.dumps({"run": {"kind": "EXACT_SPECTRUM", "output_dir": str(tmp_path / "o")}}),
        )
        assert main(["run", "--config", str(cfg)]) == 0


class TestRunKinds:
    def test_exact_spectrum(self, tmp_path):
        out = tmp_path / "spec"
        cfg = write(
            tmp_path / "c.toml",
            f"[run]\nkind = \"EXACT_SPECTRUM\"\noutput_dir = \"{out}\"\n",
        )
        assert main(["run", "--config", str(cfg)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["ground_energy"] == pytest.approx(-1.136189454088, abs=1e-6)
        assert len(summary["spectrum"]) == 16
        assert (out / "metadata.json").exists()

    def test_sweep_artifacts(self, tmp_path):
        out = tmp_path / "sweep"
        cfg = write(tmp_path / "c.toml", SWEEP_TOML.format(out=out))
        assert main(["run", "--config", str(cfg)]) == 0
        assert (out / "sweep.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert set(summary["stats"]) == {"0.0", "0.05", "0.1"}
        meta = json.loads((out / "metadata.json").read_text())
        assert "config_hash" in meta

    def test_vqe_and_recalc(self, tmp_path):
        out = tmp_path / "vqe"
        cfg = write(
            tmp_path / "c.toml",
            f"""
[run]
kind = "RECALC"
output_dir = "{out}"
seed = 3

[ansatz]
kind = "RY"

[optimizer]
name = "nft"
[optimizer.params]
sweeps = 2

[backend]
mode = "NOISY"
shots = 128
[backend.noise]
p_readout = 0.05

[vqe]
theta0 = [0.4, -0.2, 0.8, 0.1]
""",
        )
        assert main(["run", "--config", str(cfg)]) == 0
        assert (out / "trace.csv").exists()
        assert (out / "recalc.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert "final_recalc_energy" in summary

    def test_fit_from_sweep(self, tmp_path):
        out = tmp_path / "sweep"
        cfg = write(tmp_path / "c.toml", SWEEP_TOML.format(out=out))
        main(["run", "--config", str(cfg)])
        fit_out = tmp_path / "fit"
        fit_cfg = write(
            tmp_path / "f.toml",
            f"""
[run]
kind = "FIT"
output_dir = "{fit_out}"

[fit]
sweep_csv = "{out}"
model = "LINEAR"
""",
        )
        assert main(["run", "--config", str(fit_cfg)]) == 0
        fits = json.loads((fit_out / "summary.json").read_text())["fits"]
        assert "LINEAR" in fits

    def test_splitting_kind(self, tmp_path):
        out = tmp_path / "sweep"
        cfg_text = SWEEP_TOML.format(out=out).replace("repetitions = 2", "repetitions = 10")
        main(["run", "--config", str(write(tmp_path / "c.toml", cfg_text))])
        split_out = tmp_path / "split"
        split_cfg = write(
            tmp_path / "s.toml",
            f"""
[run]
kind = "SPLITTING"
output_dir = "{split_out}"

[splitting]
sweep_csv = "{out}"
intensity = 0.1
""",
        )
        assert main(["run", "--config", str(split_cfg)]) == 0
        summary = json.loads((split_out / "summary.json").read_text())
        assert summary["levels"] in (1, 2)

    def test_seed_override_changes_metadata(self, tmp_path):
        out = tmp_path / "spec"
        cfg = write(tmp_path / "c.toml", f"[run]\nkind = \"EXACT_SPECTRUM\"\noutput_dir = \"{out}\"\nseed = 1\n")
        main(["run", "--config", str(cfg), "--seed", "77"])
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["seed"] == 77


class TestReports:
    @pytest.fixture(scope="class")
    def sweep_dir(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("sweepdir")
        theta0 = tuple(np.linspace(-1, 1, 12))
        cfg = SweepConfig(
            "RXYZ", "nft", NftConfig(sweeps=2), "READOUT", (0.0, 0.1),
            repetitions=3, shots=128, seed_base=2, theta0=theta0,
        )
        res = run_noise_sweep(cfg)
        write_sweep_csv(out / "sweep.csv", res)
        return out

    def test_reports_render(self, sweep_dir, tmp_path):
        rc = main([
            "report", "--run-dir", str(sweep_dir),
            "--kinds", "heatmap,noise_curve,histogram",
            "--output-dir", str(tmp_path),
        ])
        assert rc == 0
        for name in ("heatmap.svg", "heatmap.txt", "noise_curve.svg", "histogram.svg"):
            assert (tmp_path / name).exists()

    def test_byte_identical_rerender(self, sweep_dir, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for d in (a, b):
            rc = main(["report", "--run-dir", str(sweep_dir), "--kinds", "noise_curve,heatmap", "--output-dir", str(d)])
            assert rc == 0
        for name in ("noise_curve.svg", "heatmap.svg"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_missing_artifact_exit_one(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        rc = main(["report", "--run-dir", str(empty), "--kinds", "heatmap"])
        assert rc == 1
        assert "sweep.csv" in capsys.readouterr().err

    def test_trace_report(self, tmp_path):
        trace = run_vqe("RY", "nft", NftConfig(sweeps=2), BackendConfig("EXACT"), np.zeros(4))
        run_dir = tmp_path / "run"
        run_dir.mkdir()
        write_trace_csv(run_dir / "trace.csv", trace)
        rc = main(["report", "--run-dir", str(run_dir), "--kinds", "trace"])
        assert rc == 0
        assert (run_dir / "trace.svg").exists()


class TestArtifactRoundtrips:
    def test_sweep_roundtrip(self, tmp_path):
        theta0 = tuple(np.linspace(-1, 1, 4))
        cfg = SweepConfig(
            "RY", "nft", NftConfig(sweeps=2), "READOUT", (0.0, 0.05),
            repetitions=2, shots=64, seed_base=9, theta0=theta0,
        )
        res = run_noise_sweep(cfg)
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, res)
        rows = read_sweep_csv(path)
        assert len(rows) == len(res.rows)
        for a, b in zip(rows, res.rows):
            assert a.intensity == b.intensity
            assert a.repetition == b.repetition
            assert a.final_energy == b.final_energy
            assert a.seed == b.seed
            assert np.array_equal(a.final_params, b.final_params)

    def test_trace_roundtrip(self, tmp_path):
        trace = run_vqe("UCCSD", "nft", NftConfig(sweeps=2), BackendConfig("EXACT"), np.zeros(3))
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace)
        again = read_trace_csv(path)
        assert len(again.records) == len(trace.records)
        for a, b in zip(again.records, trace.records):
            assert a.iteration == b.iteration
            assert a.energy == b.energy
            assert a.cumulative_evals == b.cumulative_evals
            assert np.array_equal(a.params, b.params)
