"""End-to-end CLI behavior: subcommands, outputs, determinism, exit codes."""

import json
import subprocess
import sys

import pytest

from rwz.cli import main

TOY_TEXT = """\
p_v_variance = 0.28
rate_r2_bits_per_sample = 0.9531
epsilon_entropy_gap_bits = 0.005
side_info = gaussian(0.0,1.0)
n_samples = 1000
blocks = 2
seed = 0
threads = 1
a_eps_modulo = 3.0
a_p_modulo = 4.2
stage1_prior_variance = 0.185
stage1_gamma1 = 0.999
stage1_max_iters = 1500
stage1_restart_increment = 1e-4
stage1_max_restarts = 8
stage2_prior_variance = 0.0712
stage2_gamma1 = 0.9995
stage2_max_iters = 2000
stage2_restart_increment = 5e-5
stage2_max_restarts = 8
decode_max_iters = 150
decode_noise_variance = 0.2877
"""

RUN_CSV_HEADER = ("block,mse,encoder_converged,decoder_converged,"
                  "stage1_restarts,stage2_restarts,symbol_errors")


@pytest.fixture(scope="module")
def toy_cfg_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "toy.cfg"
    path.write_text(TOY_TEXT)
    return str(path)


def _cfg_with(tmp_path, extra, name="case.cfg", base=TOY_TEXT):
    path = tmp_path / name
    path.write_text(base + extra)
    return str(path)


@pytest.fixture(scope="module")
def run_out(toy_cfg_path, tmp_path_factory):
    out = tmp_path_factory.mktemp("run_out")
    rc = main(["run", "--config", toy_cfg_path, "--out", str(out)])
    assert rc == 0
    return out


class TestRun:
    def test_outputs_exist(self, run_out):
        assert (run_out / "run_blocks.csv").exists()
        assert (run_out / "run_summary.json").exists()

    def test_block_csv_shape(self, run_out):
        lines = (run_out / "run_blocks.csv").read_text().strip().splitlines()
        assert lines[0] == RUN_CSV_HEADER
        assert len(lines) == 1 + 2
        assert lines[1].startswith("0,")
        assert lines[2].startswith("1,")

    def test_summary_json(self, run_out):
        payload = json.loads((run_out / "run_summary.json").read_text())
        assert set(payload) == {"config", "report"}
        assert payload["config"]["n_samples"] == "1000"
        assert payload["config"]["a_p_modulo"] == "4.2"
        rep = payload["report"]
        assert rep["blocks"] == 2
        assert rep["n"] == 1000
        assert rep["mse"] > 0
        assert "per_block" not in rep

    def test_stdout_summary_line(self, toy_cfg_path, tmp_path, capsys):
        rc = main(["run", "--config", toy_cfg_path, "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.startswith("blocks=2 n=1000 mse=")
        assert "loss_db=" in out
        assert "decoder_convergence=" in out

    def test_byte_identical_reruns_and_threads(self, toy_cfg_path, tmp_path,
                                               run_out):
        o2 = tmp_path / "o2"
        o3 = tmp_path / "o3"
        assert main(["run", "--config", toy_cfg_path,
                     "--out", str(o2)]) == 0
        assert main(["run", "--config", toy_cfg_path, "--threads", "2",
                     "--out", str(o3)]) == 0
        ref_csv = (run_out / "run_blocks.csv").read_bytes()
        assert (o2 / "run_blocks.csv").read_bytes() == ref_csv
        assert (o3 / "run_blocks.csv").read_bytes() == ref_csv

    def test_seed_override_changes_blocks(self, toy_cfg_path, tmp_path,
                                          run_out):
        o2 = tmp_path / "seeded"
        # a different seed may trip the divergence exit on a 2-block toy run;
        # outputs are written either way
        rc = main(["run", "--config", toy_cfg_path, "--seed", "1",
                   "--out", str(o2)])
        assert rc in (0, 4)
        assert ((o2 / "run_blocks.csv").read_bytes()
                != (run_out / "run_blocks.csv").read_bytes())
        payload = json.loads((o2 / "run_summary.json").read_text())
        assert payload["config"]["seed"] == "1"


class TestDesign:
    def test_design_skipping_measurement(self, tmp_path, capsys):
        cfg = _cfg_with(tmp_path, (
            "probe_blocks = 0\n"
            "sigma2_n_eps_variance = 0.185\n"
            "d2_eps_variance = 0.0577\n"))
        out = tmp_path / "design_out"
        rc = main(["design", "--config", cfg, "--out", str(out)])
        assert rc == 0
        table = capsys.readouterr().out
        assert "A_p_bound" in table
        assert (out / "design.txt").read_text() == table
        report = json.loads((out / "design.json").read_text())
        assert report["A_eps"] == pytest.approx(3.0000568904946707, abs=1e-9)
        assert report["A_p"] >= report["A_p_bound"]
        assert report["A_p"] - report["A_p_bound"] < 0.01 + 1e-9
        assert report["final_mse"] is None
        assert report["epsilon1"] < 0.005

    def test_design_without_stated_modulo(self, tmp_path):
        base = TOY_TEXT.replace("a_eps_modulo = 3.0\n", "")
        cfg = _cfg_with(tmp_path, (
            "probe_blocks = 0\n"
            "sigma2_n_eps_variance = 0.185\n"
            "d2_eps_variance = 0.0577\n"), base=base)
        out = tmp_path / "design_out2"
        rc = main(["design", "--config", cfg, "--out", str(out)])
        assert rc == 0
        report = json.loads((out / "design.json").read_text())
        # the flow pins the modulo to the realized code rate either way
        assert report["A_eps"] == pytest.approx(3.0000568904946707, abs=1e-9)


class TestBench:
    def test_mod_component(self, tmp_path, capsys):
        rc = main(["bench", "--component", "mod", "--sizes", "64,256",
                   "--reps", "2", "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        lines = out.strip().splitlines()
        assert lines[0] == "component,n,reps,seconds_per_iteration"
        assert len(lines) == 3
        assert lines[1].startswith("mod,64,2,")
        assert lines[2].startswith("mod,256,2,")
        assert (tmp_path / "bench_mod.csv").read_text() == out

    def test_empty_sizes_header_only(self, capsys):
        rc = main(["bench", "--component", "llr", "--sizes", ""])
        assert rc == 0
        out = capsys.readouterr().out
        assert out == "component,n,reps,seconds_per_iteration\n"

    def test_llr_component(self, capsys):
        rc = main(["bench", "--component", "llr", "--sizes", "512",
                   "--reps", "1"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("llr,512,1,")
        assert float(lines[1].split(",")[3]) > 0

    def test_bp_and_rbp_components(self, capsys):
        rc = main(["bench", "--component", "bp", "--sizes", "1000",
                   "--reps", "1"])
        assert rc == 0
        bp_line = capsys.readouterr().out.strip().splitlines()[1]
        assert bp_line.startswith("bp,1000,1,")
        rc = main(["bench", "--component", "rbp", "--sizes", "1000",
                   "--reps", "1"])
        assert rc == 0
        rbp_line = capsys.readouterr().out.strip().splitlines()[1]
        assert rbp_line.startswith("rbp,1000,1,")
        assert float(bp_line.split(",")[3]) > 0
        assert float(rbp_line.split(",")[3]) > 0


class TestQuantizeBench:
    def test_rows_and_summary(self, toy_cfg_path, tmp_path, capsys):
        rc = main(["quantize-bench", "--config", toy_cfg_path,
                   "--out", str(tmp_path), "--blocks", "1"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "shaping loss" in out
        assert "stage2 mean distortion" in out
        lines = ((tmp_path / "quantize_bench.csv").read_text()
                 .strip().splitlines())
        assert lines[0] == "stage,n,iterations,restarts,distortion,budget"
        assert len(lines) == 3
        assert lines[1].startswith("ldpc,1000,")
        assert lines[2].startswith("ldgm,1000,")
        dist = float(lines[1].split(",")[4])
        budget = float(lines[1].split(",")[5])
        assert 0 < dist < 4 * budget


class TestChannelBench:
    def test_threshold_outputs(self, tmp_path, capsys):
        cfg = _cfg_with(tmp_path, (
            "ber_target = 0.01\n"
            "threshold_blocks = 4\n"
            "threshold_var_tol = 0.05\n"))
        cfg_text = open(cfg).read().replace("decode_max_iters = 150",
                                            "decode_max_iters = 60")
        open(cfg, "w").write(cfg_text)
        out = tmp_path / "chan"
        rc = main(["channel-bench", "--config", cfg, "--out", str(out)])
        assert rc == 0
        assert "noise threshold variance" in capsys.readouterr().out
        probes = (out / "channel_probes.csv").read_text().strip().splitlines()
        assert probes[0] == "noise_var,ber,blocks,errors"
        assert len(probes) >= 3
        summary = json.loads((out / "channel_threshold.json").read_text())
        assert summary["ber_target"] == 0.01
        assert summary["n"] == 1000
        assert summary["blocks_per_probe"] == 4
        assert 0 < summary["threshold_variance"] < summary["modulo"] ** 2


class TestExitCodes:
    def test_missing_config_exits_2(self, tmp_path, capsys):
        rc = main(["run", "--config", str(tmp_path / "nope.cfg")])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_malformed_config_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("blocks = zero\n")
        rc = main(["run", "--config", str(bad)])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_run_without_moduli_exits_2(self, tmp_path, capsys):
        base = TOY_TEXT.replace("a_eps_modulo = 3.0\n", "")
        base = base.replace("a_p_modulo = 4.2\n", "")
        cfg = _cfg_with(tmp_path, "", base=base)
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_infeasible_design_exits_3(self, tmp_path, capsys):
        base = TOY_TEXT.replace("epsilon_entropy_gap_bits = 0.005",
                                "epsilon_entropy_gap_bits = 1e-12")
        cfg = _cfg_with(tmp_path, (
            "probe_blocks = 0\n"
            "sigma2_n_eps_variance = 0.185\n"
            "d2_eps_variance = 0.0577\n"), base=base)
        rc = main(["design", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 3
        assert "infeasible design" in capsys.readouterr().err

    def test_divergence_dominated_run_exits_4(self, tmp_path, capsys):
        base = TOY_TEXT
        for old, new in (("stage1_max_iters = 1500", "stage1_max_iters = 2"),
                         ("stage1_max_restarts = 8",
                          "stage1_max_restarts = 0"),
                         ("stage2_max_iters = 2000", "stage2_max_iters = 2"),
                         ("stage2_max_restarts = 8",
                          "stage2_max_restarts = 0")):
            base = base.replace(old, new)
        cfg = _cfg_with(tmp_path, "", base=base)
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 4
        assert "divergence-dominated" in capsys.readouterr().err


class TestConsoleScript:
    def test_installed_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "rwz.cli", "bench", "--component", "mod",
             "--sizes", "32", "--reps", "1"],
            capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0
        assert proc.stdout.startswith("component,n,reps,seconds_per_iteration")

    def test_console_script_on_path(self):
        proc = subprocess.run(["rwz", "--help"], capture_output=True,
                              text=True, timeout=120)
        assert proc.returncode == 0
        assert "design" in proc.stdout
        assert "quantize-bench" in proc.stdout
