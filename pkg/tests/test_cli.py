import json
import subprocess
import sys
from pathlib import Path

import pytest

from causalbandits.cli import main

CONFIG_DIR = Path(__file__).resolve().parents[1] / "src" / "causalbandits" / "configs"


def run_cli(args):
    proc = subprocess.run(
        [sys.executable, "-m", "causalbandits.cli", *args],
        capture_output=True,
        text=True,
    )
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture
def tiny_cfg(tmp_path):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(
        "model: {kind: parallel, n: 2}\n"
        "policies:\n"
        "  - {kind: simple-nobackdoor}\n"
        "costs: {kind: uniform, c: 2}\n"
        "budgets: [40, 60]\n"
        "trials: 2\n"
        "base_seed: 9\n"
        "regret: simple\n"
    )
    return cfg


class TestInspectGraph:
    def test_reports_components(self, capsys):
        assert main(["inspect-graph", "confounded5"]) == 0
        out = capsys.readouterr().out
        assert "{X1, X2, X3, X5}, {X4}" in out
        assert "open backdoor" in out

    def test_no_backdoor_graph(self, tmp_path, capsys):
        path = tmp_path / "g.yaml"
        path.write_text("nodes: [A, B, Y]\ndirected: [A->Y, B->Y]\nreward: Y\n")
        assert main(["inspect-graph", str(path)]) == 0
        out = capsys.readouterr().out
        assert "no-backdoor graph: yes" in out

    def test_malformed_file(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("nodes: [A, Y]\ndirected: ['A - Y']\nreward: Y\n")
        assert main(["inspect-graph", str(path)]) == 3
        assert "error" in capsys.readouterr().err


class TestOracle:
    def test_parallel_defaults(self, capsys):
        assert main(["oracle", "--parallel", "5", "--budget", "10"]) == 0
        out = capsys.readouterr().out
        assert "do(X1=1)    0.800000" in out
        assert "observe    0.500000" in out

    def test_zero_budget(self, capsys):
        assert main(["oracle", "--parallel", "2", "--budget", "0", "--json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["rstar"] == 0.0

    def test_state_space_cap_exit_code(self, tmp_path, capsys):
        # a 26-node chain makes the reward depend on 25 binaries transitively,
        # which overflows the exact-enumeration cap: runtime error, exit 4
        import yaml

        names = [f"X{k}" for k in range(26)] + ["Y"]
        graph_path = tmp_path / "chain.yaml"
        graph_path.write_text(
            yaml.safe_dump(
                {
                    "nodes": names,
                    "directed": [f"{names[k]}->{names[k + 1]}" for k in range(26)],
                    "reward": "Y",
                }
            )
        )
        cpts = {"X0": {"parents": [], "rows": {"": [0.5, 0.5]}}}
        for k in range(1, 27):
            cpts[names[k]] = {
                "parents": [names[k - 1]],
                "rows": {"0": [0.6, 0.4], "1": [0.4, 0.6]},
            }
        model_path = tmp_path / "chain_model.yaml"
        model_path.write_text(yaml.safe_dump({"graph": "chain.yaml", "cpts": cpts}))
        assert main(["oracle", "--model", str(model_path), "--budget", "1"]) == 4
        assert "error" in capsys.readouterr().err


class TestRunAndSweep:
    def test_run_single_point(self, tiny_cfg, tmp_path, capsys):
        out = tmp_path / "report"
        assert main(["run", str(tiny_cfg), "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "simple-nobackdoor" in text
        assert (tmp_path / "report.csv").exists()
        csv_text = (tmp_path / "report.csv").read_text()
        assert "60" not in csv_text.splitlines()[1]  # only the first point ran

    def test_sweep_all_points_and_reproducible(self, tiny_cfg, tmp_path):
        out1 = tmp_path / "r1"
        out2 = tmp_path / "r2"
        assert main(["sweep", str(tiny_cfg), "--out", str(out1)]) == 0
        assert main(["sweep", str(tiny_cfg), "--out", str(out2)]) == 0
        assert (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r2.csv").read_bytes()
        lines = (tmp_path / "r1.csv").read_text().splitlines()
        assert len(lines) == 3  # header + two budget points

    def test_overrides(self, tiny_cfg, tmp_path, capsys):
        out = tmp_path / "r3"
        assert (
            main(["sweep", str(tiny_cfg), "--trials", "1", "--seed", "2", "--out", str(out)])
            == 0
        )
        csv_text = (tmp_path / "r3.csv").read_text()
        assert ",1," in csv_text  # trials column reflects the override

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("model: {kind: parallel, n: 2}\npolicies: []\nbudgets: [10]\n")
        assert main(["sweep", str(bad)]) == 3
        assert "error" in capsys.readouterr().err

    def test_missing_file_exit_code(self, capsys):
        assert main(["sweep", "/nonexistent/path.cfg"]) == 3

    def test_bundled_configs_parse(self):
        from causalbandits.harness import load_config

        for cfg in sorted(CONFIG_DIR.glob("*.cfg")):
            config = load_config(cfg)
            assert config.trials >= 1


class TestUsage:
    def test_unknown_flag_exit_two(self):
        code, _, err = run_cli(["oracle", "--bogus"])
        assert code == 2
        assert "usage" in err.lower()

    def test_no_command_exit_two(self):
        code, _, err = run_cli([])
        assert code == 2

    def test_help_lists_every_subcommand(self):
        code, out, _ = run_cli(["--help"])
        assert code == 0
        for cmd in ("inspect-graph", "oracle", "run", "sweep"):
            assert cmd in out

    def test_help_lists_flags(self):
        code, out, _ = run_cli(["sweep", "--help"])
        assert code == 0
        for flag in ("--seed", "--trials", "--out", "--jobs"):
            assert flag in out
        code, out, _ = run_cli(["oracle", "--help"])
        for flag in ("--model", "--parallel", "--xor", "--budget", "--cost", "--json"):
            assert flag in out

    def test_version(self):
        code, out, _ = run_cli(["--version"])
        assert code == 0
        assert "causalbandits" in out
