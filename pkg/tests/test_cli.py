import subprocess
import sys

import pytest
from click.testing import CliRunner

from tournament_entropy.cli import main
from tournament_entropy.core import read_tournament
from tournament_entropy.harness import read_report


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args])


def test_gen(runner, tmp_path):
    out = tmp_path / "t.txt"
    res = invoke(runner, "gen", "--n", 6, "--seed", 4, "--out", out)
    assert res.exit_code == 0
    assert read_tournament(out).n == 6
    res = invoke(runner, "gen", "--n", 3, "--kind", "transitive")
    assert res.output.split("\n")[:4] == ["3", "1 2", "1 3", "2 3"]
    assert invoke(runner, "gen", "--n", 0).exit_code == 2


def test_replay_exit_codes(runner, tmp_path):
    assert invoke(runner, "replay", "--n", 4, "--out", tmp_path / "r.jsonl").exit_code == 0
    assert invoke(runner, "replay", "--n", 4, "--distribution", "uniform").exit_code == 1
    assert invoke(runner, "replay", "--epsilon", 0.9).exit_code == 2
    assert invoke(runner, "replay", "--format", "xml").exit_code == 2
    cycle = tmp_path / "c.txt"
    cycle.write_text("3\n1 2\n2 3\n3 1\n")
    res = invoke(runner, "replay", "--source", cycle, "--n", 3)
    assert res.exit_code == 3 and "at most 2 of 3" in res.output


def test_maxent_infeasible(runner, tmp_path):
    cycle = tmp_path / "c.txt"
    cycle.write_text("3\n1 2\n2 3\n3 1\n")
    assert invoke(runner, "maxent", "--source", cycle, "--n", 3, "--epsilon", 0.2).exit_code == 3
    assert invoke(runner, "maxent", "--source", cycle, "--n", 3, "--epsilon", 0.15).exit_code == 0


def test_transitive_and_decompose(runner, tmp_path):
    assert invoke(runner, "transitive", "--n", 4, "--format", "csv").exit_code == 0
    assert invoke(runner, "transitive", "--n", 6).exit_code == 2
    tree = tmp_path / "tree.txt"
    res = invoke(runner, "decompose", "--source", "random", "--n", 30, "--delta", 0.4, "--tree-out", tree)
    assert res.exit_code == 0 and tree.read_text().startswith("0 - root")


def test_config_file_and_override(runner, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 4\ndistribution = uniform\nformat = csv\n")
    out = tmp_path / "a.csv"
    assert invoke(runner, "replay", "--config", cfg, "--out", out).exit_code == 1
    assert read_report(out).summary()["hypothesis"] == "False"
    assert invoke(runner, "replay", "--config", cfg, "--distribution", "maxent", "--out", out).exit_code == 0
    assert read_report(out).summary()["hypothesis"] == "True"
    cfg.write_text("n = 4\nbogus = 1\n")
    assert invoke(runner, "replay", "--config", cfg).exit_code == 2


def test_report_conversion(runner, tmp_path):
    j, c = tmp_path / "r.jsonl", tmp_path / "r.csv"
    invoke(runner, "replay", "--n", 4, "--out", j)
    invoke(runner, "replay", "--n", 4, "--format", "csv", "--out", c)
    res = invoke(runner, "report", j, "--to", "csv")
    assert res.exit_code == 0 and res.output == c.read_text()
    res = invoke(runner, "report", j)
    assert "checks:" in res.output and "VACUOUS" in res.output
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"table": "node"}\n')
    assert invoke(runner, "report", bad).exit_code == 2


def test_reruns_are_byte_identical(runner, tmp_path):
    for fmt in ("jsonl", "csv"):
        paths = [tmp_path / f"{k}.{fmt}" for k in "ab"]
        for p in paths:
            invoke(runner, "replay", "--n", 4, "--samples", 500, "--seed", 9, "--format", fmt, "--out", p)
        assert paths[0].read_bytes() == paths[1].read_bytes()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tournament_entropy", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "0.1.0" in res.stdout
