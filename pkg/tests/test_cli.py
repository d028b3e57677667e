import subprocess
import sys

import pytest

from graphfeedback import __version__
from graphfeedback.cli import main


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_help_lists_commands(capsys):
    with pytest.raises(SystemExit):
        main(["--help"])
    out = capsys.readouterr().out
    for cmd in ("simulate", "graph-stats", "verify"):
        assert cmd in out


def test_graph_stats(tmp_path, capsys):
    path = tmp_path / "g.txt"
    path.write_text("K 4\n3 0\n3 1\n3 2\n")
    assert main(["graph-stats", "--input", str(path)]) == 0
    out = capsys.readouterr().out
    assert "k: 4" in out and "arcs: 3" in out and "symmetric: no" in out
    assert "alpha: 3 (exact)" in out and "mas: 4 (exact)" in out
    assert "greedy dominating set: 1 [3]" in out


def test_verify_exit_codes(capsys):
    assert main(["verify", "--suite", "cover", "--trials", "50", "--max-k", "10"]) == 0
    assert main(["verify", "--suite", "er", "--trials", "10000", "--max-k", "10", "--r", "0.5"]) == 1
    assert main(["verify", "--suite", "er", "--trials", "10000", "--max-k", "10", "--symmetrize"]) == 0
    assert "coordinate sum" in capsys.readouterr().out


def test_simulate_writes_csv(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(
        "policy: {name: exp3dom}\nenvironment: {kind: bernoulli_gap, k: 4, graph: {kind: total_order}}\n"
        "horizon: 300\nrepetitions: 2\nseed: 1\nstride: 100\n"
    )
    out = tmp_path / "o.csv"
    assert main(["simulate", "--config", str(cfg), "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "round,mean_regret,std_regret,mean_player_loss,best_arm_loss" and len(lines) == 4


def test_errors_exit_two(tmp_path, capsys):
    assert main(["graph-stats", "--input", str(tmp_path / "missing.txt")]) == 2
    assert "error:" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "graphfeedback", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
