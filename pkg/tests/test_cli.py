import subprocess
import sys

import pytest

from partcons import cli
from partcons.consensus import Verdict


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_distance(capsys):
    code, out, _ = run(capsys, "distance", "--a", "{ {1,2} {3} }", "--b", "{ {1} {2} {3} }")
    assert code == 0
    assert out.splitlines() == ["unCD 1", "CD 1/3"]


def test_distance_power_and_rgs(capsys):
    code, out, _ = run(capsys, "distance", "--a", "0,0,0,0", "--b", "0,1,2,3", "--distance", "power:2")
    assert code == 0 and out.splitlines() == ["unCD 6", "CD 1", "power:2 36"]


def test_consensus_n3(capsys):
    code, out, _ = run(capsys, "consensus", "--universe", "full", "--n", "3")
    assert code == 0
    assert "consensus { {1} {2} {3} }" in out
    assert "avg 1.5" in out and "unique yes" in out


def test_consensus_from_file(capsys, tmp_path):
    f = tmp_path / "refs.txt"
    f.write_text("{ {1,2} {3} }\n{ {1,2} {3} }\n{ {1} {2,3} }\n")
    code, out, _ = run(capsys, "consensus", "--refs", str(f))
    assert code == 0 and "consensus { {1, 2} {3} }" in out


def test_verify_theorem1_pass(capsys):
    code, out, err = run(capsys, "verify", "--theorem1", "--n", "6")
    assert code == 0
    assert out.startswith("PASS theorem1 n=6")
    assert "config:" in err  # effective configuration is logged


def test_verify_all_checks(capsys):
    code, out, _ = run(capsys, "verify", "--theorem2", "--lemmas", "--kmax-lemmas", "--reduct-groups", "--n", "4-5", "--k-max", "3")
    assert code == 0
    assert out and all(line.startswith("PASS") for line in out.splitlines())


def test_verify_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli.cons, "verify_theorem1", lambda n: Verdict("theorem1", n, False, "forced"))
    code, out, _ = run(capsys, "verify", "--theorem1", "--n", "3")
    assert code == 2 and out.startswith("FAIL")


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["distance", "--a", "0,1"],
        ["verify", "--n", "3"],
        ["verify", "--theorem1", "--frobnicate"],
        ["experiment", "--n", "4"],
        ["distance", "--a", "{ {1} }", "--b", "{ {1} {2} }"],
        ["enumerate", "--n", "4", "--universe", "kmax"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and err


def test_enumerate(capsys, tmp_path):
    code, out, _ = run(capsys, "enumerate", "--n", "4", "--universe", "structured(1,3)")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# n=4 constraint=structured(1,3) count=5" and len(lines) == 6
    code, out, _ = run(capsys, "enumerate", "--n", "7", "--universe", "kmax(4)", "--count")
    assert out.strip() == "715"
    dest = tmp_path / "u.txt"
    code, out, _ = run(capsys, "enumerate", "--n", "3", "--format", "rgs", "--out", str(dest))
    assert code == 0 and dest.read_text().splitlines()[1:] == ["0,0,0", "0,0,1", "0,1,0", "0,1,1", "0,1,2"]


def test_narrow(capsys):
    code, out, _ = run(capsys, "narrow", "--n", "4")
    lines = out.splitlines()
    assert code == 0 and [l.split(" (")[1].split(")")[0] for l in lines] == ["5", "2", "1"]
    assert lines[-1] == "C_2 (1): { {1} {2} {3} {4} }"


def test_metacluster_pam(capsys):
    code, out, _ = run(capsys, "metacluster", "--n", "4", "--k", "2")
    assert code == 0
    assert "size=2 center={ {1} {2, 3, 4} }" in out
    assert "size=13 center={ {1} {2} {3} {4} }" in out


def test_metacluster_kmeans_and_sample(capsys):
    code, out, _ = run(capsys, "metacluster", "--n", "4", "--algorithm", "kmeans", "--seeds", "0-2")
    assert code == 0 and out.count("variance_explained=") == 3
    code, out, _ = run(capsys, "metacluster", "--n", "5", "--fraction", "20%", "--force-total-separation")
    assert code == 0 and "items=11" in out


def test_experiment_csv(capsys):
    code, out, _ = run(capsys, "experiment", "--table", "T1", "--n", "5", "--fraction", "0.2", "--trials", "100", "--seed", "42", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[1].startswith("5,52,10,20,")
    assert lines[-1] == "# table=T1 seed=42 trials=100"


def test_experiment_config_and_out(capsys, tmp_path):
    cfg = tmp_path / "batch.ini"
    cfg.write_text("trials = 30\n[a]\ntable = T3\nn = 4\nfraction = 100%\n[b]\ntable = T6\nn = 4\nfraction = 50%\n")
    dest = tmp_path / "out.md"
    code, _, _ = run(capsys, "experiment", "--config", str(cfg), "--format", "markdown", "--out", str(dest))
    text = dest.read_text()
    assert code == 0 and "| 4 | 5 | 5 | 100 | 0 | 100 |" in text and "| 4 | 6 | 3 | 50 |" in text


def test_experiment_published_subset(capsys):
    code, out, _ = run(capsys, "experiment", "--published", "--tables", "T3", "--trials", "20")
    assert code == 0 and out.count("\n4,") == 2


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "partcons", "--log-level", "WARNING", "distance", "--a", "0,0", "--b", "0,1"],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0 and res.stdout.splitlines() == ["unCD 1", "CD 1"]


def test_help_exits_zero(capsys):
    assert cli.main(["--help"]) == 0
