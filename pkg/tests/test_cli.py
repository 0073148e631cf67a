import numpy as np
import pytest

from admmnet import cli, reporting
from admmnet.config import parse_experiment_config
from admmnet.errors import ConfigParseError
from admmnet.graph import generate_graph, write_graph_file

K3_CONFIG = """
[graph]
kind = complete
n = 3

[objective]
preset = estimation

[admm]
c = 1.0
T = 200
engine = node
init = zero
"""


def write_config(tmp_path, text=K3_CONFIG, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_run_default_estimation_preset(tmp_path, capsys):
    rc = cli.main(["run", "--preset", "estimation", "--out", str(tmp_path / "out"), "--check-all"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "check sublinear: PASS" in out
    assert "check contraction: PASS" in out
    assert "check recurrence: PASS" in out
    assert "check psd: PASS" in out
    rows = reporting.read_trace_csv(tmp_path / "out" / "trace.csv")
    assert len(rows) == 200
    assert rows[-1]["obj_gap"] <= 1e-10
    assert (tmp_path / "out" / "report.txt").exists()


def test_run_config_file(tmp_path):
    cfg = write_config(tmp_path)
    rc = cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 0
    rows = reporting.read_trace_csv(tmp_path / "out" / "trace.csv")
    assert rows[0]["t"] == 1
    assert rows[0]["messages"] == 6


def test_run_single_round(tmp_path):
    cfg = write_config(tmp_path, K3_CONFIG.replace("T = 200", "T = 1"))
    rc = cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 0
    rows = reporting.read_trace_csv(tmp_path / "out" / "trace.csv")
    assert len(rows) == 1
    # x(1) = (1/7, 2/7, 3/7) gives a known distance to the optimum
    expect = sum((v - 2.0) ** 2 for v in (1.0 / 7.0, 2.0 / 7.0, 3.0 / 7.0))
    assert rows[0]["dist_sq"] == pytest.approx(expect, rel=1e-12)


def test_run_auto_penalty_and_edge_engine(tmp_path):
    text = K3_CONFIG.replace("c = 1.0", "c = auto").replace("engine = node", "engine = edge")
    cfg = write_config(tmp_path, text)
    rc = cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 0
    out = (tmp_path / "out" / "report.txt").read_text()
    assert "c=0.2581988897471611" in out
    assert "check recurrence: SKIP (node engine only)" in out


def test_spectra_table(capsys):
    rc = cli.main(["spectra", "--n", "3"])
    assert rc == 0
    out = capsys.readouterr().out
    header, values = out.strip().splitlines()
    assert header.split()[:4] == ["n", "d_max", "d_min", "a(G)"]
    assert values.split() == ["3", "2", "2", "3", "3", "6", "ok"]


def test_spectra_csv(tmp_path):
    out_csv = tmp_path / "spectra.csv"
    rc = cli.main(["spectra", "--n", "4", "--csv", str(out_csv)])
    assert rc == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "# admmnet-spectra v1"
    assert lines[1].startswith("n,d_max,d_min,a_G")


def test_spectra_graph_file(tmp_path, capsys):
    g = generate_graph("path", 3)
    path = tmp_path / "p3.txt"
    write_graph_file(g, path)
    rc = cli.main(["spectra", "--graph-file", str(path)])
    assert rc == 0
    values = capsys.readouterr().out.strip().splitlines()[1].split()
    assert values[0] == "3" and values[3] == "1"


def test_certify_output(capsys):
    rc = cli.main(["certify", "--n", "3", "--nu", "1", "--L", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "penalty_star=0.2581988897471611" in out
    assert "gain_star=0.38729833462074" in out
    assert "rate_star=0.72082548" in out


def test_check_subcommand_roundtrip(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    capsys.readouterr()
    rc = cli.main(["check", "--config", str(cfg), "--trace", str(tmp_path / "out" / "trace.csv")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "check replay: PASS" in out
    assert "check sublinear_objective: PASS" in out
    assert "check sublinear_feasibility: PASS" in out
    assert "check contraction: PASS" in out


def test_check_detects_tampering(tmp_path, capsys):
    cfg = write_config(tmp_path)
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
    trace = tmp_path / "out" / "trace.csv"
    lines = trace.read_text().splitlines()
    fields = lines[5].split(",")
    fields[1] = "99.0"  # objective gap that no run of this config produces
    lines[5] = ",".join(fields)
    trace.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    rc = cli.main(["check", "--config", str(cfg), "--trace", str(trace)])
    assert rc == 1
    assert "check replay: FAIL" in capsys.readouterr().out


def test_invalid_graph_file_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("3 1\n0 x\n")
    rc = cli.main(["spectra", "--graph-file", str(path)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "line 2" in err


def test_config_rejects_bad_engine(tmp_path):
    cfg = write_config(tmp_path, K3_CONFIG.replace("engine = node", "engine = ring"))
    with pytest.raises(ConfigParseError):
        parse_experiment_config(cfg)


def test_config_explicit_objective(tmp_path):
    text = """
[graph]
kind = path
n = 3

[objective]
kind = l1_quadratic
a = -1, 0, 2
w = 1
tau = 0.5

[admm]
c = 1.0
T = 50
"""
    cfg = write_config(tmp_path, text)
    parsed = parse_experiment_config(cfg)
    assert parsed.objective.preset is None
    assert parsed.objective.targets == ((-1.0,), (0.0,), (2.0,))
    rc = cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert rc == 0


def test_run_determinism_byte_identical(tmp_path):
    cfg = write_config(tmp_path)
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "trace.csv").read_bytes()
    b = (tmp_path / "b" / "trace.csv").read_bytes()
    assert a == b


def test_missing_config_errors(capsys):
    rc = cli.main(["run", "--out", "unused"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
