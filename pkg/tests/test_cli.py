import csv
import io
import math
import subprocess
import sys

import pytest

from bellforge.cli import main, read_config_file, UsageError
from bellforge.optimize import analytic_theorem2_max


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_lhv_bound_output():
    code, text = run("lhv-bound", "--expr", "bell2")
    assert code == 0
    assert text.splitlines()[0] == "bound=3, strategies=64"
    assert run("lhv-bound", "--expr", "bell1")[1].startswith("bound=2,")


def test_lhv_bound_from_file(tmp_path):
    f = tmp_path / "custom.bell"
    f.write_text("P(111 : sum=0)\n")
    code, text = run("lhv-bound", "--expr-file", str(f))
    assert code == 0 and text.startswith("bound=1,")


def test_evaluate_presets():
    code, text = run("evaluate", "--state", "ghz:xi=pi/4", "--preset", "FIG1")
    assert code == 0
    assert "B=3.4485571" in text and "violated=true" in text
    code, text = run("evaluate", "--state", "ghz:xi=0", "--expr", "bell1", "--preset", "THM1", "--theta", "0")
    assert "B=2.0000000000" in text and "violated=false" in text


def test_evaluate_optimized_werner():
    code, text = run("evaluate", "--state", "werner:v=1", "--expr", "bell3", "--optimize", "--restarts", "8")
    value = float(text.split("B=")[1].split(",")[0])
    assert value == pytest.approx((1 + 3 * math.sqrt(2)) / 2, abs=1e-6)


@pytest.mark.parametrize("argv", [
    ("evaluate", "--state", "ghz:xi=pi/4", "--expr", "bell2", "--angles", "1,2"),
    ("evaluate", "--state", "ghz:xi=pi/4", "--expr", "bell2", "--angles", "a,b,c,d,e,f,g,h,i,j,k,l"),
    ("evaluate", "--state", "ghz:xi=pi/4", "--preset", "NOPE"),
    ("evaluate", "--state", "tri:xi=1", "--preset", "FIG1"),
    ("scan", "--grid", "0:1"),
    ("lhv-bound",),
    ("lhv-bound", "--expr", "bell7"),
])
def test_usage_errors_exit_2(argv):
    assert run(*argv)[0] == 2


def test_argparse_errors_exit_2():
    assert run("no-such-command")[0] == 2


def test_unwritable_output_exits_3(tmp_path):
    code, _ = run("scan", "--grid", "0:pi/2:2", "--restarts", "1", "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == 3


def test_scan_csv_format(tmp_path):
    out = tmp_path / "ghz.csv"
    plot = tmp_path / "ghz.gp"
    code, _ = run("scan", "--family", "ghz", "--grid", "0:pi/2:7", "--restarts", "2",
                  "--out", str(out), "--gnuplot", str(plot))
    assert code == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(io.StringIO(raw.decode())))
    assert rows[0] == ["param_1", "param_2", "bell_value", "classical_bound", "violated"]
    assert len(rows) == 8
    flags = [r[4] for r in rows[1:]]
    assert flags[0] == flags[-1] == "false"
    assert set(flags[1:-1]) == {"true"}
    assert rows[4][2] == "3.44855716"
    assert str(out) in plot.read_text()


def test_scan_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        run("scan", "--family", "ghz", "--grid", "0.1:0.5:3", "--restarts", "2", "--seed", "4", "--out", str(path))
    assert a.read_bytes() == b.read_bytes()


def test_w_scan_beta_half_pi_follows_theorem2_curve():
    code, text = run("scan", "--family", "w", "--beta", "pi/2", "--grid", "0.2:1.2:3", "--restarts", "4")
    rows = list(csv.reader(io.StringIO(text)))[1:]
    for beta, xi, value, _, _ in rows:
        assert float(value) == pytest.approx(analytic_theorem2_max(float(xi)), abs=1e-6)


def test_acin_scan_row_count():
    code, text = run("scan", "--family", "acin", "--samples", "3", "--restarts", "2")
    assert code == 0
    assert len(text.strip().splitlines()) == 4


def test_sample_command(tmp_path):
    out = tmp_path / "counts.csv"
    argv = ("sample", "--state", "ghz:xi=pi/4", "--preset", "FIG1", "--shots", "200", "--seed", "9", "--out", str(out))
    code, first = run(*argv)
    assert code == 0 and "B_hat=" in first and "stderr=" in first
    counts = out.read_text()
    _, second = run(*argv)
    assert first == second and counts == out.read_text()
    assert len(counts.splitlines()) == 1 + 64
    assert run("sample", "--state", "ghz:xi=pi/4", "--preset", "FIG1", "--shots", "0")[0] == 2


def test_werner_command():
    code, text = run("werner", "--restarts", "4")
    assert code == 0
    v = float(text.split("V_max=")[1].split()[0])
    assert v == pytest.approx(1 / math.sqrt(2), abs=1e-4)
    lo, hi = (float(x) for x in text.split("values=[")[1].split("]")[0].split(","))
    assert lo <= 2 < hi


def test_reduce_check_pass_and_negative_control():
    code, text = run("reduce-check")
    assert code == 0
    assert "symbolic: pass" in text and "embedding: pass" in text
    code, text = run("reduce-check", "--perturb")
    assert code == 1
    assert "symbolic: fail" in text and "P(11 : sum=1)" in text


def test_gisin_sweep_command(tmp_path):
    out = tmp_path / "g.csv"
    code, text = run("gisin-sweep", "--samples", "4", "--restarts", "2", "--out", str(out))
    assert code == 0 and "failures=0" in text
    assert len(out.read_text().splitlines()) == 5


def test_config_file_supplies_defaults_and_flags_win(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# evaluate defaults\nstate = ghz:xi=pi/4\npreset=FIG1\n")
    code, text = run("evaluate", "--config", str(cfg))
    assert code == 0 and "B=3.4485571" in text
    code, text = run("evaluate", "--config", str(cfg), "--state", "ghz:xi=0")
    assert "violated=false" in text


def test_config_file_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("stat=ghz:xi=0\n")
    with pytest.raises(UsageError):
        read_config_file(str(cfg))
    assert run("evaluate", "--config", str(cfg))[0] == 2
    cfg.write_text("restarts=many\n")
    assert run("evaluate", "--config", str(cfg))[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bellforge", "lhv-bound", "--expr", "bell3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("bound=2, strategies=16")
