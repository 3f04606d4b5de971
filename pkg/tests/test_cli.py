import csv
import json
import math
import subprocess
import sys

import pytest

from morseqm.cli import EXIT_CERTIFICATE, EXIT_ERROR, run


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_example33_table(tmp_path):
    assert run(["example33", "--n-max", "20", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "example33.csv")
    assert list(rows[0]) == ["n", "D_in", "D_out", "cr_in", "cr_out"]
    assert len(rows) == 20
    for row in rows:
        n = int(row["n"])
        assert float(row["D_in"]) == 1.0
        assert float(row["D_out"]) == math.sqrt(4 * n * n + 1)
        assert float(row["cr_in"]) == math.sqrt(2) - 1
        assert float(row["cr_out"]) == math.sqrt((2 * n + 1) ** 2 + 1) - 1
        assert float(row["cr_out"]) > 2 * n - 1
    summary = json.loads((tmp_path / "example33.json").read_text())
    assert summary["schema"] == "morseqm/example33/1" and summary["command"] == "example33"


def test_qm_identity_slope_one(tmp_path):
    assert run(["qm", "--map", "identity", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "qm.json").read_text())
    assert summary["slope"] == pytest.approx(1.0, abs=1e-9)


def test_qm_swap_slope_grows(tmp_path):
    assert run(["qm", "--map", "swap", "--n", "5", "10", "20", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "qm.csv")
    assert rows


def test_extend_swap_exits_with_certificate(tmp_path):
    code = run(["extend", "--map", "swap", "--window", "6", "--step", "2", "--spikes", "2",
                "--rays", "4", "--out", str(tmp_path)])
    assert code == EXIT_CERTIFICATE != 0
    summary = json.loads((tmp_path / "extend.json").read_text())
    assert summary["certificate"]


def test_extend_identity_succeeds(tmp_path):
    assert run(["extend", "--map", "identity", "--window", "4", "--step", "2", "--spikes", "2",
                "--rays", "4", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "extend.csv")
    assert {"x", "h", "pi_diameter"} <= set(rows[0])


def test_unknown_subcommand(tmp_path, capsys):
    assert run(["frobnicate", "--out", str(tmp_path)]) == EXIT_ERROR
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["error"] == "unknown-subcommand"


def test_missing_subcommand():
    assert run([]) == EXIT_ERROR


def test_malformed_space_config(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("space = tree\ndegree = four\n")
    assert run(["centers", "--space", str(cfg), "--out", str(tmp_path)]) == EXIT_ERROR
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "error" in rec and "message" in rec
    assert (tmp_path / "error.json").exists()


def test_malformed_arguments(tmp_path):
    assert run(["crossratio", "--tuple", "0,0;1,0;0,1", "--out", str(tmp_path)]) == EXIT_ERROR
    assert run(["extend", "--R", "-1", "--out", str(tmp_path)]) == EXIT_ERROR
    assert run(["qm", "--map", "nowhere.cfg", "--out", str(tmp_path)]) == EXIT_ERROR


def test_tuples_csv_input(tmp_path):
    src = tmp_path / "tuples.csv"
    src.write_text("am,an,bm,bn,cm,cn,dm,dn\n5,0,6,0,5,1,6,1\n-5,0,-6,0,5,1,6,1\n")
    assert run(["crossratio", "--tuples-csv", str(src), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "crossratio.csv")
    assert float(rows[0]["paulin"]) == math.sqrt(2) - 1
    assert float(rows[1]["paulin"]) == math.sqrt(122) - 1
    for row in rows:
        assert float(row["difference"]) <= float(row["bound"]) + 1e-9


def test_tree_crossratio(tmp_path):
    cfg = tmp_path / "tree.cfg"
    cfg.write_text("space = tree\ndegree = 4\ndepth_cap = 6\n")
    assert run(["crossratio", "--space", str(cfg), "--tuple", "0(0);1(1);2(2);3(3)",
                "--out", str(tmp_path)]) == 0
    row, = read_csv(tmp_path / "crossratio.csv")
    assert float(row["difference"]) == 0.0 and float(row["min_flip_value"]) == 0.0


def test_same_seed_byte_identical(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for out, seed in ((a, "3"), (b, "3"), (c, "4")):
        assert run(["crossratio", "--random", "6", "--seed", seed, "--out", str(out)]) == 0
    assert (a / "crossratio.csv").read_bytes() == (b / "crossratio.csv").read_bytes()
    assert (a / "crossratio.csv").read_bytes() != (c / "crossratio.csv").read_bytes()


def test_workers_give_same_output(tmp_path):
    for out, w in ((tmp_path / "one", "1"), (tmp_path / "two", "2")):
        assert run(["centers", "--random", "6", "--seed", "1", "--workers", w, "--out", str(out)]) == 0
    assert (tmp_path / "one" / "centers.csv").read_bytes() == (tmp_path / "two" / "centers.csv").read_bytes()


def test_stability_swap_verdict(tmp_path):
    assert run(["stability", "--map", "swap", "--n-max", "30", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "stability.json").read_text())
    assert summary["verdict"] == "growth-detected" and summary["witnesses"]


def test_contracting_rows(tmp_path):
    assert run(["contracting", "--n-max", "3", "--bruteforce-max", "1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "contracting.csv")
    assert [float(r["D_analytic"]) for r in rows[::2]] == [1.0, 1.0, 1.0]
    assert [float(r["D_analytic"]) for r in rows[1::2]] == [math.sqrt(4 * n * n + 1) for n in (1, 2, 3)]
    assert float(rows[0]["D_bruteforce"]) <= 1.0 and rows[2]["D_bruteforce"] == ""


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "morseqm", "example33", "--n-max", "2",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0 and (tmp_path / "example33.csv").exists()
