from __future__ import annotations

import json

import pytest

from bubbleglue import cli
from bubbleglue.artifacts import read_csv
from bubbleglue.fixtures import load_fixture_json


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)
    return tmp_path, write


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_kernel_command(files, capsys):
    _, write = files
    m = write("m.json", load_fixture_json("chain_n2"))
    code, out, _ = run(["kernel", "--input", m], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["command"] == "kernel" and doc["format_version"] == 1
    assert doc["result"]["matched_dimension"] == doc["result"]["index_half"]
    assert all(c["dimension"] == c["expected"] for c in doc["result"]["components"].values())


def test_glue_and_correct(files, capsys):
    tmp, write = files
    m = write("m.json", load_fixture_json("chain_n1"))
    nk = write("n.json", {"necks": [{"node": 1, "v": [1e-3, 0]}]})
    code, out, _ = run(["glue", "--input", m, "--necks", nk], capsys)
    assert code == 0 and json.loads(out)["result"]["holomorphic_defect_off_necks"] < 1e-8
    cfg = write("c.json", {"seed": 0, "grid": {"ds": 0.05, "n_theta": 32}})
    emit = tmp / "out.json"
    code, _, _ = run(["correct", "--input", m, "--necks", nk, "--config", cfg, "--emit", str(emit)], capsys)
    assert code == 0
    res = json.loads(emit.read_text())["result"]
    assert res["terminal_contraction"] <= 0.9 and "runtime_s" not in res
    # one Picard step at a tight tolerance is a numerical failure
    code, _, err = run(["correct", "--input", m, "--necks", nk, "--config", cfg, "--max-iter", "1", "--tol", "1e-15"], capsys)
    assert code == 1 and "numerical failure" in err


def test_inadmissible_and_invalid_input(files, capsys):
    _, write = files
    m = write("m.json", load_fixture_json("star"))
    nk = write("n.json", {"necks": [{"node": 1, "v": 0.01}, {"node": 2, "v": 0.01}]})
    code, _, err = run(["glue", "--input", m, "--necks", nk], capsys)
    assert code == 2 and "inadmissible" in err and "r_C" in err
    bad = write("b.json", {"necks": [{"node": 1}]})
    code, _, err = run(["glue", "--input", m, "--necks", bad], capsys)
    assert code == 2 and "/necks/0" in err
    code, _, err = run(["kernel", "--input", "/nonexistent.json"], capsys)
    assert code == 2


def test_balance_command(files, capsys):
    _, write = files
    m = write("m.json", load_fixture_json("star"))
    code, out, _ = run(["balance", "--input", m], capsys)
    assert code == 0
    after = json.loads(out)["result"]["after"]
    assert all(abs(a["psi3"]) < 1e-9 for a in after.values())


def test_schedule_parsing():
    assert cli.parse_schedule("1e-2:1e-4:3log") == pytest.approx([1e-2, 1e-3, 1e-4])
    assert cli.parse_schedule("0:1:3lin") == [0.0, 0.5, 1.0]
    assert cli.parse_schedule("1e-3, 2e-3") == [1e-3, 2e-3]
    for bad in ("1:2", "1:2:3x", "0:1:3log"):
        with pytest.raises(cli.InputError):
            cli.parse_schedule(bad)


@pytest.mark.slow
def test_sweep_serial_and_parallel_agree(files, capsys, monkeypatch):
    tmp, write = files
    m = write("m.json", load_fixture_json("chain_n1"))
    cfg = write("c.json", {"seed": 0, "grid": {"ds": 0.05, "n_theta": 32}})
    args = ["sweep", "--input", m, "--config", cfg, "--schedule", "1e-3:1e-4:2log"]
    monkeypatch.setenv("BUBBLEGLUE_THREADS", "1")
    code, serial, _ = run(args, capsys)
    assert code == 0
    monkeypatch.setenv("BUBBLEGLUE_THREADS", "2")
    code, parallel, _ = run(args, capsys)
    assert code == 0 and serial == parallel
    config, rows = read_csv(serial)
    assert config["seed"] == 0 and len(rows) == 2 and rows[0]["error"] == ""
    code, _, _ = run(["sweep", "--input", m, "--config", cfg, "--schedule", "0.5"], capsys)
    assert code == 1
