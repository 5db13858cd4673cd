import csv
import json
import subprocess
import sys

import pytest

from chronoshed import cli, instances
from chronoshed.core import ActiveInstance, BusyInstance, Job


def _gen(tmp_path, kind, *params, name="inst.json"):
    path = tmp_path / name
    assert cli.main(["gen", "--kind", kind, "--out", str(path), "--params", *params]) == 0
    return path


def test_gen_writes_canonical_json_and_meta(tmp_path, capsys):
    meta = tmp_path / "meta.json"
    assert cli.main(["gen", "--kind", "tracking_gadget", "--params", "g=2", "eps=1/10", "--meta", str(meta)]) == 0
    out = capsys.readouterr().out
    assert instances.canonicalize(out) == out
    assert json.loads(meta.read_text())["optimum"] == "59/10"


def test_solve_lpround_report(tmp_path):
    inp = _gen(tmp_path, "integrality_gap", "g=2")
    out, rep = tmp_path / "s.json", tmp_path / "r.json"
    assert cli.main(["solve", "--algo", "lpround", "--in", str(inp), "--out", str(out), "--report", str(rep)]) == 0
    doc = json.loads(out.read_text())
    assert doc["kind"] == "active" and len(doc["active_slots"]) == 4 and doc["trace"]
    report = json.loads(rep.read_text())
    assert report["cost"] == "4" and report["oracle"] == "4"
    assert all(report["checks"].values())
    assert cli.main(["verify", "--in", str(inp), "--schedule", str(out)]) == 0


def test_solve_minimal_adversarial_order(tmp_path, capsys):
    inp = _gen(tmp_path, "tight_minimal", "g=4")
    svg = tmp_path / "g.svg"
    assert cli.main(["solve", "--algo", "minimal", "--in", str(inp), "--order", "5,8", "--svg", str(svg),
                     "--no-oracle"]) == 0
    captured = capsys.readouterr()
    assert len(json.loads(captured.out)["active_slots"]) == 10
    assert svg.read_text().startswith("<svg")


@pytest.mark.parametrize("algo", ["tracking", "busy3", "preempt-inf", "preempt-g"])
def test_busy_algorithms_verify(tmp_path, algo):
    inp = _gen(tmp_path, "random_busy", "n=6", "g=2", "seed=1",
               *(["interval_only=true"] if algo == "tracking" else []))
    out = tmp_path / "s.json"
    assert cli.main(["solve", "--algo", algo, "--in", str(inp), "--out", str(out),
                     "--report", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert all(report["checks"].values())
    assert cli.main(["verify", "--in", str(inp), "--schedule", str(out)]) == 0


def test_verify_catches_tampering(tmp_path, capsys):
    inp = _gen(tmp_path, "integrality_gap", "g=2")
    out = tmp_path / "s.json"
    cli.main(["solve", "--algo", "minimal", "--in", str(inp), "--out", str(out), "--no-oracle",
              "--report", str(tmp_path / "r.json")])
    doc = json.loads(out.read_text())
    doc["assignment"]["p0_0"] = [4]
    out.write_text(json.dumps(doc))
    assert cli.main(["verify", "--in", str(inp), "--schedule", str(out)]) == 3
    assert "outside its window" in capsys.readouterr().err


def test_verify_catches_bad_trace(tmp_path):
    inp = _gen(tmp_path, "integrality_gap", "g=2")
    out = tmp_path / "s.json"
    cli.main(["solve", "--algo", "lpround", "--in", str(inp), "--out", str(out), "--no-oracle",
              "--report", str(tmp_path / "r.json")])
    doc = json.loads(out.read_text())
    doc["trace"][0]["Y"] = "0"
    out.write_text(json.dumps(doc))
    assert cli.main(["verify", "--in", str(inp), "--schedule", str(out)]) == 3


def test_bound_command(tmp_path, capsys):
    inp = _gen(tmp_path, "clique", "n=5", "g=2")
    assert cli.main(["bound", "--in", str(inp)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["best"] == "3" and out["oracle"] == "3"


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "busy", "g": 1, "jobs": [{"id": "a", "r": 3, "d": 1, "p": 1}]}')
    assert cli.main(["bound", "--in", str(bad)]) == 1
    infeasible = tmp_path / "inf.json"
    instances.write(ActiveInstance([Job("a", 0, 1, 1), Job("b", 0, 1, 1)], 1), infeasible)
    assert cli.main(["solve", "--algo", "minimal", "--in", str(infeasible)]) == 2
    busy_inst = tmp_path / "busy.json"
    instances.write(BusyInstance([Job("a", 0, 1, 1)], 1), busy_inst)
    assert cli.main(["solve", "--algo", "minimal", "--in", str(busy_inst)]) == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["solve", "--algo", "nope", "--in", str(busy_inst)])
    assert info.value.code == 1
    assert cli.main(["gen", "--kind", "clique", "--params", "n"]) == 1
    capsys.readouterr()


def test_parse_params():
    assert cli.parse_params(["g=3", "eps=1/10", "flag=true", "cap=inf"]) == {
        "g": 3, "eps": instances.to_fraction("1/10"), "flag": True, "cap": None}


def test_bench_writes_csv(tmp_path):
    rows = cli.run_bench("named", tmp_path, svg=True)
    table = list(csv.DictReader(open(tmp_path / "named.csv")))
    assert len(table) == len(rows) and list(table[0]) == cli.CSV_COLUMNS
    adv = [r for r in table if r["algo"] == "minimal-adversarial"]
    assert adv and adv[0]["cost"] == "10" and adv[0]["oracle"] == "4"
    assert any(p.suffix == ".svg" for p in tmp_path.iterdir())


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "chronoshed", "gen", "--kind", "clique",
                           "--params", "n=2", "g=1"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["g"] == 1
