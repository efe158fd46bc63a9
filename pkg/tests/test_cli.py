import json
import subprocess
import sys
from pathlib import Path

import pytest

from santaclaus.cli import main


def run_cli(args):
    return main(args)


def read(path):
    return json.loads(Path(path).read_text())


def test_generate_deterministic(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert run_cli(["generate", "hypergraph-regular", "--groups", "3",
                    "--group-size", "2", "--ell", "4", "--resources", "20",
                    "--seed", "1", "--out", str(a)]) == 0
    assert run_cli(["generate", "hypergraph-regular", "--groups", "3",
                    "--group-size", "2", "--ell", "4", "--resources", "20",
                    "--seed", "1", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_generate_degree_bound(tmp_path):
    out = tmp_path / "g.json"
    assert run_cli(["generate", "hypergraph-regular", "--groups", "3",
                    "--group-size", "2", "--ell", "4", "--resources", "14",
                    "--seed", "5", "--out", str(out)]) == 0
    from santaclaus.model import instance_from_json
    gh = instance_from_json(read(out))
    assert gh.validate(require_regular=True) == []
    assert max(gh.resource_degrees().values()) <= gh.ell


def test_solve_verify_roundtrip_santa(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    sol = tmp_path / "sol.json"
    assert run_cli(["generate", "santa-linear", "--players", "3",
                    "--resources", "8", "--seed", "2", "--out", str(inst)]) == 0
    assert run_cli(["solve", str(inst), "--seed", "3", "--out", str(sol)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["schema_version"] == 1
    assert run_cli(["verify", str(inst), str(sol)]) == 0


def test_solve_deterministic_bytes(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    s1 = tmp_path / "s1.json"
    s2 = tmp_path / "s2.json"
    run_cli(["generate", "santa-coverage", "--players", "2", "--resources", "7",
             "--seed", "4", "--out", str(inst)])
    assert run_cli(["solve", str(inst), "--seed", "9", "--out", str(s1)]) == 0
    assert run_cli(["solve", str(inst), "--seed", "9", "--out", str(s2)]) == 0
    capsys.readouterr()
    assert s1.read_bytes() == s2.read_bytes()


def test_solve_matching_input(tmp_path, capsys):
    inst = tmp_path / "gh.json"
    sol = tmp_path / "sol.json"
    run_cli(["generate", "hypergraph-regular", "--groups", "2",
             "--group-size", "2", "--ell", "3", "--resources", "12",
             "--seed", "6", "--out", str(inst)])
    assert run_cli(["solve", str(inst), "--seed", "8", "--out", str(sol)]) == 0
    capsys.readouterr()
    assert run_cli(["verify", str(inst), str(sol)]) == 0


def test_verify_detects_tampering(tmp_path, capsys):
    inst = tmp_path / "gh.json"
    sol = tmp_path / "sol.json"
    run_cli(["generate", "hypergraph-regular", "--groups", "2",
             "--group-size", "1", "--ell", "2", "--resources", "10",
             "--seed", "7", "--out", str(inst)])
    run_cli(["solve", str(inst), "--seed", "8", "--out", str(sol)])
    capsys.readouterr()
    obj = read(sol)
    donor = None
    for i, a in enumerate(obj["assigned"]):
        if a:
            donor = (i, a[0])
            break
    if donor is None:
        pytest.skip("empty matching cannot be tampered")
    i, r = donor
    for k in range(len(obj["assigned"])):
        if k != i:
            obj["assigned"][k] = sorted(set(obj["assigned"][k]) | {r})
            break
    Path(sol).write_text(json.dumps(obj))
    code = run_cli(["verify", str(inst), str(sol)])
    out = capsys.readouterr().out
    assert code == 1
    assert "duplicate resource" in out


def test_verify_wrong_value_claim(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    sol = tmp_path / "sol.json"
    run_cli(["generate", "santa-linear", "--players", "2", "--resources", "6",
             "--seed", "3", "--out", str(inst)])
    run_cli(["solve", str(inst), "--seed", "5", "--out", str(sol)])
    capsys.readouterr()
    obj = read(sol)
    obj["value"] = [obj["value"][0] + 1, obj["value"][1]]
    Path(sol).write_text(json.dumps(obj))
    assert run_cli(["verify", str(inst), str(sol)]) == 1
    assert "recomputed" in capsys.readouterr().out


def test_verify_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    inst = tmp_path / "inst.json"
    run_cli(["generate", "santa-linear", "--out", str(inst), "--seed", "1"])
    assert run_cli(["verify", str(inst), str(bad)]) == 2
    capsys.readouterr()


def test_oracle_roundtrip(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    truth = tmp_path / "truth.json"
    run_cli(["generate", "santa-linear", "--players", "2", "--resources", "5",
             "--seed", "11", "--out", str(inst)])
    assert run_cli(["oracle", str(inst), "opt", "--out", str(truth)]) == 0
    capsys.readouterr()
    assert run_cli(["verify", str(inst), str(truth)]) == 0
    got = read(truth)
    assert got["value"][1] >= 1


def test_oracle_min_alpha_verifies(tmp_path, capsys):
    inst = tmp_path / "gh.json"
    truth = tmp_path / "truth.json"
    run_cli(["generate", "hypergraph-regular", "--groups", "2",
             "--group-size", "2", "--ell", "2", "--resources", "10",
             "--seed", "13", "--out", str(inst)])
    assert run_cli(["oracle", str(inst), "min-alpha", "--out", str(truth)]) == 0
    capsys.readouterr()
    assert run_cli(["verify", str(inst), str(truth)]) == 0


def test_oracle_budget_refusal(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    run_cli(["generate", "santa-linear", "--players", "6", "--resources", "30",
             "--seed", "15", "--out", str(inst)])
    truth = tmp_path / "truth.json"
    assert run_cli(["oracle", str(inst), "opt", "--out", str(truth)]) == 3
    capsys.readouterr()


def test_console_entrypoint_runs():
    proc = subprocess.run([sys.executable, "-m", "santaclaus.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "generate" in proc.stdout


def test_verify_wrong_alpha_claim(tmp_path, capsys):
    inst = tmp_path / "gh.json"
    sol = tmp_path / "sol.json"
    run_cli(["generate", "hypergraph-regular", "--groups", "2",
             "--group-size", "1", "--ell", "2", "--resources", "10",
             "--seed", "21", "--out", str(inst)])
    run_cli(["solve", str(inst), "--seed", "22", "--out", str(sol)])
    capsys.readouterr()
    obj = read(sol)
    obj["alpha"] = [1, 10 ** 9]  # absurdly strong claim cannot verify
    Path(sol).write_text(json.dumps(obj))
    code = run_cli(["verify", str(inst), str(sol)])
    out = capsys.readouterr().out
    assert code == 1
    assert "recomputed alpha" in out


def test_verify_accepts_slightly_loose_alpha_claim(tmp_path, capsys):
    inst = tmp_path / "gh.json"
    sol = tmp_path / "sol.json"
    run_cli(["generate", "hypergraph-regular", "--groups", "2",
             "--group-size", "1", "--ell", "2", "--resources", "10",
             "--seed", "23", "--out", str(inst)])
    run_cli(["solve", str(inst), "--seed", "24", "--out", str(sol)])
    capsys.readouterr()
    obj = read(sol)
    # a larger claimed factor only weakens the quotas; still a valid claim
    obj["alpha"] = [obj["alpha"][0] * 3, obj["alpha"][1]]
    Path(sol).write_text(json.dumps(obj))
    assert run_cli(["verify", str(inst), str(sol)]) == 0
    capsys.readouterr()
