import json

import pytest

from ottree.cli import FOUND, OK, USAGE, main

PAIR = {"sites": 2, "schedulePolicy": "ordered", "script": [
    {"site": 1, "op": {"kind": "Add", "parent": "data"}}, {"sync": True},
    {"site": 1, "op": {"kind": "InsCh", "node": "1;1", "pos": 0, "char": "a"}},
    {"site": 2, "op": {"kind": "InsCh", "node": "1;1", "pos": 0, "char": "b"}},
    {"sync": True}]}
DIVERGING = {"sites": 3, "schedulePolicy": "ordered", "script": [
    {"site": 1, "op": {"kind": "Add", "parent": "data"}},
    {"site": 1, "op": {"kind": "Add", "parent": "data"}}, {"sync": True},
    {"site": 1, "op": {"kind": "Mv", "target": "1;1", "parent": "1;2"}},
    {"site": 2, "op": {"kind": "Mv", "target": "1;2", "parent": "1;1"}},
    {"site": 3, "op": {"kind": "Del", "target": "1;2"}}]}


@pytest.fixture
def write(tmp_path):
    def _write(name, obj):
        p = tmp_path / name
        p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(p)
    return _write


def test_simulate_is_reproducible(write, tmp_path, capsys):
    sc = write("pair.json", PAIR)
    assert main(["simulate", sc]) == OK
    first = capsys.readouterr().out
    assert main(["simulate", sc]) == OK
    assert capsys.readouterr().out == first
    assert first.rstrip().endswith("converged")


def test_replay_is_identical(write, tmp_path, capsys):
    sc = write("pair.json", PAIR)
    out = tmp_path / "report.json"
    assert main(["simulate", sc, "--format", "json", "-o", str(out)]) == OK
    assert main(["replay", str(out), "--format", "json"]) == OK
    assert json.loads(capsys.readouterr().out)["identical"] is True


def test_random_policy_seed_override(write, capsys):
    sc = write("rand.json", {"seed": 1, "sites": 3, "script": [{"random": {"count": 4}}]})
    main(["simulate", sc, "--format", "json"])
    a = capsys.readouterr().out
    main(["simulate", sc, "--format", "json", "--seed", "2"])
    assert capsys.readouterr().out != a


def test_divergence_exit_code(write, capsys):
    assert main(["simulate", write("bad.json", DIVERGING)]) == FOUND
    assert "DIVERGED" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    [], ["bogus"], ["check-tp1", "--max-ids", "x"], ["simulate", "/nonexistent.json"],
    ["replay", "/nonexistent.json"], ["fuzz", "--weights", "{oops"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == USAGE


def test_malformed_inputs(write, capsys):
    assert main(["simulate", write("trunc.json", '{"sites": 2, "scr')]) == USAGE
    assert main(["simulate", write("nosites.json", {"script": []})]) == USAGE
    assert main(["simulate", write("absent.json", {"sites": 1, "schedulePolicy": "ordered",
                 "script": [{"site": 1, "op": {"kind": "Del", "target": "9;9"}}]})]) == USAGE
    assert main(["replay", write("notreport.json", {"x": 1})]) == USAGE
    err = capsys.readouterr().err
    assert "ottree:" in err and "Traceback" not in err


def test_sweep_commands(capsys):
    assert main(["check-tp1", "--max-ids", "2"]) == OK
    assert main(["check-tp1", "--max-ids", "2", "--allow-cycles"]) == FOUND
    assert main(["check-tp2", "--max-ids", "1", "--format", "json"]) == OK
    assert main(["check-it-star", "--samples", "50"]) == OK
    assert main(["check-legacy", "--max-nodes", "2"]) == OK
    capsys.readouterr()
    assert main(["falsify-del1", "--depth", "1", "--format", "json"]) == OK
    rec = json.loads(capsys.readouterr().out)
    assert rec["exhausted"] and rec["satisfying"] == []


def test_fuzz_command(capsys):
    assert main(["fuzz", "--scenarios", "3", "--ops", "0", "2"]) == OK
    assert "3/3 converged" in capsys.readouterr().out
