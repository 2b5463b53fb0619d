"""The nine acceptance criteria.

Each test records one PASS/FAIL line; the lines are printed together at the
end of the pytest run (see ``conftest.py``) and when the module is run as a
script: ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import pytest

from ottree import paths, transform
from ottree.compose import project_trace, replay_tree, replay_word
from ottree.fuzz import FuzzConfig, fuzz, make_scenario
from ottree.sim import run_scenario

RESULTS: dict[int, str] = {}
FIXTURES = Path(__file__).parent / "fixtures" / "adversarial.json"

pytestmark = pytest.mark.acceptance


def record(n: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[n] = f"acceptance {n} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    assert ok, RESULTS[n]


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def test_1_tp1_sweep():
    rep, secs = timed(transform.sweep_tp1, 4, labels=("a", "b"))
    record(1, "TP1 sweep, <=4 ids, 2 labels", rep.ok and secs <= 300,
           f"{rep.checked} pairs, {rep.violations} violations, {secs:.1f}s")


def test_2_tp2_sweep():
    rep, secs = timed(transform.sweep_tp2, 3)
    record(2, "TP2 sweep, <=3 ids", rep.ok and secs <= 600,
           f"{rep.checked} triples, {rep.violations} violations, {secs:.1f}s")


def test_3_it_star_permutations():
    rep, secs = timed(transform.sweep_it_star, 10_000, 0, 5)
    record(3, "IT* permutation invariance", rep.ok and rep.checked >= 10_000,
           f"{rep.checked} samples, {rep.violations} violations, {secs:.1f}s")


def test_4_del1_falsifier():
    rep, secs = timed(paths.falsify_del1, 2)
    violating = rep.candidates - len(rep.satisfying)
    record(4, "Del1 falsifier, depth 2", rep.exhausted and violating == rep.candidates
           and secs <= 60, f"{violating}/{rep.candidates} candidate pairs violate TP1, {secs:.1f}s")


def test_5_del2_sweep():
    (tp1, tp2), secs = timed(paths.check_tp1_tp2_del2, 4)
    record(5, "Del2 TP1/TP2, <=4 nodes, 3 names", tp1.ok and tp2.ok,
           f"TP1 {tp1.checked} checks/{tp1.violations} violations, "
           f"TP2 {tp2.checked} checks/{tp2.violations} violations, {secs:.1f}s")


def test_6_convergence_fuzz():
    summary, secs = timed(fuzz, FuzzConfig(seed=0, scenarios=1000, shrink=False))
    record(6, "convergence fuzz, 1000 scenarios", summary.ok and secs <= 300,
           f"{summary.converged}/{summary.runs} converged, {summary.deadlocks} deadlocks, "
           f"{secs:.1f}s")


def test_7_projection_replay():
    cfg = FuzzConfig(seed=7, sites=(3, 5), ops=(5, 15))
    bad = []
    for i in range(100):
        res = run_scenario(make_scenario(cfg, i))
        sites = list(res.replicas)
        tree_run, word_runs = project_trace(res.transitions)
        trees = replay_tree(tree_run, sites)
        ok = all(trees[s] == r.env.state.tree for s, r in res.replicas.items())
        for ident, run in word_runs.items():
            words = replay_word(run, sites)
            ok &= all(words[s] == r.env.state.word(ident) for s, r in res.replicas.items()
                      if ident in r.env.state.delta)
        if not ok:
            bad.append(i)
    record(7, "projection replay oracle", not bad, f"100 scenarios, mismatches at {bad}")


def test_8_adversarial_fixtures():
    cases = json.loads(FIXTURES.read_text())
    failed = []
    for case in cases:
        res = run_scenario(case["scenario"], cross_check=True)
        if not res.converged or set(res.report["states"].values()) != {case["expected"]}:
            failed.append(case["name"])
    record(8, "adversarial fixtures", not failed, f"{len(cases)} cases, failed {failed}")


def test_9_determinism():
    cfg = FuzzConfig(seed=9)
    differ = [i for i in range(25)
              if run_scenario(make_scenario(cfg, i)).to_json()
              != run_scenario(make_scenario(cfg, i)).to_json()]
    record(9, "determinism", not differ, f"25 scenarios run twice, differing {differ}")


if __name__ == "__main__":
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_")):
        try:
            fn()
        except AssertionError:
            pass
    print("\n".join(RESULTS[k] for k in sorted(RESULTS)))
    sys.exit(0 if all("PASS" in line for line in RESULTS.values()) else 1)
