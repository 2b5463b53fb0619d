"""Hand-derived final states for adversarial concurrent runs.

Each fixture records why the expected state is what it is; every site must
reach exactly that state.
"""

import json
from pathlib import Path

import pytest

from ottree.sim import run_scenario

FIXTURES = json.loads((Path(__file__).parent / "fixtures" / "adversarial.json").read_text())


@pytest.mark.parametrize("case", FIXTURES, ids=[c["name"] for c in FIXTURES])
def test_fixture(case):
    res = run_scenario(case["scenario"], cross_check=True)
    assert res.report["translate_mismatches"] == 0
    assert set(res.report["states"].values()) == {case["expected"]}
    assert res.converged
