import pytest

from ottree.compose import GenerationError, TreeSide
from ottree.sim import (Network, Replica, ScenarioError, external_step, local_step,
                        op_from_json, op_to_json, ready, realized_scenario, run_scenario)
from ottree.tree import DATA, NOP, Add, Del, Mv, gen


def test_dependencies_are_the_frontier():
    r1, r2 = Replica(1), Replica(2)
    first = local_step(r1, TreeSide(Add(DATA, gen(1, 1))))
    second = local_step(r1, TreeSide(Add(gen(1, 1), gen(1, 2))))
    assert first.deps == frozenset()
    assert second.deps == {(1, 1)}
    other = local_step(r2, TreeSide(NOP))
    external_step(r2, first)
    external_step(r2, second)
    # concurrent (2,1) and (1,2) both become dependencies of the next request
    assert local_step(r2, TreeSide(NOP)).deps == {(1, 2), (2, 1)}
    assert other.deps == frozenset()


def test_request_waits_for_its_dependencies():
    r1, r2 = Replica(1), Replica(2)
    first = local_step(r1, TreeSide(Add(DATA, gen(1, 1))))
    second = local_step(r1, TreeSide(Del(gen(1, 1))))
    assert not ready(r2, second)
    with pytest.raises(ScenarioError):
        external_step(r2, second)
    external_step(r2, first)
    assert ready(r2, second)


def test_generation_checks():
    r = Replica(1)
    local_step(r, TreeSide(Add(DATA, gen(1, 1))))
    local_step(r, TreeSide(Add(gen(1, 1), gen(1, 2))))
    with pytest.raises(GenerationError):
        local_step(r, TreeSide(Mv(gen(1, 1), gen(1, 2), 1)))
    with pytest.raises(GenerationError):
        local_step(r, TreeSide(Del(gen(5, 5))))
    with pytest.raises(GenerationError):
        local_step(r, TreeSide(Add(DATA, gen(2, 9))))
    with pytest.raises(ScenarioError):
        local_step(r, TreeSide(NOP), opnb=1)


def test_network_is_fifo_per_channel():
    net = Network([1, 2, 3])
    r = Replica(1)
    a = local_step(r, TreeSide(NOP))
    b = local_step(r, TreeSide(NOP))
    net.broadcast(a)
    net.broadcast(b)
    assert list(net.channels[(1, 2)]) == [a, b]
    assert sorted(net.busy()) == [(1, 2), (1, 3)]


def test_op_codec_roundtrip():
    for d in ({"kind": "Add", "parent": "data"}, {"kind": "Del", "target": "1;1"},
              {"kind": "Mv", "target": "1;1", "parent": "mem"},
              {"kind": "Ren", "target": "1;1", "label": "x"}, {"kind": "Nop"},
              {"kind": "InsCh", "node": "2;1", "pos": 0, "char": "q"},
              {"kind": "DelCh", "node": "2;1", "pos": 3}):
        assert op_to_json(op_from_json(d, 4, 7)) == d
    assert op_from_json({"kind": "Add", "parent": "data"}, 4, 7).op.new == gen(4, 7)
    with pytest.raises(ScenarioError):
        op_from_json({"kind": "Swap"}, 1, 1)
    with pytest.raises(ScenarioError):
        op_from_json({"kind": "Del"}, 1, 1)


ADD = {"kind": "Add", "parent": "data"}


def test_two_site_pair_converges():
    sc = {"sites": 2, "schedulePolicy": "ordered", "script": [
        {"site": 1, "op": ADD}, {"sync": True},
        {"site": 1, "op": {"kind": "Add", "parent": "1;1"}},
        {"site": 2, "op": {"kind": "Ren", "target": "1;1", "label": "b"}},
        {"sync": True}]}
    res = run_scenario(sc, cross_check=True)
    assert res.converged and res.report["translate_mismatches"] == 0
    assert res.report["states"]["1"] == \
        '[(#bot,data)[("b",1;1:<>)[(#novalue,1;2:<>)[]]],(#bot,mem)[]]'


def test_three_sites_with_different_arrival_orders():
    sc = {"sites": 3, "schedulePolicy": "ordered", "script": [
        {"site": 1, "op": ADD}, {"sync": True},
        {"site": 1, "op": {"kind": "Del", "target": "1;1"}},
        {"site": 2, "op": {"kind": "Add", "parent": "1;1"}},
        {"site": 3, "op": {"kind": "Ren", "target": "1;1", "label": "c"}},
        {"deliver": {"req": "1;2", "to": 3}}, {"deliver": {"req": "2;1", "to": 3}},
        {"deliver": {"req": "3;1", "to": 1}}, {"deliver": {"req": "2;1", "to": 1}},
        {"deliver": {"req": "3;1", "to": 2}}, {"deliver": {"req": "1;2", "to": 2}},
        {"sync": True}]}
    res = run_scenario(sc, cross_check=True)
    assert res.converged
    assert set(res.report["states"].values()) == {
        "[(#bot,data)[],(#bot,mem)[(#novalue,2;1:<>)[]]]"}


def test_every_request_reaches_every_site():
    res = run_scenario({"seed": 11, "sites": 4, "script": [{"random": {"count": [3, 6]}}]})
    n = res.report["requests"]
    for r in res.replicas.values():
        assert len(r.executed) == n == len(set(r.executed))
    assert res.report["quiescent"]


def test_execution_respects_causality():
    res = run_scenario({"seed": 5, "sites": 3, "script": [{"random": {"count": 8}}]})
    for rep in res.replicas.values():
        done = set()
        for key in rep.executed:
            assert res.requests[key].deps <= done
            done.add(key)
    for rep in res.replicas.values():
        for s in res.replicas:
            own = [k[1] for k in rep.executed if k[0] == s]
            assert own == sorted(own)


def test_runs_are_deterministic():
    sc = {"seed": 42, "sites": 3, "script": [{"random": {"count": [5, 10]}}]}
    assert run_scenario(sc).to_json() == run_scenario(sc).to_json()


def test_realized_scenario_reproduces_the_run():
    res = run_scenario({"seed": 8, "sites": 3, "script": [{"random": {"count": 6}}]})
    again = run_scenario(realized_scenario(res))
    assert again.report["states"] == res.report["states"]
    assert again.report["trace"] == res.report["trace"]


@pytest.mark.parametrize("sc", [
    [], {"sites": 0, "script": []}, {"sites": 2}, {"sites": 2, "script": {}},
    {"sites": 2, "script": [], "schedulePolicy": "lifo"},
    {"sites": 2, "schedulePolicy": "ordered", "script": [{"site": 3, "op": ADD}]},
    {"sites": 2, "schedulePolicy": "ordered", "script": [{"random": {}}]},
    {"sites": 2, "schedulePolicy": "ordered", "script": [{"teleport": 1}]},
    {"sites": 2, "script": [{"sync": True}]},
])
def test_malformed_scenarios(sc):
    with pytest.raises(ScenarioError):
        run_scenario(sc)
