"""Closed-world simulator of replicas exchanging requests over FIFO channels.

Each site runs the product of the tree algorithm and one word replica per
node.  A request carries the minimal set of requests it depends on; a
received request waits in the inbox until all of them were executed.

Scenarios are JSON objects::

    {"seed": 7, "sites": 3, "schedulePolicy": "random",
     "script": [{"site": 1, "op": {"kind": "Add", "parent": "data"}},
                {"random": {"count": [5, 15], "weights": {"mv": 0}}}]}

Under ``random`` every script entry becomes a queued local operation (a
``random`` entry queues ``count`` generated ops on every site) and a seeded
scheduler picks uniformly among the enabled events: a local op, a channel
receive, or the execution of a ready request.  Under ``ordered`` the script
is a literal run: ``{"site", "op", "opnb"?}`` local steps, ``{"recv":
{"req", "to"}}``, ``{"exec": {"req", "at"}}``, ``{"deliver": {"req",
"to"}}`` (receive, then execute whatever is ready) and ``{"sync": true}``.
Both policies finish by flushing every channel until quiescence.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .compose import (
    ComposedOp,
    ComposedRequest,
    DataSide,
    GenerationError,
    PairedEnv,
    Transition,
    TreeSide,
    composed_serialize,
    route_external,
    route_local,
)
from .replication import Key
from .tree import (
    NOP,
    Add,
    Del,
    Mv,
    Ren,
    descendants,
    format_op,
    gen,
    identifiers,
    label_token,
    parse_identifier,
)
from .word import DelCh, InsCh, Insert

POLICIES = ("random", "ordered")
DEFAULT_WEIGHTS = {"add": 3, "del": 1, "mv": 2, "ren": 1, "nop": 0.5, "ins": 3, "delch": 1}
LABEL_ALPHABET = ("a", "b", "c")
CHAR_ALPHABET = "xyz"


class ScenarioError(ValueError):
    """Malformed scenario or a scripted op that cannot be generated."""


def key_str(key: Key) -> str:
    return f"{key[0]};{key[1]}"


def parse_key(text: str) -> Key:
    site, _, opnb = text.partition(";")
    return (int(site), int(opnb))


# -- op codec ------------------------------------------------------------------


def op_to_json(op: ComposedOp) -> dict:
    if isinstance(op, DataSide):
        w = op.op
        if isinstance(w, InsCh):
            return {"kind": "InsCh", "node": str(op.ident), "pos": w.pos, "char": w.char}
        if isinstance(w, DelCh):
            return {"kind": "DelCh", "node": str(op.ident), "pos": w.pos}
        raise ScenarioError(f"only positional word ops are scriptable: {w!r}")
    t = op.op
    if isinstance(t, Add):
        return {"kind": "Add", "parent": str(t.parent)}
    if isinstance(t, Del):
        return {"kind": "Del", "target": str(t.target)}
    if isinstance(t, Mv):
        return {"kind": "Mv", "target": str(t.target), "parent": str(t.new_parent)}
    if isinstance(t, Ren):
        return {"kind": "Ren", "target": str(t.target), "label": t.label}
    return {"kind": "Nop"}


def op_from_json(d: dict, site: int, opnb: int) -> ComposedOp:
    """Decode a scripted op issued as request ``(site, opnb)``; an Add's new
    node is named after its request."""
    try:
        kind = d["kind"]
        if kind == "Add":
            return TreeSide(Add(parse_identifier(d["parent"]), gen(site, opnb)))
        if kind == "Del":
            return TreeSide(Del(parse_identifier(d["target"])))
        if kind == "Mv":
            return TreeSide(Mv(parse_identifier(d["target"]), parse_identifier(d["parent"]), site))
        if kind == "Ren":
            return TreeSide(Ren(parse_identifier(d["target"]), d["label"], site))
        if kind == "Nop":
            return TreeSide(NOP)
        if kind == "InsCh":
            return DataSide(parse_identifier(d["node"]), InsCh(int(d["pos"]), d["char"]))
        if kind == "DelCh":
            return DataSide(parse_identifier(d["node"]), DelCh(int(d["pos"])))
    except (KeyError, ValueError, TypeError) as exc:
        raise ScenarioError(f"bad op {d!r}: {exc}") from exc
    raise ScenarioError(f"unknown op kind {d.get('kind')!r}")


def format_request(req: ComposedRequest) -> str:
    if req.tree is not None:
        return format_op(req.tree.op)
    ident, w = req.data
    if isinstance(w.op, Insert):
        anchor = "head" if w.op.anchor is None else key_str(w.op.anchor)
        return f"Op{{Insert,{ident},{anchor},{label_token(w.op.char)}}}"
    return f"Op{{Hide,{ident},{key_str(w.op.eid)}}}"


# -- requests, replicas, network -------------------------------------------------


@dataclass(frozen=True)
class Request:
    site: int
    opnb: int
    deps: frozenset[Key]
    body: ComposedRequest

    @property
    def key(self) -> Key:
        return (self.site, self.opnb)


@dataclass
class Replica:
    site: int
    cross_check: bool = False
    op_counter: int = 0
    env: PairedEnv = field(init=False)
    executed: list[Key] = field(default_factory=list)
    done: set[Key] = field(default_factory=set)
    frontier: set[Key] = field(default_factory=set)
    inbox: list[Request] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.env = PairedEnv(self.site, cross_check=self.cross_check)

    def serialize(self) -> str:
        return composed_serialize(self.env.state).decode()

    def _record(self, req: Request) -> None:
        self.executed.append(req.key)
        self.done.add(req.key)
        self.frontier -= req.deps
        self.frontier.add(req.key)


def local_step(r: Replica, op: ComposedOp, opnb: Optional[int] = None) -> Request:
    """Execute ``op`` at its origin and build the request to broadcast."""
    opnb = r.op_counter + 1 if opnb is None else opnb
    if opnb <= r.op_counter:
        raise ScenarioError(f"opnb {opnb} at site {r.site} is not increasing")
    _check_generable(r, op, opnb)
    _, body = route_local(op, r.env, opnb)
    r.op_counter = opnb
    req = Request(r.site, opnb, frozenset(r.frontier), body)
    r._record(req)
    return req


def _check_generable(r: Replica, op: ComposedOp, opnb: int) -> None:
    state = r.env.state
    ids = identifiers(state.tree)
    if isinstance(op, DataSide):
        return  # route_local rejects missing nodes and bad positions
    t = op.op
    if isinstance(t, Add):
        if t.parent not in ids:
            raise GenerationError(f"parent {t.parent} is not in the tree")
        if t.new in ids or t.new.site != r.site or t.new.opnb != opnb:
            raise GenerationError(f"{t.new} is not a fresh id of request {r.site};{opnb}")
    elif isinstance(t, (Del, Ren)):
        if t.target not in ids:
            raise GenerationError(f"target {t.target} is not in the tree")
    elif isinstance(t, Mv):
        if t.target not in ids or t.new_parent not in ids:
            raise GenerationError(f"{format_op(t)} names an absent node")
        if t.new_parent in descendants(state.tree, t.target):
            raise GenerationError(f"{format_op(t)} moves a node below itself")


def ready(r: Replica, req: Request) -> bool:
    return req.deps <= r.done


def external_step(r: Replica, req: Request) -> Transition:
    if not ready(r, req):
        raise ScenarioError(f"{key_str(req.key)} is not ready at site {r.site}")
    _, executed = route_external(req.body, r.env)
    r._record(req)
    return Transition("external", r.site, req.body, applied=executed is not None)


class Network:
    """FIFO channel per ordered pair of sites; nothing is lost."""

    def __init__(self, sites: Sequence[int]):
        self.sites = list(sites)
        self.channels: dict[tuple[int, int], deque[Request]] = {
            (i, j): deque() for i in self.sites for j in self.sites if i != j
        }

    def broadcast(self, req: Request) -> None:
        for j in self.sites:
            if j != req.site:
                self.channels[(req.site, j)].append(req)

    def busy(self) -> list[tuple[int, int]]:
        return [c for c, q in self.channels.items() if q]

    def empty(self) -> bool:
        return not self.busy()


# -- scenario runs ----------------------------------------------------------------


@dataclass
class RunResult:
    report: dict
    replicas: dict[int, Replica]
    transitions: list[Transition]
    requests: dict[Key, Request] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.report["converged"]

    def to_json(self) -> str:
        return dump_report(self.report)


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


class _Run:
    def __init__(self, sc: dict, cross_check: bool):
        self.sc = sc
        self.sites = list(range(1, int(sc["sites"]) + 1))
        if not self.sites:
            raise ScenarioError("a scenario needs at least one site")
        self.rng = random.Random(sc.get("seed", 0))
        self.replicas = {s: Replica(s, cross_check) for s in self.sites}
        self.net = Network(self.sites)
        self.requests: dict[Key, Request] = {}
        self.transitions: list[Transition] = []
        self.trace: list[str] = []
        self.steps: list[dict] = []
        self.ignored = 0

    # one event each

    def local(self, site: int, op: ComposedOp, opnb: Optional[int] = None) -> Request:
        r = self.replicas[site]
        req = local_step(r, op, opnb)
        self.requests[req.key] = req
        self.net.broadcast(req)
        self.transitions.append(Transition("local", site, req.body))
        self.trace.append(f"L {site} {key_str(req.key)} {format_request(req.body)}")
        self.steps.append({"site": site, "opnb": req.opnb, "op": op_to_json(op)})
        return req

    def recv(self, src: int, dst: int) -> Request:
        req = self.net.channels[(src, dst)].popleft()
        self.replicas[dst].inbox.append(req)
        self.trace.append(f"R {src}->{dst} {key_str(req.key)}")
        self.steps.append({"recv": {"req": key_str(req.key), "to": dst}})
        return req

    def execute(self, site: int, req: Request) -> None:
        r = self.replicas[site]
        r.inbox.remove(req)
        step = external_step(r, req)
        self.transitions.append(step)
        if not step.applied:
            self.ignored += 1
        executed = r.env.tree.executed[-1][1] if req.body.tree is not None else None
        shown = format_op(executed) if executed is not None else format_request(req.body)
        note = "" if step.applied else " ignored"
        self.trace.append(f"E {site} {key_str(req.key)} {shown}{note}")
        self.steps.append({"exec": {"req": key_str(req.key), "at": site}})

    def ready_inbox(self, site: int) -> list[Request]:
        r = self.replicas[site]
        return [q for q in r.inbox if ready(r, q)]

    def drain(self, site: int) -> None:
        while True:
            runnable = self.ready_inbox(site)
            if not runnable:
                return
            self.execute(site, min(runnable, key=lambda q: q.key))

    def flush(self) -> None:
        while True:
            for src, dst in self.net.busy():
                while self.net.channels[(src, dst)]:
                    self.recv(src, dst)
            progressed = False
            for s in self.sites:
                before = len(self.replicas[s].inbox)
                self.drain(s)
                progressed |= len(self.replicas[s].inbox) != before
            if self.net.empty() and not progressed:
                return

    # random generation

    def random_op(self, site: int, weights: dict) -> ComposedOp:
        r = self.replicas[site]
        state = r.env.state
        opnb = r.op_counter + 1
        all_ids = identifiers(state.tree)
        targets = [i for i in all_ids if not i.reserved]
        words = {i: state.word(i).visible() for i in targets}
        kinds = [k for k, w in sorted(weights.items()) if w > 0]
        feasible = {
            "add": True, "nop": True,
            "del": bool(targets), "ren": bool(targets), "ins": bool(targets),
            "mv": any(len(all_ids) - len(descendants(state.tree, n)) > 1 for n in targets),
            "delch": any(words.values()),
        }
        kinds = [k for k in kinds if feasible.get(k, False)]
        if not kinds:
            return TreeSide(NOP)
        kind = self.rng.choices(kinds, [weights[k] for k in kinds])[0]
        if kind == "add":
            return TreeSide(Add(self.rng.choice(all_ids), gen(site, opnb)))
        if kind == "del":
            return TreeSide(Del(self.rng.choice(targets)))
        if kind == "ren":
            return TreeSide(Ren(self.rng.choice(targets), self.rng.choice(LABEL_ALPHABET), site))
        if kind == "mv":
            movable = [n for n in targets
                       if len(all_ids) - len(descendants(state.tree, n)) > 1]
            n = self.rng.choice(movable)
            below = descendants(state.tree, n)
            p = self.rng.choice([p for p in all_ids if p != n and p not in below])
            return TreeSide(Mv(n, p, site))
        if kind == "ins":
            n = self.rng.choice(targets)
            pos = self.rng.randint(0, len(words[n]))
            return DataSide(n, InsCh(pos, self.rng.choice(CHAR_ALPHABET)))
        if kind == "delch":
            n = self.rng.choice([i for i, w in words.items() if w])
            return DataSide(n, DelCh(self.rng.randrange(len(words[n]))))
        return TreeSide(NOP)

    # policies

    def run_random(self) -> None:
        queues: dict[int, deque] = {s: deque() for s in self.sites}
        for entry in self.sc.get("script", []):
            if "random" in entry:
                spec = entry["random"] or {}
                count = spec.get("count", [5, 15])
                weights = dict(DEFAULT_WEIGHTS)
                weights.update(spec.get("weights", {}))
                for s in self.sites:
                    n = self.rng.randint(*count) if isinstance(count, list) else int(count)
                    queues[s].extend([("random", weights)] * n)
            elif "site" in entry:
                self._site(entry["site"])
                queues[entry["site"]].append(("op", entry["op"]))
            else:
                raise ScenarioError(f"random policy accepts only op and random entries: {entry!r}")
        while True:
            events: list[tuple] = [("local", s) for s in self.sites if queues[s]]
            events += [("recv", c) for c in self.net.busy()]
            events += [("exec", s, q) for s in self.sites for q in self.ready_inbox(s)]
            if not events:
                return
            ev = self.rng.choice(events)
            if ev[0] == "local":
                kind, payload = queues[ev[1]].popleft()
                r = self.replicas[ev[1]]
                op = (self.random_op(ev[1], payload) if kind == "random"
                      else op_from_json(payload, ev[1], r.op_counter + 1))
                self.local(ev[1], op)
            elif ev[0] == "recv":
                self.recv(*ev[1])
            else:
                self.execute(ev[1], ev[2])

    def run_ordered(self) -> None:
        for entry in self.sc.get("script", []):
            if "site" in entry:
                site = self._site(entry["site"])
                r = self.replicas[site]
                opnb = int(entry.get("opnb", r.op_counter + 1))
                self.local(site, op_from_json(entry["op"], site, opnb), opnb)
            elif "recv" in entry or "deliver" in entry:
                spec = entry.get("recv") or entry.get("deliver")
                key, dst = parse_key(spec["req"]), self._site(spec["to"])
                channel = self.net.channels.get((key[0], dst))
                if channel is not None and any(q.key == key for q in channel):
                    while True:
                        if self.recv(key[0], dst).key == key:
                            break
                if "deliver" in entry:
                    self.drain(dst)
            elif "exec" in entry:
                key, site = parse_key(entry["exec"]["req"]), self._site(entry["exec"]["at"])
                r = self.replicas[site]
                match = [q for q in r.inbox if q.key == key and ready(r, q)]
                if match:
                    self.execute(site, match[0])
            elif "sync" in entry:
                self.flush()
            elif "random" in entry:
                raise ScenarioError("random entries need the random policy")
            else:
                raise ScenarioError(f"unknown script entry {entry!r}")

    def _site(self, s: Any) -> int:
        if s not in self.replicas:
            raise ScenarioError(f"unknown site {s!r}")
        return s

    def report(self) -> dict:
        self.flush()
        stuck = {s: sorted(key_str(q.key) for q in r.inbox)
                 for s, r in self.replicas.items() if r.inbox}
        states = {str(s): r.serialize() for s, r in self.replicas.items()}
        distinct = sorted(set(states.values()))
        witness = None
        if len(distinct) > 1:
            by_state: dict[str, list[int]] = {}
            for s, st in states.items():
                by_state.setdefault(st, []).append(int(s))
            witness = [{"sites": by_state[st], "state": st} for st in distinct]
        mismatches = sum(r.env.tree.mismatches for r in self.replicas.values())
        return {
            "scenario": self.sc,
            "steps": self.steps,
            "trace": self.trace,
            "states": states,
            "requests": len(self.requests),
            "ignored_word_ops": self.ignored,
            "translate_mismatches": mismatches,
            "deadlock": stuck or None,
            "quiescent": not stuck,
            "converged": not stuck and len(distinct) == 1,
            "witness": witness,
        }


def validate_scenario(sc: Any) -> dict:
    if not isinstance(sc, dict):
        raise ScenarioError("a scenario is a JSON object")
    for f in ("sites", "script"):
        if f not in sc:
            raise ScenarioError(f"scenario is missing {f!r}")
    if not isinstance(sc["sites"], int) or sc["sites"] < 1:
        raise ScenarioError("sites must be a positive integer")
    if not isinstance(sc["script"], list):
        raise ScenarioError("script must be a list")
    policy = sc.get("schedulePolicy", "random")
    if policy not in POLICIES:
        raise ScenarioError(f"unknown schedule policy {policy!r}")
    return sc


def run_scenario(sc: dict, cross_check: bool = False) -> RunResult:
    """Run a scenario to quiescence.  Raises :class:`ScenarioError` (or
    :class:`GenerationError`) when a scripted op cannot be issued."""
    sc = validate_scenario(json.loads(json.dumps(sc)))
    run = _Run(sc, cross_check)
    if sc.get("schedulePolicy", "random") == "random":
        run.run_random()
    else:
        run.run_ordered()
    return RunResult(run.report(), run.replicas, run.transitions, run.requests)


def realized_scenario(result: RunResult) -> dict:
    """The ordered scenario that replays ``result`` step for step."""
    sc = result.report["scenario"]
    return {"seed": sc.get("seed", 0), "sites": sc["sites"],
            "schedulePolicy": "ordered", "script": result.report["steps"]}
