"""Trees whose nodes carry words, and the product of the tree and word
replication algorithms.

A labelled tree is a tree plus a map from each generated identifier in the
tree (document and memory parts alike) to a word.  Tree operations go to
the tree algorithm, word operations to the word replica of one identifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .replication import INITIAL_TREE, Key, TreeAlgorithm, TreeRequest
from .tree import (
    IdTree,
    Identifier,
    TreeOp,
    apply,
    identifiers,
    label_token,
)
from .word import (
    EMPTY_WORD,
    DelCh,
    InsCh,
    MissingAnchor,
    WordOp,
    WordReplica,
    WordState,
    word_apply,
    word_normalize,
    word_serialize,
)

DEFAULT_WORD = EMPTY_WORD


@dataclass(frozen=True)
class TreeSide:
    op: TreeOp


@dataclass(frozen=True)
class DataSide:
    ident: Identifier
    op: Union[WordOp, InsCh, DelCh]


ComposedOp = Union[TreeSide, DataSide]


@dataclass(frozen=True)
class LabeledTreeState:
    tree: IdTree = INITIAL_TREE
    delta: Mapping[Identifier, WordState] = field(default_factory=dict)

    def word(self, ident: Identifier) -> WordState:
        return self.delta.get(ident, DEFAULT_WORD)


def _gen_ids(t: IdTree) -> list[Identifier]:
    return [i for i in identifiers(t) if not i.reserved]


def composed_do(s: LabeledTreeState, op: ComposedOp) -> LabeledTreeState:
    """Apply a tree op (resetting the word of every id that left the tree)
    or an anchored word op on one node."""
    if isinstance(op, TreeSide):
        tree = apply(s.tree, op.op)
        if tree is s.tree:
            return s
        delta = {i: s.delta.get(i, DEFAULT_WORD) for i in _gen_ids(tree)}
        return LabeledTreeState(tree, delta)
    if isinstance(op, DataSide):
        if op.ident not in s.delta:
            return s
        delta = dict(s.delta)
        delta[op.ident] = word_apply(s.word(op.ident), op.op)
        return LabeledTreeState(s.tree, delta)
    raise TypeError(f"not a composed operation: {op!r}")


def composed_serialize(s: LabeledTreeState) -> bytes:
    """Tree encoding where each generated id is followed by ``:`` and its word."""
    out: list[str] = []

    def write(t: IdTree) -> None:
        out.append("[")
        for i, e in enumerate(t.edges):
            if i:
                out.append(",")
            word = "" if e.ident.reserved else ":" + word_serialize(s.word(e.ident))
            out.append(f"({label_token(e.label)},{e.ident}{word})")
            write(e.child)
        out.append("]")

    write(s.tree)
    return "".join(out).encode()


# -- requests of the product algorithm -------------------------------------------


@dataclass(frozen=True)
class WordRequest:
    site: int
    opnb: int
    op: WordOp

    @property
    def key(self) -> Key:
        return (self.site, self.opnb)


@dataclass(frozen=True)
class ComposedRequest:
    """Exactly one of ``tree`` or ``data`` is set."""

    tree: Optional[TreeRequest] = None
    data: Optional[tuple[Identifier, WordRequest]] = None

    def __post_init__(self) -> None:
        if (self.tree is None) == (self.data is None):
            raise ValueError("a composed request has exactly one defined side")

    @property
    def key(self) -> Key:
        return self.tree.key if self.tree is not None else self.data[1].key


class GenerationError(ValueError):
    """The local operation cannot be issued on the current state."""


class PairedEnv:
    """Environment ``<E_T, E_D>`` of one site."""

    def __init__(self, site: int, cross_check: bool = False):
        self.site = site
        self.tree = TreeAlgorithm(site, cross_check=cross_check)
        self.state = LabeledTreeState(self.tree.state, {})
        self.pending: dict[Identifier, list[WordOp]] = {}

    def _tree_step(self, executed: TreeOp) -> None:
        self.state = composed_do(self.state, TreeSide(executed))
        for ident in list(self.pending):
            if ident not in self.state.delta:
                del self.pending[ident]

    def _word_step(self, ident: Identifier, op: WordOp) -> bool:
        if ident not in self.state.delta:
            return False
        queue = self.pending.setdefault(ident, [])
        queue.append(op)
        progress = True
        while progress and queue:
            progress = False
            for waiting in list(queue):
                try:
                    self.state = composed_do(self.state, DataSide(ident, waiting))
                except MissingAnchor:
                    continue
                queue.remove(waiting)
                progress = True
        if not queue:
            del self.pending[ident]
        return True


def route_local(op: ComposedOp, env: PairedEnv, opnb: int) -> tuple[PairedEnv, ComposedRequest]:
    """Run ``op`` at its origin and build the request to broadcast."""
    if isinstance(op, TreeSide):
        req = env.tree.local(op.op, opnb)
        env._tree_step(op.op)
        return env, ComposedRequest(tree=req)
    if isinstance(op, DataSide):
        if op.ident.reserved or op.ident not in env.state.delta:
            raise GenerationError(f"no word lives at {op.ident}")
        wop = op.op
        if isinstance(wop, (InsCh, DelCh)):
            try:
                wop = word_normalize(env.state.word(op.ident), wop, (env.site, opnb))
            except IndexError as exc:
                raise GenerationError(str(exc)) from exc
        env._word_step(op.ident, wop)
        return env, ComposedRequest(data=(op.ident, WordRequest(env.site, opnb, wop)))
    raise TypeError(f"not a composed operation: {op!r}")


def route_external(req: ComposedRequest, env: PairedEnv) -> tuple[PairedEnv, Optional[object]]:
    """Integrate a remote request.  Returns the env and what was executed:
    the transformed tree op, the word op, or None when the word's node is no
    longer in the tree at this site."""
    if req.tree is not None:
        executed = env.tree.external(req.tree)
        env._tree_step(executed)
        return env, executed
    ident, wreq = req.data
    return env, (wreq.op if env._word_step(ident, wreq.op) else None)


# -- trace projections ---------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    """One labelled step of a run: ``local`` (phi_l . !r) or ``external``
    (?r . phi_e) at ``site``.  ``applied`` is False for word requests whose
    node had already left the tree, which the product algorithm skips."""

    kind: str
    site: int
    request: ComposedRequest
    applied: bool = True


def project_trace(trace: Iterable[Transition]) -> tuple[list[Transition], dict[Identifier, list[Transition]]]:
    """Split a run into the tree algorithm's run and one run per word."""
    tree_run: list[Transition] = []
    word_runs: dict[Identifier, list[Transition]] = {}
    for step in trace:
        if not step.applied:
            continue
        if step.request.tree is not None:
            tree_run.append(step)
        else:
            word_runs.setdefault(step.request.data[0], []).append(step)
    return tree_run, word_runs


def replay_tree(run: Iterable[Transition], sites: Iterable[int]) -> dict[int, IdTree]:
    """Re-execute a projected tree run on fresh, standalone tree replicas."""
    algs = {s: TreeAlgorithm(s) for s in sites}
    for step in run:
        alg = algs[step.site]
        req = step.request.tree
        if step.kind == "local":
            again = alg.local(req.op, req.opnb)
            if again != req:
                raise AssertionError(f"replayed request differs: {again} != {req}")
        else:
            alg.external(req)
    return {s: a.state for s, a in algs.items()}


def replay_word(run: Iterable[Transition], sites: Iterable[int]) -> dict[int, WordState]:
    replicas = {s: WordReplica() for s in sites}
    for step in run:
        replicas[step.site].integrate(step.request.data[1].op)
    return {s: r.state for s, r in replicas.items()}

