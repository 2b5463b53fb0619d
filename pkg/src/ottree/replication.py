"""Per-site replication algorithm for the tree object.

Requests carry the minimal set of requests they depend on instead of a
state vector.  An incoming operation is brought to the local state by the
recursive ``translate``: to move an operation from its generation context
``C`` to an executed, causally closed set ``S`` containing ``C``, peel off a
maximal element ``q`` of ``S \\ C`` and combine::

    translate(r, S) = it(translate(r, S - q), translate(q, S - q))

Contexts are bitmasks over the local execution order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .transform import it
from .tree import IdTree, TreeOp, apply, well_formed

Key = tuple[int, int]

INITIAL_TREE = well_formed()


@dataclass(frozen=True)
class TreeRequest:
    site: int
    opnb: int
    op: TreeOp
    deps: frozenset[Key]

    @property
    def key(self) -> Key:
        return (self.site, self.opnb)


class TranslateMismatch(AssertionError):
    """Two peeling orders gave different transformed operations."""


class TreeAlgorithm:
    """One site's environment: state, executed history and causal bookkeeping."""

    def __init__(self, site: int, state: IdTree = INITIAL_TREE, cross_check: bool = False):
        self.site = site
        self.state = state
        self.cross_check = cross_check
        self.order: list[Key] = []
        self.executed: list[tuple[TreeRequest, TreeOp]] = []
        self.index: dict[Key, int] = {}
        self.past: dict[Key, int] = {}
        self.frontier: set[Key] = set()
        self._ops: dict[Key, TreeOp] = {}
        self._memo: dict[tuple[Key, int, bool], TreeOp] = {}
        self.mismatches = 0

    # -- causal bookkeeping ----------------------------------------------------

    def ready(self, req: TreeRequest) -> bool:
        return all(d in self.index for d in req.deps)

    def _past_mask(self, deps: frozenset[Key]) -> int:
        mask = 0
        for d in deps:
            mask |= (1 << self.index[d]) | self.past[d]
        return mask

    def _record(self, req: TreeRequest, past: int, executed: TreeOp) -> None:
        key = req.key
        self.index[key] = len(self.order)
        self.order.append(key)
        self.past[key] = past
        self._ops[key] = req.op
        self.executed.append((req, executed))
        self.frontier -= req.deps
        self.frontier.add(key)
        self.state = apply(self.state, executed)

    def concurrent(self, req: TreeRequest) -> list[Key]:
        """Executed requests concurrent with ``req``, in execution order."""
        past = self._past_mask(req.deps)
        return [k for i, k in enumerate(self.order) if not past >> i & 1]

    # -- transitions -------------------------------------------------------------

    def local(self, op: TreeOp, opnb: int) -> TreeRequest:
        req = TreeRequest(self.site, opnb, op, frozenset(self.frontier))
        self._record(req, (1 << len(self.order)) - 1, op)
        return req

    def external(self, req: TreeRequest) -> TreeOp:
        if req.key in self.index:
            raise ValueError(f"request {req.key} already executed")
        if not self.ready(req):
            raise ValueError(f"request {req.key} is not causally ready")
        past = self._past_mask(req.deps)
        full = (1 << len(self.order)) - 1
        executed = self._translate(req.key, req.op, past, full, latest=True)
        if self.cross_check:
            other = self._translate(req.key, req.op, past, full, latest=False)
            if other != executed:
                self.mismatches += 1
                raise TranslateMismatch(f"{req.key}: {executed} != {other}")
        self._record(req, past, executed)
        return executed

    # -- translate -----------------------------------------------------------------

    def _translate(self, key: Key, op: TreeOp, ctx: int, target: int, latest: bool) -> TreeOp:
        if target == ctx:
            return op
        memo_key = (key, target, latest)
        hit = self._memo.get(memo_key)
        if hit is not None:
            return hit
        q = self._peel(target & ~ctx, target, latest)
        rest = target & ~(1 << q)
        qkey = self.order[q]
        mine = self._translate(key, op, ctx, rest, latest)
        theirs = self._translate(qkey, self._ops[qkey], self.past[qkey], rest, latest)
        out = it(mine, theirs)
        self._memo[memo_key] = out
        return out

    def _peel(self, candidates: int, target: int, latest: bool) -> int:
        """Index of a maximal element of ``target`` among ``candidates``.

        ``latest`` takes the last executed candidate, which is always maximal;
        otherwise the maximal candidate with the greatest (site, opnb)."""
        if latest:
            return candidates.bit_length() - 1
        covered = 0
        m = target
        while m:
            low = m & -m
            covered |= self.past[self.order[low.bit_length() - 1]]
            m ^= low
        maximal = candidates & ~covered
        best: Optional[int] = None
        m = maximal
        while m:
            low = m & -m
            i = low.bit_length() - 1
            if best is None or self.order[i] > self.order[best]:
                best = i
            m ^= low
        assert best is not None
        return best
