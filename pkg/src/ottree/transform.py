"""The integration transformation ``it`` on tree operations, its extension to
sets of concurrent operations, and exhaustive TP1/TP2 checkers."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence

from .tree import (
    DATA,
    MEM,
    NOP,
    Add,
    Del,
    Edge,
    IdTree,
    Identifier,
    Label,
    label_token,
    Mv,
    Nop,
    Ren,
    TreeOp,
    apply,
    descendants,
    format_op,
    gen,
    identifiers,
    serialize,
    well_formed,
)


@lru_cache(maxsize=1 << 16)
def it(op1: TreeOp, op2: TreeOp) -> TreeOp:
    """Transform ``op1`` so it can run after the concurrent ``op2``."""
    if isinstance(op2, Nop):
        return op1
    if isinstance(op1, Nop):
        return NOP
    if isinstance(op1, Ren):
        if isinstance(op2, Ren) and op1.target == op2.target:
            _distinct_sites(op1, op2)
            return NOP if op2.site < op1.site else op1
        return op1
    if isinstance(op2, Ren):
        return op1
    if isinstance(op1, Mv):
        if isinstance(op2, Mv):
            if op1.target == op2.target:
                _distinct_sites(op1, op2)
                if op2.site < op1.site:
                    return NOP
            return op1
        if isinstance(op2, Del):
            if op1.new_parent == op2.target:
                return Mv(op1.target, MEM, op1.site)
            if op1.target == op2.target:
                return NOP
        return op1
    if isinstance(op2, Mv):
        return op1
    if isinstance(op1, Add):
        if isinstance(op2, Del):
            if op1.new == op2.target:
                return NOP
            if op1.parent == op2.target:
                return Add(MEM, op1.new)
        return op1
    if isinstance(op1, Del):
        return op1
    raise TypeError(f"not a tree operation pair: {op1!r}, {op2!r}")


def _distinct_sites(op1: Mv | Ren, op2: Mv | Ren) -> None:
    # Two ops of one site are never concurrent, so a tie cannot be resolved.
    if op1.site == op2.site:
        raise ValueError(f"concurrent {type(op1).__name__} ops share site {op1.site}")


def it_star(op: TreeOp, ctx: Sequence[TreeOp]) -> TreeOp:
    """Integrate ``op`` against the pairwise concurrent ``ctx``.

    ``IT*(op, [o1..on]) = IT(IT*(op, [o1..on-1]), IT*(on, [o1..on-1]))``,
    evaluated bottom-up: ``row[i]`` holds ``IT*(ctx[i], ctx[:k])``.
    """
    row = list(ctx)
    cur = op
    for k in range(len(row)):
        head = row[k]
        cur = it(cur, head)
        for i in range(k + 1, len(row)):
            row[i] = it(row[i], head)
    return cur


# -- TP1 / TP2 ----------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    ok: bool
    witness: Optional[dict] = None


def check_tp1(t: IdTree, op1: TreeOp, op2: TreeOp) -> Check:
    """``[op1; it(op2, op1)](t) == [op2; it(op1, op2)](t)``."""
    left = apply(apply(t, op1), it(op2, op1))
    right = apply(apply(t, op2), it(op1, op2))
    if left == right:
        return Check(True)
    return Check(False, {
        "tree": serialize(t).decode(),
        "op1": format_op(op1),
        "op2": format_op(op2),
        "left": serialize(left).decode(),
        "right": serialize(right).decode(),
    })


def check_tp2(t: Optional[IdTree], op: TreeOp, op1: TreeOp, op2: TreeOp) -> Check:
    """``it(it(op, op1), it(op2, op1)) == it(it(op, op2), it(op1, op2))``
    as operation values.  ``t`` only documents the generating state."""
    left = it(it(op, op1), it(op2, op1))
    right = it(it(op, op2), it(op1, op2))
    if left == right:
        return Check(True)
    witness = {
        "op": format_op(op),
        "op1": format_op(op1),
        "op2": format_op(op2),
        "left": format_op(left),
        "right": format_op(right),
    }
    if t is not None:
        witness["tree"] = serialize(t).decode()
    return Check(False, witness)


# -- enumeration of states and generable operations ----------------------------

BASE_SITE = 0
LABELS = ("a", "b")


def base_ids(k: int) -> list[Identifier]:
    return [gen(BASE_SITE, i) for i in range(1, k + 1)]


def _forests(ids: Sequence[Identifier]) -> Iterator[dict[Identifier, Identifier]]:
    parents = [DATA, MEM, *ids]
    for choice in itertools.product(parents, repeat=len(ids)):
        pmap = dict(zip(ids, choice))
        if all(_acyclic(pmap, i) for i in ids):
            yield pmap


def _acyclic(pmap: dict[Identifier, Identifier], start: Identifier) -> bool:
    seen = set()
    node = start
    while node in pmap:
        if node in seen:
            return False
        seen.add(node)
        node = pmap[node]
    return True


def build_tree(pmap: dict[Identifier, Identifier], labels: dict[Identifier, Label]) -> IdTree:
    kids: dict[Identifier, list[Identifier]] = {}
    for child, parent in pmap.items():
        kids.setdefault(parent, []).append(child)

    def sub(node: Identifier) -> IdTree:
        return IdTree(Edge(labels[c], c, sub(c)) for c in kids.get(node, ()))

    return well_formed(sub(DATA), sub(MEM))


def canonical_up_to_ids(t: IdTree) -> str:
    """Shape-and-label code that is equal for two trees exactly when one is
    a renaming of the other's generated ids: reserved ids are kept, generated
    ones forgotten, and sibling codes sorted."""
    parts = sorted(
        f"{label_token(e.label)}{e.ident if e.ident.reserved else '*'}"
        f"{canonical_up_to_ids(e.child)}"
        for e in t.edges)
    return "[" + ",".join(parts) + "]"


def enumerate_trees(max_ids: int, labels: Sequence[Label] = LABELS,
                    symmetry: bool = True) -> list[IdTree]:
    """Every well-formed tree over ``base_ids(k)`` for ``k <= max_ids`` with
    edge labels from ``labels``.  With ``symmetry`` only one representative
    per renaming of identifiers is kept (the ops and ``it`` only ever compare
    identifiers for equality, so renamings are indistinguishable)."""
    out = []
    for k in range(max_ids + 1):
        ids = base_ids(k)
        seen = set()
        for pmap in _forests(ids):
            for labs in itertools.product(labels, repeat=k):
                t = build_tree(pmap, dict(zip(ids, labs)))
                if symmetry:
                    key = canonical_up_to_ids(t)
                    if key in seen:
                        continue
                    seen.add(key)
                out.append(t)
    return out


def generable_ops(t: IdTree, site: int, fresh: Identifier,
                  labels: Sequence[Label] = LABELS,
                  allow_cycles: bool = False) -> list[TreeOp]:
    """Operations a user at ``site`` can issue on ``t``.

    Add needs an existing parent and a fresh id; Del/Mv/Ren need an existing
    non-reserved target.  A move below the moved node's own subtree is only
    generated when ``allow_cycles`` is set.
    """
    all_ids = identifiers(t)
    targets = [i for i in all_ids if not i.reserved]
    ops: list[TreeOp] = [NOP]
    ops += [Add(p, fresh) for p in all_ids]
    ops += [Del(n) for n in targets]
    for n in targets:
        below = descendants(t, n)
        for p in all_ids:
            if p != n and (allow_cycles or p not in below):
                ops.append(Mv(n, p, site))
    ops += [Ren(n, l, site) for n in targets for l in labels]
    return ops


def fresh_id(site: int) -> Identifier:
    return gen(site, 1)


# -- sweeps -------------------------------------------------------------------


@dataclass
class SweepReport:
    name: str
    checked: int = 0
    violations: int = 0
    witnesses: list[dict] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def record(self, check: Check, keep: int) -> None:
        self.checked += 1
        if not check.ok:
            self.violations += 1
            if len(self.witnesses) < keep:
                self.witnesses.append(check.witness)

    def summary(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        return f"{self.name}: {verdict} checked={self.checked} violations={self.violations}"


def sweep_tp1(max_ids: int = 4, labels: Sequence[Label] = LABELS, symmetry: bool = True,
              allow_cycles: bool = False, keep: int = 10,
              trees: Optional[Iterable[IdTree]] = None) -> SweepReport:
    report = SweepReport("tp1", params={"max_ids": max_ids, "labels": list(labels),
                                        "symmetry": symmetry, "allow_cycles": allow_cycles})
    for t in (trees if trees is not None else enumerate_trees(max_ids, labels, symmetry)):
        ops1 = generable_ops(t, 1, fresh_id(1), labels, allow_cycles)
        ops2 = generable_ops(t, 2, fresh_id(2), labels, allow_cycles)
        after1 = [apply(t, o) for o in ops1]
        after2 = [apply(t, o) for o in ops2]
        for o1, t1 in zip(ops1, after1):
            for o2, t2 in zip(ops2, after2):
                left = apply(t1, it(o2, o1))
                right = apply(t2, it(o1, o2))
                if left == right:
                    report.checked += 1
                else:
                    report.record(check_tp1(t, o1, o2), keep)
    return report


SITE_ORDERS = tuple(itertools.permutations((1, 2, 3)))


def sweep_tp2(max_ids: int = 3, labels: Sequence[Label] = LABELS, symmetry: bool = True,
              allow_cycles: bool = False, keep: int = 10) -> SweepReport:
    """TP2 over all generable triples, each from a distinct site, under every
    assignment of the three sites.  Identical op triples arising from several
    trees are checked once (TP2 is a property of the operations alone)."""
    report = SweepReport("tp2", params={"max_ids": max_ids, "labels": list(labels),
                                        "symmetry": symmetry, "allow_cycles": allow_cycles})
    seen: set = set()
    for t in enumerate_trees(max_ids, labels, symmetry):
        per_site = {s: generable_ops(t, s, fresh_id(s), labels, allow_cycles) for s in (1, 2, 3)}
        for s0, s1, s2 in SITE_ORDERS:
            for triple in itertools.product(per_site[s0], per_site[s1], per_site[s2]):
                if triple in seen:
                    continue
                seen.add(triple)
                report.record(check_tp2(t, *triple), keep)
    return report


def sample_concurrent(rng: random.Random, max_size: int = 5, max_ids: int = 4,
                      labels: Sequence[Label] = LABELS) -> tuple[IdTree, TreeOp, list[TreeOp]]:
    """A random tree and ``1 + n`` ops generated on it by distinct sites."""
    k = rng.randint(0, max_ids)
    ids = base_ids(k)
    while True:
        pmap = {i: rng.choice([DATA, MEM, *ids]) for i in ids}
        if all(_acyclic(pmap, i) for i in ids):
            break
    t = build_tree(pmap, {i: rng.choice(labels) for i in ids})
    n = rng.randint(1, max_size)
    ops = [rng.choice(generable_ops(t, s, fresh_id(s), labels)) for s in range(1, n + 2)]
    return t, ops[0], ops[1:]


def check_permutation_invariance(op: TreeOp, ctx: Sequence[TreeOp]) -> Check:
    ref = it_star(op, ctx)
    for perm in itertools.permutations(ctx):
        got = it_star(op, perm)
        if got != ref:
            return Check(False, {
                "op": format_op(op),
                "ctx": [format_op(o) for o in ctx],
                "permuted": [format_op(o) for o in perm],
                "expected": format_op(ref),
                "got": format_op(got),
            })
    return Check(True)


def sweep_it_star(samples: int = 10_000, seed: int = 0, max_size: int = 5,
                  keep: int = 10) -> SweepReport:
    report = SweepReport("it_star", params={"samples": samples, "seed": seed,
                                            "max_size": max_size})
    rng = random.Random(seed)
    for _ in range(samples):
        _, op, ctx = sample_concurrent(rng, max_size)
        report.record(check_permutation_invariance(op, ctx), keep)
    return report

