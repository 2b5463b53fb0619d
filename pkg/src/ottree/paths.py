"""Name-addressed trees: siblings carry distinct names and nodes are reached
by paths of names.

Two deletions exist.  ``Del1`` replaces an edge by its children (merged into
the siblings), ``Del2`` removes the whole subtree.  With ``Del2`` the
transformation :func:`it_del2` satisfies TP1 and TP2; with ``Del1`` no
transformation built from the same operations does, which
:func:`falsify_del1` witnesses by exhausting a bounded candidate space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Union

Path = tuple[str, ...]
EPS: Path = ()


class NameTree:
    """Immutable unordered tree; ``children`` maps a name to its subtree."""

    __slots__ = ("children", "_key")

    def __init__(self, children: Optional[dict[str, "NameTree"]] = None):
        self.children: dict[str, NameTree] = dict(children or {})
        self._key: Optional[tuple] = None

    def key(self) -> tuple:
        if self._key is None:
            self._key = tuple(sorted((n, c.key()) for n, c in self.children.items()))
        return self._key

    def __eq__(self, other: object) -> bool:
        return isinstance(other, NameTree) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"NameTree({render(self)})"


EMPTY = NameTree()


def tree(spec: Optional[dict] = None) -> NameTree:
    """Build from nested dicts: ``tree({"a": {"b": {}}})``."""
    return NameTree({n: tree(c) for n, c in (spec or {}).items()})


def render(t: NameTree) -> str:
    """``{a{b},c}`` with siblings sorted by name."""
    return "{" + ",".join(n + ("" if not c.children else render(c))
                          for n, c in sorted(t.children.items())) + "}"


def size(t: NameTree) -> int:
    return sum(1 + size(c) for c in t.children.values())


def proj(t: NameTree, p: Path) -> NameTree:
    """Projection along a path; the empty tree when the path is absent."""
    for n in p:
        t = t.children.get(n, EMPTY)
    return t


def exists(t: NameTree, p: Path) -> bool:
    for n in p:
        if n not in t.children:
            return False
        t = t.children[n]
    return True


def is_prefix(p: Path, q: Path) -> bool:
    """``p`` is a (not necessarily strict) prefix of ``q``."""
    return q[:len(p)] == p


def node_paths(t: NameTree, prefix: Path = EPS) -> Iterator[Path]:
    """Every node path of ``t`` including the root, pre-order."""
    yield prefix
    for n, c in sorted(t.children.items()):
        yield from node_paths(c, prefix + (n,))


def fmt_path(p: Path) -> str:
    return ".".join(p) if p else "ε"


# -- operations ------------------------------------------------------------------


@dataclass(frozen=True)
class AddP:
    path: Path
    name: str


@dataclass(frozen=True)
class Del1:
    path: Path
    name: str


@dataclass(frozen=True)
class Del2:
    path: Path
    name: str


@dataclass(frozen=True)
class NopP:
    pass


NOPP = NopP()
PathOp = Union[AddP, Del1, Del2, NopP]


def fmt(op: PathOp) -> str:
    if isinstance(op, NopP):
        return "Nop()"
    return f"{type(op).__name__}({fmt_path(op.path)},{op.name})"


def merge(a: NameTree, b: NameTree) -> NameTree:
    """The ``⊕`` of child promotion.  On a name clash the present sibling is
    kept and the promoted one is merged into it recursively, so names stay
    unique among siblings."""
    out = dict(a.children)
    for n, c in b.children.items():
        out[n] = merge(out[n], c) if n in out else c
    return NameTree(out)


def apply_path(t: NameTree, op: PathOp) -> NameTree:
    if isinstance(op, NopP):
        return t
    if isinstance(op, AddP):
        return _add(t, op.path, op.name)
    if isinstance(op, (Del1, Del2)):
        return _del(t, op.path, op.name, promote=isinstance(op, Del1))
    raise TypeError(f"not a path operation: {op!r}")


def _add(t: NameTree, p: Path, n: str) -> NameTree:
    if not p:
        if n in t.children:
            return t
        return NameTree({**t.children, n: EMPTY})
    head, rest = p[0], p[1:]
    child = t.children.get(head, EMPTY)  # absent heads are created on the way
    return NameTree({**t.children, head: _add(child, rest, n)})


def _del(t: NameTree, p: Path, n: str, promote: bool) -> NameTree:
    if not p:
        if n not in t.children:
            return t
        rest = {k: v for k, v in t.children.items() if k != n}
        return merge(NameTree(rest), t.children[n]) if promote else NameTree(rest)
    head = p[0]
    if head not in t.children:
        return t
    return NameTree({**t.children, head: _del(t.children[head], p[1:], n, promote)})


def it_del2(op1: PathOp, op2: PathOp) -> PathOp:
    """Transformation for ``{Nop, AddP, Del2}``."""
    for op in (op1, op2):
        if isinstance(op, Del1):
            raise ValueError("it_del2 is only defined for Nop, AddP and Del2")
    if isinstance(op2, NopP):
        return op1
    if isinstance(op1, NopP):
        return NOPP
    if isinstance(op2, AddP):
        return op1
    # op2 is Del2: the deleted subtree swallows same-name or nested targets.
    if (op1.path, op1.name) == (op2.path, op2.name):
        return NOPP
    if is_prefix(op2.path + (op2.name,), op1.path):
        return NOPP
    return op1


# -- enumeration -------------------------------------------------------------------


ALPHABET = ("a", "b", "c")


def enumerate_name_trees(max_nodes: int, names: Sequence[str] = ALPHABET) -> list[NameTree]:
    """All trees with at most ``max_nodes`` edges over ``names``."""
    memo: dict[int, list[NameTree]] = {}

    def upto(k: int) -> list[NameTree]:
        if k in memo:
            return memo[k]
        found = {EMPTY}
        # choose a subset of names as root children, distribute the budget
        for r in range(1, min(k, len(names)) + 1):
            for chosen in itertools.combinations(names, r):
                for kids in _distribute(chosen, k - r, upto):
                    found.add(NameTree(dict(zip(chosen, kids))))
        memo[k] = sorted(found, key=lambda t: (size(t), render(t)))
        return memo[k]

    return upto(max_nodes)


def _distribute(chosen, budget, upto):
    if not chosen:
        yield ()
        return
    for sub in upto(budget):
        s = size(sub)
        for rest in _distribute(chosen[1:], budget - s, upto):
            yield (sub,) + rest


def generable_path_ops(t: NameTree, names: Sequence[str] = ALPHABET,
                       delete: type = Del2) -> list[PathOp]:
    """Nop, an Add of any name below any existing node, and a deletion of
    any existing edge."""
    ops: list[PathOp] = [NOPP]
    for p in node_paths(t):
        ops += [AddP(p, n) for n in names]
        ops += [delete(p, n) for n in sorted(proj(t, p).children)]
    return ops


@dataclass
class LegacyReport:
    name: str
    checked: int = 0
    violations: int = 0
    witnesses: list[dict] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def _fail(self, witness: dict, keep: int) -> None:
        self.violations += 1
        if len(self.witnesses) < keep:
            self.witnesses.append(witness)

    def record(self) -> dict:
        return {"name": self.name, "checked": self.checked, "violations": self.violations,
                "witnesses": self.witnesses, "params": self.params, "ok": self.ok}


def check_tp1_tp2_del2(max_nodes: int = 4, names: Sequence[str] = ALPHABET,
                       keep: int = 5) -> tuple[LegacyReport, LegacyReport]:
    """Exhaustive TP1 over generable pairs and TP2 over generable triples."""
    params = {"max_nodes": max_nodes, "names": list(names)}
    tp1, tp2 = LegacyReport("tp1-del2", params=params), LegacyReport("tp2-del2", params=params)
    for t in enumerate_name_trees(max_nodes, names):
        ops = generable_path_ops(t, names)
        after = {op: apply_path(t, op) for op in ops}
        for op1, op2 in itertools.product(ops, repeat=2):
            tp1.checked += 1
            left = apply_path(after[op1], it_del2(op2, op1))
            right = apply_path(after[op2], it_del2(op1, op2))
            if left != right:
                tp1._fail({"tree": render(t), "op1": fmt(op1), "op2": fmt(op2),
                           "left": render(left), "right": render(right)}, keep)
        for op, op1, op2 in itertools.product(ops, repeat=3):
            tp2.checked += 1
            a = it_del2(it_del2(op, op1), it_del2(op2, op1))
            b = it_del2(it_del2(op, op2), it_del2(op1, op2))
            if a != b:
                tp2._fail({"tree": render(t), "op": fmt(op), "op1": fmt(op1),
                           "op2": fmt(op2), "left": fmt(a), "right": fmt(b)}, keep)
    return tp1, tp2


# -- the Del1 falsifier -------------------------------------------------------------

# A transformation "defined from Op" builds its result from its arguments:
# the paths p, p' and names n, n' of op1 = (p, n) and op2 = (p', n'),
# combined by concatenation (and by conditionals, which on one fixed input
# pick one branch).  Candidates are therefore terms over those variables,
# plus one fresh name constant, evaluated on the scenario.  Concrete
# constant ops would be strictly more expressive than the definitions the
# impossibility is about: they can name a residual path no term can build.

PATH_VARS = ("p", "n", "p'", "n'")
NAME_VARS = ("n", "n'")
FRESH = "z"


@dataclass(frozen=True)
class Term:
    """``kind`` is Nop, Add or Del; ``path`` a tuple of atoms to concatenate;
    ``name`` a single-name atom."""

    kind: str
    path: tuple[str, ...] = ()
    name: str = ""

    def __str__(self) -> str:
        if self.kind == "Nop":
            return "Nop()"
        return f"{self.kind}({'.'.join(self.path) or 'ε'},{self.name})"


def candidate_terms(depth: int) -> list[Term]:
    """Nop, plus Add and Del1 terms whose path concatenates at most
    ``depth`` atoms drawn from the variables and the fresh name."""
    atoms = (*PATH_VARS, FRESH)
    names = (*NAME_VARS, FRESH)
    out = [Term("Nop")]
    for k in range(depth + 1):
        for path in itertools.product(atoms, repeat=k):
            for name in names:
                out += [Term("Add", path, name), Term("Del", path, name)]
    return out


def evaluate(term: Term, op1: PathOp, op2: PathOp) -> PathOp:
    env = {"p": op1.path, "n": (op1.name,), "p'": op2.path, "n'": (op2.name,), FRESH: (FRESH,)}
    if term.kind == "Nop":
        return NOPP
    path = tuple(x for atom in term.path for x in env[atom])
    name = env[term.name][0]
    return AddP(path, name) if term.kind == "Add" else Del1(path, name)


# The scenario: r sits below n next to m; one site adds r below n.r while
# the other dissolves n, promoting r to the root.  The surviving Add would
# have to target the path r, which no term built from (n.r, r, ε, n) names.
FALSIFIER_TREE = tree({"n": {"r": {}}, "m": {}})
FALSIFIER_OP1: PathOp = AddP(("n", "r"), "m")
FALSIFIER_OP2: PathOp = Del1(EPS, "n")


@dataclass
class FalsifierReport:
    tree: str
    op1: str
    op2: str
    t1: str
    t2: str
    depth: int
    candidates: int = 0
    satisfying: list[str] = field(default_factory=list)
    by_case: dict[str, int] = field(default_factory=dict)
    examples: dict[str, dict] = field(default_factory=dict)

    @property
    def exhausted(self) -> bool:
        """Every candidate pair was examined and none satisfied TP1."""
        return self.candidates > 0 and not self.satisfying

    def record(self) -> dict:
        return {"tree": self.tree, "op1": self.op1, "op2": self.op2, "t1": self.t1,
                "t2": self.t2, "depth": self.depth, "candidates": self.candidates,
                "satisfying": self.satisfying,
                "violating": self.candidates - len(self.satisfying),
                "by_case": self.by_case, "examples": self.examples,
                "exhausted": self.exhausted}

    def summary(self) -> str:
        verdict = "no candidate satisfies TP1" if self.exhausted else \
            f"{len(self.satisfying)} candidate(s) satisfy TP1"
        return (f"falsify-del1 depth={self.depth} candidates={self.candidates} "
                f"violating={self.candidates - len(self.satisfying)}: {verdict}")


def falsify_del1(depth: int = 2, t: NameTree = FALSIFIER_TREE,
                 op1: PathOp = FALSIFIER_OP1, op2: PathOp = FALSIFIER_OP2) -> FalsifierReport:
    """Try every candidate pair of terms ``op1' = IT(op1, op2)`` and
    ``op2' = IT(op2, op1)`` and record whether ``op2'(op1(t)) = op1'(op2(t))``.
    Failures are grouped by the kinds of ``op2'`` and ``op1'``."""
    t1, t2 = apply_path(t, op1), apply_path(t, op2)
    report = FalsifierReport(render(t), fmt(op1), fmt(op2), render(t1), render(t2), depth)
    terms = candidate_terms(depth)
    after1 = {c: apply_path(t1, evaluate(c, op2, op1)) for c in terms}  # op2' runs on t1
    after2 = {c: apply_path(t2, evaluate(c, op1, op2)) for c in terms}  # op1' runs on t2
    for c2, c1 in itertools.product(terms, repeat=2):
        report.candidates += 1
        if after1[c2] == after2[c1]:
            report.satisfying.append(f"op1'={c1} op2'={c2}")
            continue
        label = f"op2'={c2.kind},op1'={c1.kind}"
        report.by_case[label] = report.by_case.get(label, 0) + 1
        report.examples.setdefault(label, {
            "op1'": str(c1), "op2'": str(c2),
            "t1'": render(after1[c2]), "t2'": render(after2[c1])})
    return report


def search_falsifier_scenarios(max_nodes: int = 3, names: Sequence[str] = ("n", "m", "r"),
                               depth: int = 2) -> Iterator[tuple[NameTree, PathOp, PathOp]]:
    """(tree, Add, Del1) inputs on which no candidate pair satisfies TP1."""
    for t in enumerate_name_trees(max_nodes, names):
        ops = generable_path_ops(t, names, Del1)
        adds = [op for op in ops if isinstance(op, AddP)]
        dels = [op for op in ops if isinstance(op, Del1)]
        for a, d in itertools.product(adds, dels):
            if falsify_del1(depth, t, a, d).exhausted:
                yield t, a, d
