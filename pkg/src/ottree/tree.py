"""Identifier-labelled unordered trees and the tree editing operations.

A document is a *well-formed tree*: a root with exactly two edges, ``data``
(the document proper) and ``mem`` (the memory where deleted material is
parked).  Every other edge carries a globally unique identifier
``(site, opnb)`` and a label.  All values here are immutable; every
operation returns a new tree and is total on well-formed trees.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Union


class Identifier(NamedTuple):
    """Edge identifier.  ``kind`` 0 is data, 1 is mem, 2 is a generated id.

    Tuple ordering gives data < mem < every generated id, and generated ids
    ordered lexicographically by (site, opnb).
    """

    kind: int
    site: int = 0
    opnb: int = 0

    @property
    def reserved(self) -> bool:
        return self.kind != GEN_KIND

    def __str__(self) -> str:
        if self.kind == 0:
            return "data"
        if self.kind == 1:
            return "mem"
        return f"{self.site};{self.opnb}"

    def __repr__(self) -> str:
        return f"Identifier({self})"


GEN_KIND = 2
DATA = Identifier(0)
MEM = Identifier(1)


def gen(site: int, opnb: int) -> Identifier:
    if site < 0 or opnb < 0:
        raise ValueError("site and opnb are natural numbers")
    return Identifier(GEN_KIND, site, opnb)


def parse_identifier(text: str) -> Identifier:
    if text == "data":
        return DATA
    if text == "mem":
        return MEM
    site, _, opnb = text.partition(";")
    return gen(int(site), int(opnb))


class Special(enum.Enum):
    NO_VALUE = "novalue"
    BOTTOM = "bot"

    def __repr__(self) -> str:
        return self.name


NO_VALUE = Special.NO_VALUE
BOTTOM = Special.BOTTOM

Label = Union[Special, str]


def label_token(label: Label) -> str:
    if isinstance(label, Special):
        return "#" + label.value
    return json.dumps(label, ensure_ascii=False)


def parse_label(token: str) -> Label:
    if token.startswith("#"):
        return Special(token[1:])
    return json.loads(token)


class Edge(NamedTuple):
    label: Label
    ident: Identifier
    child: "IdTree"


class IdTree:
    """An unordered set of edges.  Edges are kept sorted by identifier so that
    equality and hashing ignore enumeration order."""

    __slots__ = ("edges", "_hash")

    def __init__(self, edges: Iterable[Edge] = ()):
        self.edges: tuple[Edge, ...] = tuple(sorted(edges, key=_ident_of))
        self._hash: Optional[int] = None

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, IdTree):
            return NotImplemented
        return self.edges == other.edges

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.edges)
        return self._hash

    def __bool__(self) -> bool:
        return bool(self.edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __repr__(self) -> str:
        return f"IdTree({serialize(self).decode()})"

    def __iter__(self) -> Iterator[Edge]:
        return iter(self.edges)


def _ident_of(edge: Edge) -> Identifier:
    return edge.ident


EMPTY = IdTree()


def leaf(label: Label, ident: Identifier) -> IdTree:
    return IdTree((Edge(label, ident, EMPTY),))


def well_formed(data: IdTree = EMPTY, mem: IdTree = EMPTY) -> IdTree:
    return IdTree((Edge(BOTTOM, DATA, data), Edge(BOTTOM, MEM, mem)))


def iter_edges(t: IdTree) -> Iterator[Edge]:
    """Pre-order walk over every edge of ``t``."""
    stack = list(reversed(t.edges))
    while stack:
        e = stack.pop()
        yield e
        stack.extend(reversed(e.child.edges))


def identifiers(t: IdTree) -> list[Identifier]:
    return [e.ident for e in iter_edges(t)]


def find_edge(t: IdTree, ident: Identifier) -> Optional[Edge]:
    for e in iter_edges(t):
        if e.ident == ident:
            return e
    return None


def contains(t: IdTree, ident: Identifier) -> bool:
    return find_edge(t, ident) is not None


def descendants(t: IdTree, ident: Identifier) -> set[Identifier]:
    """Identifiers strictly below the edge ``ident`` (empty if absent)."""
    e = find_edge(t, ident)
    return set() if e is None else set(identifiers(e.child))


def parent_map(t: IdTree) -> dict[Identifier, Optional[Identifier]]:
    out: dict[Identifier, Optional[Identifier]] = {}

    def walk(sub: IdTree, parent: Optional[Identifier]) -> None:
        for e in sub.edges:
            out[e.ident] = parent
            walk(e.child, e.ident)

    walk(t, None)
    return out


def ids_unique(t: IdTree) -> bool:
    ids = identifiers(t)
    return len(ids) == len(set(ids))


def is_well_formed(t: IdTree) -> bool:
    if len(t.edges) != 2:
        return False
    (d, m) = t.edges
    if d.ident != DATA or m.ident != MEM or d.label is not BOTTOM or m.label is not BOTTOM:
        return False
    inner = identifiers(d.child) + identifiers(m.child)
    return ids_unique(t) and not any(i.reserved for i in inner)


def document(t: IdTree) -> IdTree:
    return proj_children(t, DATA)


def memory(t: IdTree) -> IdTree:
    return proj_children(t, MEM)


# -- projections and auxiliary functions ------------------------------------


def proj_children(t: IdTree, ident: Identifier) -> IdTree:
    """The subtree hanging below the edge ``ident``; ``{}`` if absent."""
    e = find_edge(t, ident)
    return EMPTY if e is None else e.child


def proj_edge(t: IdTree, ident: Identifier) -> IdTree:
    """The singleton tree made of the edge ``ident`` and its subtree."""
    e = find_edge(t, ident)
    return EMPTY if e is None else IdTree((e,))


def erase(t: IdTree, ident: Identifier) -> IdTree:
    """Remove the edge ``ident`` together with its subtree."""
    changed = False
    out = []
    for e in t.edges:
        if e.ident == ident:
            changed = True
            continue
        sub = erase(e.child, ident)
        if sub is not e.child:
            changed = True
            e = Edge(e.label, e.ident, sub)
        out.append(e)
    return IdTree(out) if changed else t


def add_tree(t: IdTree, ident: Identifier, s: IdTree) -> IdTree:
    """Union ``s`` into the children of edge ``ident``.  When ``ident`` is
    not in ``t`` the tree is returned unchanged and ``s`` is dropped."""
    changed = False
    out = []
    for e in t.edges:
        if e.ident == ident:
            if s.edges:
                e = Edge(e.label, e.ident, IdTree(e.child.edges + s.edges))
                changed = True
        else:
            sub = add_tree(e.child, ident, s)
            if sub is not e.child:
                e = Edge(e.label, e.ident, sub)
                changed = True
        out.append(e)
    return IdTree(out) if changed else t


def relabel(t: IdTree, ident: Identifier, label: Label) -> IdTree:
    changed = False
    out = []
    for e in t.edges:
        if e.ident == ident:
            if e.label != label:
                e = Edge(label, e.ident, e.child)
                changed = True
        else:
            sub = relabel(e.child, ident, label)
            if sub is not e.child:
                e = Edge(e.label, e.ident, sub)
                changed = True
        out.append(e)
    return IdTree(out) if changed else t


# -- operations ---------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Add:
    """Add a fresh ``NO_VALUE`` edge ``new`` below ``parent``."""

    parent: Identifier
    new: Identifier

    def __post_init__(self) -> None:
        _check_target(self.new)


@dataclass(frozen=True, slots=True)
class Del:
    """Delete edge ``target``; its children are parked under ``mem``."""

    target: Identifier

    def __post_init__(self) -> None:
        _check_target(self.target)


@dataclass(frozen=True, slots=True)
class Mv:
    target: Identifier
    new_parent: Identifier
    site: int

    def __post_init__(self) -> None:
        _check_target(self.target)
        if self.target == self.new_parent:
            raise ValueError("cannot move a node under itself")


@dataclass(frozen=True, slots=True)
class Ren:
    target: Identifier
    label: Label
    site: int

    def __post_init__(self) -> None:
        _check_target(self.target)


@dataclass(frozen=True, slots=True)
class Nop:
    pass


NOP = Nop()

TreeOp = Union[Add, Del, Mv, Ren, Nop]


def _check_target(ident: Identifier) -> None:
    if ident.reserved:
        raise ValueError(f"{ident} is reserved and cannot be an operation target")


def apply(t: IdTree, op: TreeOp) -> IdTree:
    """Apply ``op`` to ``t``.  Absent identifiers make the op a no-op, and a
    move whose destination lies inside the moved subtree drops that subtree
    (the erase happens before the destination is looked up)."""
    if isinstance(op, Nop):
        return t
    if isinstance(op, Add):
        return add_tree(t, op.parent, leaf(NO_VALUE, op.new))
    if isinstance(op, Del):
        return add_tree(erase(t, op.target), MEM, proj_children(t, op.target))
    if isinstance(op, Mv):
        return add_tree(erase(t, op.target), op.new_parent, proj_edge(t, op.target))
    if isinstance(op, Ren):
        return relabel(t, op.target, op.label)
    raise TypeError(f"not a tree operation: {op!r}")


def apply_all(t: IdTree, ops: Iterable[TreeOp]) -> IdTree:
    for op in ops:
        t = apply(t, op)
    return t


# -- canonical text form ------------------------------------------------------


def _write(t: IdTree, out: list[str]) -> None:
    out.append("[")
    for i, e in enumerate(t.edges):
        if i:
            out.append(",")
        out.append(f"({label_token(e.label)},{e.ident})")
        _write(e.child, out)
    out.append("]")


def serialize(t: IdTree) -> bytes:
    """Deterministic encoding ``[(label,id)[...],...]`` with siblings sorted
    by identifier; text labels are JSON-quoted, specials are ``#novalue`` and
    ``#bot``."""
    out: list[str] = []
    _write(t, out)
    return "".join(out).encode()


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def expect(self, ch: str) -> None:
        if self.text[self.pos] != ch:
            raise ValueError(f"expected {ch!r} at {self.pos} in {self.text!r}")
        self.pos += 1

    def tree(self) -> IdTree:
        self.expect("[")
        edges = []
        while self.text[self.pos] != "]":
            if edges:
                self.expect(",")
            self.expect("(")
            label = self.label()
            self.expect(",")
            end = self.text.index(")", self.pos)
            ident = parse_identifier(self.text[self.pos:end])
            self.pos = end + 1
            edges.append(Edge(label, ident, self.tree()))
        self.expect("]")
        return IdTree(edges)

    def label(self) -> Label:
        if self.text[self.pos] == "#":
            end = self.text.index(",", self.pos)
            token = self.text[self.pos:end]
            self.pos = end
            return parse_label(token)
        value, end = json.JSONDecoder().raw_decode(self.text, self.pos)
        self.pos = end
        return value


def deserialize(data: Union[bytes, str]) -> IdTree:
    text = data.decode() if isinstance(data, bytes) else data
    reader = _Reader(text)
    t = reader.tree()
    if reader.pos != len(text):
        raise ValueError("trailing data after tree")
    return t


def format_op(op: TreeOp) -> str:
    """One-line form ``Op{kind,args}`` used in reports and witnesses."""
    if isinstance(op, Add):
        args = [str(op.parent), str(op.new)]
    elif isinstance(op, Del):
        args = [str(op.target)]
    elif isinstance(op, Mv):
        args = [str(op.target), str(op.new_parent), f"s{op.site}"]
    elif isinstance(op, Ren):
        args = [str(op.target), label_token(op.label), f"s{op.site}"]
    else:
        args = []
    return "Op{" + ",".join([type(op).__name__] + args) + "}"
