"""Replicated words as a tombstoned sequence of identified characters.

Each character is anchored after the element that preceded it when it was
typed (or after the head).  Elements sharing an anchor are ordered by
descending ``(site, opnb)``, and the total order is the pre-order walk of
the resulting anchor tree, so it depends only on the set of elements and
never on the arrival order.  Deleting hides an element; hidden elements
stay forever.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

ElemId = tuple[int, int]


@dataclass(frozen=True, slots=True)
class Element:
    eid: ElemId
    anchor: Optional[ElemId]
    char: str
    visible: bool = True


@dataclass(frozen=True, slots=True)
class InsCh:
    """Positional insert, as typed by a user."""

    pos: int
    char: str


@dataclass(frozen=True, slots=True)
class DelCh:
    pos: int


@dataclass(frozen=True, slots=True)
class Insert:
    """Anchored insert; ``anchor`` None is the head of the word."""

    anchor: Optional[ElemId]
    eid: ElemId
    char: str


@dataclass(frozen=True, slots=True)
class Hide:
    eid: ElemId


WordOp = Union[Insert, Hide]


class MissingAnchor(KeyError):
    """The element an op refers to has not been integrated yet."""


@dataclass(frozen=True)
class WordState:
    elements: tuple[Element, ...] = ()

    def index(self) -> dict[ElemId, int]:
        return {e.eid: i for i, e in enumerate(self.elements)}

    def visible(self) -> list[Element]:
        return [e for e in self.elements if e.visible]

    def text(self) -> str:
        return "".join(e.char for e in self.elements if e.visible)

    def __contains__(self, eid: ElemId) -> bool:
        return any(e.eid == eid for e in self.elements)


EMPTY_WORD = WordState()


def _order(elements: list[Element]) -> tuple[Element, ...]:
    children: dict[Optional[ElemId], list[Element]] = {}
    for e in elements:
        children.setdefault(e.anchor, []).append(e)
    for kids in children.values():
        kids.sort(key=lambda e: e.eid, reverse=True)
    out: list[Element] = []
    stack = list(reversed(children.get(None, [])))
    while stack:
        e = stack.pop()
        out.append(e)
        stack.extend(reversed(children.get(e.eid, [])))
    return tuple(out)


def word_apply(s: WordState, op: WordOp) -> WordState:
    """Integrate an anchored op.  Raises :class:`MissingAnchor` when the op
    refers to an element ``s`` does not have yet; re-applying an already
    integrated insert is a no-op."""
    idx = s.index()
    if isinstance(op, Insert):
        if op.eid in idx:
            return s
        if op.anchor is not None and op.anchor not in idx:
            raise MissingAnchor(op.anchor)
        new = Element(op.eid, op.anchor, op.char)
        return WordState(_order([*s.elements, new]))
    if isinstance(op, Hide):
        if op.eid not in idx:
            raise MissingAnchor(op.eid)
        i = idx[op.eid]
        old = s.elements[i]
        if not old.visible:
            return s
        hidden = Element(old.eid, old.anchor, old.char, False)
        return WordState(s.elements[:i] + (hidden,) + s.elements[i + 1:])
    raise TypeError(f"not a word operation: {op!r}")


def word_normalize(s: WordState, op: Union[InsCh, DelCh], eid: ElemId) -> WordOp:
    """Resolve a positional op against the visible word of ``s``.

    ``eid`` names the element an insert creates; it is ignored for deletes.
    """
    vis = s.visible()
    if isinstance(op, InsCh):
        if not 0 <= op.pos <= len(vis):
            raise IndexError(f"insert position {op.pos} outside 0..{len(vis)}")
        anchor = None if op.pos == 0 else vis[op.pos - 1].eid
        return Insert(anchor, eid, op.char)
    if isinstance(op, DelCh):
        if not 0 <= op.pos < len(vis):
            raise IndexError(f"delete position {op.pos} outside 0..{len(vis) - 1}")
        return Hide(vis[op.pos].eid)
    raise TypeError(f"not a positional word operation: {op!r}")


def word_serialize(s: WordState) -> str:
    """Full state in total order: ``site;opnb:"c"+`` per element, ``-`` when hidden."""
    parts = [f'{e.eid[0]};{e.eid[1]}:{json.dumps(e.char)}{"+" if e.visible else "-"}'
             for e in s.elements]
    return "<" + ",".join(parts) + ">"


class WordReplica:
    """One site's copy of one word: applies anchored ops, buffering any whose
    anchor has not arrived yet."""

    def __init__(self, state: WordState = EMPTY_WORD):
        self.state = state
        self.pending: list[WordOp] = []

    def integrate(self, op: WordOp) -> None:
        self.pending.append(op)
        progress = True
        while progress and self.pending:
            progress = False
            for waiting in list(self.pending):
                try:
                    self.state = word_apply(self.state, waiting)
                except MissingAnchor:
                    continue
                self.pending.remove(waiting)
                progress = True
