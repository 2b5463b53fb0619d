import itertools

import pytest
from hypothesis import given, settings, strategies as st

from ottree.word import (
    EMPTY_WORD, DelCh, Hide, InsCh, Insert, MissingAnchor, WordReplica, word_apply,
    word_normalize, word_serialize,
)


def build(text, site=9):
    s = EMPTY_WORD
    for i, ch in enumerate(text):
        s = word_apply(s, word_normalize(s, InsCh(i, ch), (site, i + 1)))
    return s


def test_insert_into_empty():
    s = word_apply(EMPTY_WORD, Insert(None, (1, 1), "a"))
    assert s.text() == "a"


def test_concurrent_head_inserts_commute():
    a, b = Insert(None, (1, 1), "a"), Insert(None, (2, 1), "b")
    left = word_apply(word_apply(EMPTY_WORD, a), b)
    right = word_apply(word_apply(EMPTY_WORD, b), a)
    assert left == right
    assert left.text() == "ba"


def test_delete_and_insert_after_commute():
    s = build("q")
    e = s.elements[0].eid
    hide, ins = Hide(e), Insert(e, (2, 1), "z")
    left = word_apply(word_apply(s, hide), ins)
    right = word_apply(word_apply(s, ins), hide)
    assert left == right
    assert left.text() == "z"
    assert not left.elements[0].visible


def test_normalize():
    assert word_normalize(EMPTY_WORD, InsCh(0, "x"), (1, 1)) == Insert(None, (1, 1), "x")
    s = build("ab")
    a, b = (e.eid for e in s.elements)
    assert word_normalize(s, DelCh(1), (1, 1)) == Hide(b)
    assert word_normalize(s, InsCh(2, "z"), (1, 1)) == Insert(b, (1, 1), "z")
    with pytest.raises(IndexError):
        word_normalize(s, DelCh(2), (1, 1))
    with pytest.raises(IndexError):
        word_normalize(s, InsCh(3, "z"), (1, 1))


def test_missing_anchor_and_buffering():
    later = Insert((1, 1), (1, 2), "b")
    with pytest.raises(MissingAnchor):
        word_apply(EMPTY_WORD, later)
    r = WordReplica()
    r.integrate(later)
    assert r.state.text() == "" and r.pending
    r.integrate(Insert(None, (1, 1), "a"))
    assert r.state.text() == "ab" and not r.pending


def test_serialize_shows_tombstones():
    s = build("ab")
    s = word_apply(s, Hide(s.elements[0].eid))
    assert word_serialize(s) == '<9;1:"a"-,9;2:"b"+>'


@st.composite
def concurrent_ops(draw):
    base = build(draw(st.text("xyz", max_size=4)))
    eids = [e.eid for e in base.elements]
    ops = []
    for site in range(1, draw(st.integers(2, 4)) + 1):
        if eids and draw(st.booleans()):
            ops.append(Hide(draw(st.sampled_from(eids))))
        else:
            anchor = draw(st.sampled_from([None, *eids]))
            ops.append(Insert(anchor, (site, 1), draw(st.sampled_from("abc"))))
    return base, ops


@settings(max_examples=200, deadline=None)
@given(concurrent_ops())
def test_concurrent_ops_commute(case):
    base, ops = case
    results = set()
    for perm in itertools.permutations(ops):
        s = base
        for op in perm:
            s = word_apply(s, op)
        results.add(s)
    assert len(results) == 1
    (final,) = results
    hidden = {e.eid for e in base.elements if not e.visible}
    assert all(not e.visible for e in final.elements if e.eid in hidden)
