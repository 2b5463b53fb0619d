import pytest

from ottree.tree import Edge, IdTree, EMPTY, gen, well_formed
from ottree import paths


def node(label, site, opnb, *children):
    return Edge(label, gen(site, opnb), IdTree(children))


@pytest.fixture
def phone_book() -> IdTree:
    """The identifier-tree phone book: Pat's phones and Henri's address."""
    return IdTree([
        node("Pat", 1, 1,
             node("Phone", 2, 1,
                  node("Home", 3, 1, node("0491543545", 4, 1)),
                  node("Cellular", 5, 1, node("0691543545", 6, 1)))),
        node("Henri", 2, 2,
             node("Address", 3, 2, node("45 Emile Caplant Street", 4, 2))),
    ])


@pytest.fixture
def phone_doc(phone_book) -> IdTree:
    return well_formed(phone_book, EMPTY)


@pytest.fixture
def name_phone_book() -> paths.NameTree:
    return paths.tree({
        "Pat": {"Phone": {"Home": {"0491543545": {}}, "Cellular": {"0691543545": {}}}},
        "Henri": {"Address": {"45 Emile Caplant Street": {}}},
    })


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
