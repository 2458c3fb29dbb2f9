from pathlib import Path

import pytest
from hypothesis import settings, strategies as st

from cbrank import ordinals as O
from cbrank.streams import load_script

# evaluation times vary with the script drawn; examples are bounded by size instead
settings.register_profile("cbrank", deadline=None)
settings.load_profile("cbrank")

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def corpus():
    return {p.stem: load_script(p) for p in sorted(CORPUS_DIR.glob("*.seed"))}


@pytest.fixture(scope="session")
def ex1(corpus):
    return corpus["ex1"]


@st.composite
def cnf_below(draw, level=4, top=10):
    """Ordinals below w^level * top as CNF values."""
    terms = []
    for e in range(level - 1, -1, -1):
        c = draw(st.integers(0, top - 1 if e == level - 1 else 6))
        if c:
            terms.append((O.cnf(e), c))
    return O.CnfOrdinal(tuple(terms))


# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
