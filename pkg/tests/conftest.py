import numpy as np
import pytest
from hypothesis import strategies as st

from substdim.core import Substitution, parse_substitution
from substdim.spectral import is_primitive

PD = "0 -> 01 ; 1 -> 00"
TM = "0 -> 01 ; 1 -> 10"
EQ = "0 -> 01 ; 1 -> 01"
F4 = "0 -> 0011 ; 1 -> 0101"
T3 = "a -> ab ; b -> cb ; c -> ac"
B3 = "0 -> 001 ; 1 -> 011"
# height 2: the even and odd positions of the fixed point carry different 2-blocks
H2 = "a -> aba ; b -> bcb ; c -> cba"


@pytest.fixture
def pd():
    return parse_substitution(PD)


@pytest.fixture
def tm():
    return parse_substitution(TM)


@pytest.fixture
def eq():
    return parse_substitution(EQ)


@pytest.fixture
def f4():
    return parse_substitution(F4)


@pytest.fixture
def t3():
    return parse_substitution(T3)


@st.composite
def substitutions(draw, max_size=4, max_length=4, primitive=True):
    size = draw(st.integers(2, max_size))
    length = draw(st.integers(2, max_length))
    images = draw(st.lists(st.lists(st.integers(0, size - 1), min_size=length, max_size=length),
                           min_size=size, max_size=size))
    theta = Substitution.from_images(tuple("abcd"[:size]), [tuple(w) for w in images])
    if primitive:
        from hypothesis import assume
        assume(is_primitive(theta)[0])
    return theta


def materialize(theta: Substitution, a: int, k: int) -> np.ndarray:
    word = np.array([a], dtype=np.int64)
    for _ in range(k):
        word = theta.apply_array(word)
    return word


_results = {}


def record(criterion: int, ok: bool, detail: str):
    _results[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results, key=str):
        ok, detail = _results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
