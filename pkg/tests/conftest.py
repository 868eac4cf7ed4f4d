import random
from functools import lru_cache
from fractions import Fraction

import pytest

from spade.posit import P8, P16, P32

ALL_FORMATS = [P8, P16, P32]


@lru_cache(maxsize=None)
def p8_values():
    """Independent P(8,0) value table, built from the regime/fraction definition."""
    table = {}
    for bits in range(256):
        if bits in (0x00, 0x80):
            continue
        neg = bits >> 7
        body = (-bits & 0xFF) if neg else bits
        s = format(body, "08b")[1:]
        run = len(s) - len(s.lstrip(s[0]))
        k = run - 1 if s[0] == "1" else -run
        rest = s[run + 1:]
        frac = Fraction(int(rest, 2), 2 ** len(rest)) if rest else Fraction(0)
        v = Fraction(2) ** k * (1 + frac)
        table[bits] = -v if neg else v
    return table


def nearest_even_p8(x: Fraction) -> int:
    """Nearest P8 pattern by value distance (zero included), ties to the even pattern."""
    vals = dict(p8_values())
    vals[0] = Fraction(0)
    best = None
    for bits, v in vals.items():
        d = abs(v - x)
        if best is None or d < best[0] or (d == best[0] and bits % 2 == 0):
            best = (d, bits)
    return best[1]


@pytest.fixture
def rng():
    return random.Random(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
