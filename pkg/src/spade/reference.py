"""Golden scalar MAC: exact rational dot product, rounded once by search.

Nothing here touches the quire or the SIMD datapath. Operand values come from
``to_real``; candidate values during rounding come from a separate string-based
decoder that works for any (nbits, es), which the search needs for the
one-bit-longer posit sitting between two neighbours.

Rounding rule: find the neighbours ``lo <= x < hi`` in the posit ordering and
compare ``x`` with the value of the (n+1)-bit posit whose pattern lies between
them (``2*lo + 1``). Above it rounds up, below rounds down, equal picks the
pattern with an even last bit. Wherever the neighbours share regime and
exponent this boundary is their arithmetic midpoint; where the regime has
crowded out exponent bits it is the midpoint of the encoding instead, which is
the convention of the posit standard and of SoftPosit.
"""

from __future__ import annotations

import bisect
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional

from .posit import PositFormat, PositWord, nar, to_real, zero


@lru_cache(maxsize=1 << 16)
def pattern_value(bits: int, nbits: int, es: int) -> Optional[Fraction]:
    """Exact value of an arbitrary Posit(nbits, es) pattern; None for NaR."""
    s = format(bits, f"0{nbits}b")
    if "1" not in s:
        return Fraction(0)
    if s == "1" + "0" * (nbits - 1):
        return None
    negative = s[0] == "1"
    if negative:
        s = format((1 << nbits) - bits, f"0{nbits}b")
    body = s[1:]
    lead = body[0]
    run = len(body) - len(body.lstrip(lead))
    k = run - 1 if lead == "1" else -run
    tail = body[run + 1:]
    exp_bits = tail[:es].ljust(es, "0")
    e = int(exp_bits, 2) if es else 0
    frac_bits = tail[es:]
    frac = Fraction(int(frac_bits, 2), 1 << len(frac_bits)) if frac_bits else Fraction(0)
    value = (1 + frac) * Fraction(2) ** (k * (1 << es) + e)
    return -value if negative else value


def _value(bits: int, fmt: PositFormat) -> Fraction:
    return pattern_value(bits, fmt.n, fmt.es)


def round_real(x: Fraction, fmt: PositFormat) -> PositWord:
    """Nearest posit to the exact rational ``x`` (ties to even pattern)."""
    if x == 0:
        return zero(fmt)
    negative = x < 0
    mag = -x if negative else x
    top = fmt.maxpos_bits
    if mag >= _value(top, fmt):
        bits = top
    else:
        # largest positive pattern whose value is <= mag (0 when below minpos)
        lo = bisect.bisect_right(range(1, top + 1), mag, key=lambda p: _value(p, fmt))
        if lo and _value(lo, fmt) == mag:
            bits = lo
        else:
            boundary = pattern_value(2 * lo + 1, fmt.n + 1, fmt.es)
            if mag > boundary:
                bits = lo + 1
            elif mag < boundary:
                bits = lo
            else:
                bits = lo if lo % 2 == 0 else lo + 1
    if negative and bits:
        bits = (1 << fmt.n) - bits
    return PositWord(bits, fmt)


def round_float(x: float, fmt: PositFormat) -> PositWord:
    """``round_real`` for a binary float; non-finite values map to NaR."""
    if not math.isfinite(x):
        return nar(fmt)
    return round_real(Fraction(x), fmt)


def exact_dot(pairs: Iterable[tuple[PositWord, PositWord]]) -> Optional[Fraction]:
    """Exact sum of products, or None if any operand is NaR."""
    total = Fraction(0)
    for a, b in pairs:
        if a.is_nar or b.is_nar:
            return None
        if a.bits and b.bits:
            total += to_real(a) * to_real(b)
    return total


def ref_mac(pairs: Iterable[tuple[PositWord, PositWord]], fmt: PositFormat) -> PositWord:
    pairs = list(pairs)
    for a, b in pairs:
        if a.fmt != fmt or b.fmt != fmt:
            raise ValueError(f"operand format mismatch: expected {fmt}")
    total = exact_dot(pairs)
    if total is None:
        return nar(fmt)
    return round_real(total, fmt)
