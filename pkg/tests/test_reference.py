from fractions import Fraction

import pytest

from spade.posit import P8, P16, P32, PositWord, to_real
from spade.reference import exact_dot, pattern_value, ref_mac, round_float, round_real

from conftest import ALL_FORMATS, nearest_even_p8


def pairs8(*pairs):
    return [(PositWord(a, P8), PositWord(b, P8)) for a, b in pairs]


@pytest.mark.parametrize("fmt", ALL_FORMATS)
def test_empty_sum_is_zero(fmt):
    assert ref_mac([], fmt).bits == 0


@pytest.mark.parametrize("pairs, expected", [
    ([(0x60, 0x68)], 0x74),                # 2 * 3 = 6
    ([(0x64, 0x64)], 0x74),                # 2.5 * 2.5 = 6.25, tie -> 6.0
    ([(0x20, 0x40)] * 16, 0x78),           # 16 * 0.5 = 8
    ([(0x7F, 0x7F), (0x81, 0x7F)], 0x00),  # maxpos^2 - maxpos^2 cancels exactly
    ([(0x80, 0x00)], 0x80),                # NaR * 0 = NaR
    ([(0x40, 0x40), (0x80, 0x40)], 0x80),
])
def test_ref_mac_p8(pairs, expected):
    assert ref_mac(pairs8(*pairs), P8).bits == expected


def test_times_one_identity_exhaustive_p8():
    for a in range(256):
        assert ref_mac(pairs8((a, 0x40)), P8).bits == a


def test_round_real_agrees_with_value_nearest_p8():
    # every half-ulp point between neighbours plus the extremes
    for bits in range(1, 0x7F):
        lo = pattern_value(bits, 8, 0)
        hi = pattern_value(bits + 1, 8, 0)
        for x in (lo, (lo + hi) / 2, (3 * lo + hi) / 4, (lo + 3 * hi) / 4):
            assert round_real(x, P8).bits == nearest_even_p8(x)
            assert round_real(-x, P8).bits == nearest_even_p8(-x)


@pytest.mark.parametrize("fmt", ALL_FORMATS)
def test_round_real_saturates(fmt):
    assert round_real(Fraction(2) ** 1000, fmt).bits == fmt.maxpos_bits
    assert round_real(-Fraction(2) ** 1000, fmt).bits == (-fmt.maxpos_bits) & fmt.mask


@pytest.mark.parametrize("fmt, x, expected", [
    (P8, 0.3, 0x13),          # 0.25 * (1 + 3/16) = 0.296875 is the nearest P8 value
    (P8, 1.0, 0x40),
    (P8, 0.0, 0x00),
    (P16, 0.3, 0x2333),       # 0.25 * (1 + 819/4096)
    (P32, 1.0, 0x40000000),
    (P8, float("nan"), 0x80),
    (P16, float("inf"), 0x8000),
])
def test_round_float(fmt, x, expected):
    assert round_float(x, fmt).bits == expected


def test_p16_rounding_uses_bit_string_boundary():
    # Near maxpos the exponent field is cut off; the boundary between
    # 0x7FFE (2^26) and 0x7FFF (2^28) is the 17-bit pattern 0xFFFD = 2^27.
    assert pattern_value(0xFFFD, 17, 1) == Fraction(2) ** 27
    assert round_real(Fraction(2) ** 27, P16).bits == 0x7FFE       # tie, even pattern
    assert round_real(Fraction(2) ** 27 + 1, P16).bits == 0x7FFF


def test_exact_dot():
    assert exact_dot(pairs8((0x60, 0x68), (0x64, 0x64))) == Fraction(49, 4)
    assert exact_dot(pairs8((0x80, 0x40))) is None


def test_format_mismatch():
    with pytest.raises(ValueError):
        ref_mac([(PositWord(0x40, P8), PositWord(0x4000, P16))], P8)
