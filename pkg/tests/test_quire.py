import random
from fractions import Fraction

import pytest

from spade.posit import P8, P16, P32, PositWord, decode, maxpos, minpos, nar, one, to_real
from spade.quire import (Quire, QuireOverflowError, quire_add_product, quire_point, quire_to_posit,
                         quire_value, quire_width, quire_zero)

from conftest import ALL_FORMATS


def w8(bits):
    return decode(PositWord(bits, P8))


@pytest.mark.parametrize("fmt, width", [(P8, 32), (P16, 128), (P32, 512)])
def test_width(fmt, width):
    assert quire_width(fmt) == width
    assert quire_zero(fmt).width == width
    assert quire_point(fmt) == 2 * fmt.sf_max


def test_zero_quire():
    q = quire_zero(P8)
    assert q.acc == 0 and not q.nar
    assert quire_to_posit(q).bits == 0x00


def test_two_times_three():
    q = quire_add_product(quire_zero(P8), w8(0x60), w8(0x68))
    assert quire_value(q) == 6
    assert q.acc == 6 << 12


def test_bypass():
    q = quire_add_product(quire_zero(P8), w8(0x60), w8(0x68))
    assert quire_add_product(q, w8(0x7F), w8(0x7F), enable=False) == q


def test_nar_poisons():
    q = quire_add_product(quire_zero(P8), w8(0x80), w8(0x40))
    assert q.nar
    q = quire_add_product(q, w8(0x40), w8(0x40))
    assert q.nar
    assert quire_to_posit(q).bits == 0x80


def test_sixteen_halves_is_eight():
    q = quire_zero(P8)
    for _ in range(16):
        q = quire_add_product(q, w8(0x20), w8(0x40))
    assert quire_value(q) == 8
    assert quire_to_posit(q).bits == 0x78


@pytest.mark.parametrize("acc, expected", [(1 << 12, 0x40), (25 << 10, 0x74), (-(25 << 10), 0x8C)])
def test_readout_p8(acc, expected):
    from spade.quire import wrap
    assert quire_to_posit(Quire(wrap(acc, 32), P8)).bits == expected


@pytest.mark.parametrize("fmt", ALL_FORMATS)
def test_minpos_squared_is_one_lsb(fmt):
    q = quire_add_product(quire_zero(fmt), decode(minpos(fmt)), decode(minpos(fmt)))
    assert q.acc == 1
    # minpos^2 is far below minpos/2, so the readout is zero
    assert quire_to_posit(q).bits == 0


@pytest.mark.parametrize("fmt", ALL_FORMATS)
def test_capacity_bound(fmt):
    # 2^(n-1) - 1 products of maxpos^2 fit; one more wraps the sign bit
    top = decode(maxpos(fmt))
    q = quire_zero(fmt)
    limit = (1 << (fmt.n - 1)) - 1
    q = Quire(limit * (1 << (4 * fmt.sf_max)), fmt)  # the sum of `limit` maxpos^2 products
    assert quire_value(q) == limit * to_real(maxpos(fmt)) ** 2
    with pytest.raises(QuireOverflowError):
        quire_add_product(q, top, top, check=True)
    wrapped = quire_add_product(q, top, top)
    assert quire_value(wrapped) < 0


def test_capacity_bound_by_accumulation_p8():
    top = w8(0x7F)
    q = quire_zero(P8)
    for _ in range(127):
        q = quire_add_product(q, top, top, check=True)
    assert quire_value(q) == 127 * 4096
    assert quire_to_posit(q).bits == 0x7F
    with pytest.raises(QuireOverflowError):
        quire_add_product(q, top, top, check=True)


def test_negative_maxpos_squared_sum_fits():
    # the negative side holds one more product than the positive side
    top, neg = w8(0x7F), w8(0x81)
    q = quire_zero(P8)
    for _ in range(128):
        q = quire_add_product(q, top, neg, check=True)
    assert quire_value(q) == -128 * 4096


@pytest.mark.parametrize("fmt", ALL_FORMATS)
def test_random_accumulation_exact(fmt):
    rng = random.Random(fmt.n)
    q = quire_zero(fmt)
    exact = Fraction(0)
    for _ in range(200):
        a, b = PositWord(rng.getrandbits(fmt.n), fmt), PositWord(rng.getrandbits(fmt.n), fmt)
        if a.is_nar or b.is_nar:
            continue
        q = quire_add_product(q, decode(a), decode(b))
        exact += to_real(a) * to_real(b)
    assert quire_value(q) == exact


def test_hex_roundtrip():
    q = quire_add_product(quire_zero(P16), decode(one(P16)), decode(PositWord(0x5000, P16)))
    assert Quire.from_hex(q.hex(), P16) == q
    assert len(q.hex()) == 32


def test_times_one_readout_exhaustive_p8():
    unit = w8(0x40)
    for bits in range(256):
        q = quire_add_product(quire_zero(P8), w8(bits), unit)
        assert quire_to_posit(q).bits == bits


@pytest.mark.parametrize("fmt", ALL_FORMATS)
def test_sign_cancellation(fmt):
    rng = random.Random(99)
    for _ in range(300):
        a, b = rng.getrandbits(fmt.n), rng.getrandbits(fmt.n)
        if fmt.nar_bits in (a, b):
            continue
        q = quire_add_product(quire_zero(fmt), decode(PositWord(a, fmt)), decode(PositWord(b, fmt)))
        q = quire_add_product(q, decode(PositWord((-a) & fmt.mask, fmt)), decode(PositWord(b, fmt)))
        assert q.acc == 0 and not q.nar
