"""Wide fixed-point accumulator for exact sums of posit products.

The stored integer equals ``value * 2**(2*sf_max)``, so the least significant
bit weighs ``minpos**2`` and every product of two posits lands on an integer.
Widths come out at 32 / 128 / 512 bits for P8 / P16 / P32.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .posit import DecodedPosit, PositClass, PositFormat, PositWord, round_pack_bits


class QuireOverflowError(ArithmeticError):
    """Raised in checked mode when an accumulation wraps the register."""


def quire_width(fmt: PositFormat) -> int:
    return ((fmt.n - 2) << (fmt.es + 2)) + 1 + (fmt.n - 1)


def quire_point(fmt: PositFormat) -> int:
    """Number of bits below the binary point."""
    return 2 * fmt.sf_max


def wrap(acc: int, width: int) -> int:
    """Reduce ``acc`` to a signed ``width``-bit two's-complement value."""
    acc &= (1 << width) - 1
    if acc >> (width - 1):
        acc -= 1 << width
    return acc


@dataclass(frozen=True)
class Quire:
    acc: int
    fmt: PositFormat
    nar: bool = False

    @property
    def width(self) -> int:
        return quire_width(self.fmt)

    def hex(self) -> str:
        """Two's-complement dump of the whole register, W/4 hex digits."""
        w = self.width
        return format(self.acc & ((1 << w) - 1), f"0{w // 4}x")

    @classmethod
    def from_hex(cls, text: str, fmt: PositFormat, nar: bool = False) -> Quire:
        return cls(wrap(int(text, 16), quire_width(fmt)), fmt, nar)


def quire_zero(fmt: PositFormat) -> Quire:
    return Quire(0, fmt)


def add_aligned(q: Quire, negative: bool, product: int, scale: int, *, check: bool = False) -> Quire:
    """Add ``(-1)**negative * product * 2**scale / 2**(2F-2)`` to ``q``.

    ``product`` is an unsigned mantissa product of two F-bit fractions, which
    carries 2F-2 fraction bits; ``scale`` is the sum of the operand scale
    factors. The signed product is aligned with an arithmetic shift.
    """
    fmt = q.fmt
    shift = scale + quire_point(fmt) - 2 * (fmt.n - 2)
    signed = -product if negative else product
    if shift >= 0:
        aligned = signed << shift
    else:
        aligned = signed >> -shift
        if check and (aligned << -shift) != signed:
            raise AssertionError("product alignment dropped set bits")
    width = quire_width(fmt)
    total = q.acc + aligned
    wrapped = wrap(total, width)
    if check and wrapped != total:
        raise QuireOverflowError(f"{fmt.name} quire wrapped past {width} bits")
    return Quire(wrapped, fmt, q.nar)


def quire_add_product(q: Quire, a: DecodedPosit, b: DecodedPosit, enable: bool = True, *,
                      check: bool = False) -> Quire:
    if not enable:
        return q
    if a.cls is PositClass.NAR or b.cls is PositClass.NAR:
        return Quire(q.acc, q.fmt, True)
    if a.cls is PositClass.ZERO or b.cls is PositClass.ZERO:
        return q
    return add_aligned(q, a.sign != b.sign, a.frac * b.frac, a.sf + b.sf, check=check)


@dataclass(frozen=True)
class Normalized:
    """Quire contents re-expressed as ``(-1)**sign * frac_ext * 2**(sf - F - 1)``.

    ``frac_ext`` is F+2 bits wide: hidden bit, F-1 fraction bits, then guard
    and round. ``sticky`` is the OR of every quire bit below those.
    """

    cls: PositClass
    sign: bool = False
    sf: int = 0
    frac_ext: int = 0
    sticky: bool = False

    @property
    def guard(self) -> int:
        return (self.frac_ext >> 1) & 1

    @property
    def round(self) -> int:
        return self.frac_ext & 1


def extract(negative: bool, mag: int, msb: int, fmt: PositFormat) -> Normalized:
    """Slice F+2 bits below and including quire bit ``msb`` of ``mag``."""
    width = fmt.n + 1
    low = msb + 1 - width
    if low >= 0:
        frac_ext = mag >> low
        sticky = (mag & ((1 << low) - 1)) != 0
    else:
        frac_ext = mag << -low
        sticky = False
    return Normalized(PositClass.NORMAL, negative, msb - quire_point(fmt), frac_ext, sticky)


def normalize(q: Quire) -> Normalized:
    if q.nar:
        return Normalized(PositClass.NAR)
    if q.acc == 0:
        return Normalized(PositClass.ZERO)
    mag = -q.acc if q.acc < 0 else q.acc
    return extract(q.acc < 0, mag, mag.bit_length() - 1, q.fmt)


def pack_normalized(norm: Normalized, fmt: PositFormat) -> int:
    if norm.cls is PositClass.NAR:
        return fmt.nar_bits
    if norm.cls is PositClass.ZERO:
        return 0
    return round_pack_bits(norm.sign, norm.sf, norm.frac_ext, norm.sticky, fmt)


def quire_to_posit(q: Quire) -> PositWord:
    return PositWord(pack_normalized(normalize(q), q.fmt), q.fmt)


def quire_value(q: Quire) -> Fraction:
    """Exact rational value held by ``q`` (NaR raises ``ValueError``)."""
    if q.nar:
        raise ValueError("quire holds NaR")
    return Fraction(q.acc, 1 << quire_point(q.fmt))
