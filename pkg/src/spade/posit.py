"""Scalar Posit(n, es) words: decode, encode and round-to-nearest-even packing.

Only the three formats used by the MAC engine exist: P8 = Posit(8,0),
P16 = Posit(16,1) and P32 = Posit(32,2).

Negative words are the two's complement of the positive encoding, so every
field extraction and every rounding decision happens on the magnitude.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction


class PositClass(enum.IntEnum):
    ZERO = 0
    NORMAL = 1
    NAR = 2


@dataclass(frozen=True)
class PositFormat:
    n: int
    es: int

    def __post_init__(self):
        if (self.n, self.es) not in _LEGAL_FORMATS:
            raise ValueError(f"unsupported posit format ({self.n},{self.es})")

    @property
    def name(self) -> str:
        return f"p{self.n}"

    @property
    def mask(self) -> int:
        return (1 << self.n) - 1

    @property
    def frac_width(self) -> int:
        """Width F of the fraction register, hidden bit included."""
        return self.n - 1

    @property
    def sf_max(self) -> int:
        return (self.n - 2) << self.es

    @property
    def sf_min(self) -> int:
        return -self.sf_max

    @property
    def nar_bits(self) -> int:
        return 1 << (self.n - 1)

    @property
    def maxpos_bits(self) -> int:
        return (1 << (self.n - 1)) - 1

    @property
    def hex_digits(self) -> int:
        return self.n // 4

    def __str__(self):
        return f"Posit({self.n},{self.es})"


_LEGAL_FORMATS = {(8, 0), (16, 1), (32, 2)}

P8 = PositFormat(8, 0)
P16 = PositFormat(16, 1)
P32 = PositFormat(32, 2)
FORMATS = {"p8": P8, "p16": P16, "p32": P32}


def format_by_name(name: str) -> PositFormat:
    try:
        return FORMATS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown posit format {name!r} (expected p8, p16 or p32)") from None


@dataclass(frozen=True)
class PositWord:
    bits: int
    fmt: PositFormat

    def __post_init__(self):
        if not 0 <= self.bits <= self.fmt.mask:
            raise ValueError(f"{self.bits:#x} does not fit in {self.fmt.n} bits")

    @classmethod
    def from_hex(cls, text: str, fmt: PositFormat) -> PositWord:
        text = text.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        if len(text) != fmt.hex_digits:
            raise ValueError(f"expected {fmt.hex_digits} hex digits for {fmt.name}, got {text!r}")
        return cls(int(text, 16), fmt)

    def hex(self) -> str:
        return format(self.bits, f"0{self.fmt.hex_digits}x")

    @property
    def is_zero(self) -> bool:
        return self.bits == 0

    @property
    def is_nar(self) -> bool:
        return self.bits == self.fmt.nar_bits

    def negate(self) -> PositWord:
        return PositWord(-self.bits & self.fmt.mask, self.fmt)

    def __repr__(self):
        return f"PositWord({self.fmt.name}:{self.hex()})"


def zero(fmt: PositFormat) -> PositWord:
    return PositWord(0, fmt)


def nar(fmt: PositFormat) -> PositWord:
    return PositWord(fmt.nar_bits, fmt)


def one(fmt: PositFormat) -> PositWord:
    return PositWord(1 << (fmt.n - 2), fmt)


def maxpos(fmt: PositFormat) -> PositWord:
    return PositWord(fmt.maxpos_bits, fmt)


def minpos(fmt: PositFormat) -> PositWord:
    return PositWord(1, fmt)


@dataclass(frozen=True)
class DecodedPosit:
    """Unpacked fields of a posit.

    ``frac`` holds the hidden bit explicitly and is left-aligned to
    ``fmt.frac_width`` bits, so its value is ``frac / 2**(F-1)`` in [1, 2).
    Zero and NaR carry all-zero fields.
    """

    cls: PositClass
    sign: bool
    k: int
    e: int
    frac: int
    fmt: PositFormat

    @property
    def sf(self) -> int:
        return (self.k << self.fmt.es) + self.e

    @classmethod
    def normal(cls, sign: bool, k: int, e: int, frac: int, fmt: PositFormat) -> DecodedPosit:
        return cls(PositClass.NORMAL, sign, k, e, frac, fmt)

    @classmethod
    def special(cls, kind: PositClass, fmt: PositFormat) -> DecodedPosit:
        return cls(kind, False, 0, 0, 0, fmt)

    @property
    def is_zero(self) -> bool:
        return self.cls is PositClass.ZERO

    @property
    def is_nar(self) -> bool:
        return self.cls is PositClass.NAR


def decode_bits(bits: int, fmt: PositFormat) -> DecodedPosit:
    n, es = fmt.n, fmt.es
    if bits == 0:
        return DecodedPosit.special(PositClass.ZERO, fmt)
    if bits == fmt.nar_bits:
        return DecodedPosit.special(PositClass.NAR, fmt)
    sign = bool(bits >> (n - 1))
    if sign:
        bits = -bits & fmt.mask
    # n-1 body bits follow the sign; the regime is the leading run of equal bits
    body = bits & (fmt.mask >> 1)
    first = (body >> (n - 2)) & 1
    run = 0
    pos = n - 2
    while pos >= 0 and ((body >> pos) & 1) == first:
        run += 1
        pos -= 1
    k = run - 1 if first else -run
    # skip the terminator; whatever remains is exponent then fraction
    remaining = max(pos, 0)
    rest = body & ((1 << remaining) - 1)
    if remaining >= es:
        e = rest >> (remaining - es)
        nfrac = remaining - es
        fbits = rest & ((1 << nfrac) - 1)
    else:
        e = rest << (es - remaining)
        nfrac = 0
        fbits = 0
    frac = (1 << (n - 2)) | (fbits << (n - 2 - nfrac))
    return DecodedPosit.normal(sign, k, e, frac, fmt)


def decode(w: PositWord) -> DecodedPosit:
    return decode_bits(w.bits, w.fmt)


def round_pack_bits(sign: bool, sf: int, frac_extended: int, sticky: bool, fmt: PositFormat) -> int:
    """Integer-level :func:`round_pack`; returns the raw n-bit pattern."""
    if frac_extended == 0:
        return 0
    n, es = fmt.n, fmt.es
    keep = n - 1
    if sf >= fmt.sf_max:
        mag = fmt.maxpos_bits
    else:
        k = sf >> es
        if k < -keep:
            # regime alone is longer than the word plus guard: rounds to zero
            return 0
        e = sf & ((1 << es) - 1)
        w = frac_extended.bit_length()
        fbits = frac_extended & ((1 << (w - 1)) - 1)
        if k >= 0:
            regime, rlen = ((1 << (k + 1)) - 1) << 1, k + 2
        else:
            regime, rlen = 1, 1 - k
        body = (((regime << es) | e) << (w - 1)) | fbits
        blen = rlen + es + w - 1
        if blen <= keep:
            mag = body << (keep - blen)
        else:
            drop = blen - keep
            mag = body >> drop
            guard = (body >> (drop - 1)) & 1
            rest = body & ((1 << (drop - 1)) - 1)
            if guard and (rest or sticky or (mag & 1)):
                mag += 1
    if mag == 0:
        return 0
    return (-mag & fmt.mask) if sign else mag


def round_pack(sign: bool, sf: int, frac_extended: int, sticky: bool, fmt: PositFormat) -> PositWord:
    """Pack a normalized magnitude ``1.f * 2**sf`` into the nearest posit.

    ``frac_extended`` has its hidden bit as the most significant set bit; any
    width is accepted. ``sticky`` ORs in bits already discarded below it.
    Rounding is round-to-nearest-even on the posit encoding: bits below the
    last kept bit supply guard and sticky. Scale factors at or above
    ``sf_max`` saturate to maxpos; tiny magnitudes round to minpos or zero.
    """
    return PositWord(round_pack_bits(sign, sf, frac_extended, sticky, fmt), fmt)


def encode(d: DecodedPosit) -> PositWord:
    fmt = d.fmt
    if d.cls is PositClass.ZERO:
        return zero(fmt)
    if d.cls is PositClass.NAR:
        return nar(fmt)
    return round_pack(d.sign, d.sf, d.frac, False, fmt)


def to_real(w: PositWord) -> Fraction:
    """Exact value of ``w`` as a Fraction. NaR raises ``ValueError``."""
    d = decode(w)
    if d.is_nar:
        raise ValueError("NaR has no real value")
    if d.is_zero:
        return Fraction(0)
    exp = d.sf - (w.fmt.n - 2)
    mag = Fraction(d.frac << exp) if exp >= 0 else Fraction(d.frac, 1 << -exp)
    return -mag if d.sign else mag


def twos_complement(w: PositWord) -> PositWord:
    return w.negate()


def signed_value(bits: int, fmt: PositFormat) -> int:
    """Interpret an n-bit pattern as a two's-complement integer.

    Posit ordering equals the ordering of these integers (NaR is the minimum).
    """
    return bits - (1 << fmt.n) if bits >> (fmt.n - 1) else bits


def dyadic_str(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"
