"""Precision-configurable SIMD blocks over a 32-bit lane container.

The container is split into four 8-bit segments. MODE fuses them into
4 x 8-bit (P8), 2 x 16-bit (P16) or 1 x 32-bit (P32) lanes; lane 0 always sits
in the least significant bits. Each block works segment by segment and gates
whatever crosses a segment edge (carries, leading-one priority, shifted bits,
partial-product sums) on whether the two segments belong to the same lane.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .posit import P8, P16, P32, PositFormat

WORD_BITS = 32
SEGMENT_BITS = 8
SEGMENTS = WORD_BITS // SEGMENT_BITS
WORD_MASK = (1 << WORD_BITS) - 1


class InvalidModeError(ValueError):
    pass


class Mode(enum.IntEnum):
    P8 = 0b00
    P16 = 0b01
    P32 = 0b10

    def __init__(self, code):
        self.lanes = 4 >> code
        self.lane_width = WORD_BITS // self.lanes
        self.lane_mask = (1 << self.lane_width) - 1
        self.segments_per_lane = self.lane_width // SEGMENT_BITS

    @classmethod
    def from_code(cls, code: int) -> Mode:
        try:
            return cls(code)
        except ValueError:
            raise InvalidModeError(f"MODE code {code:#04b} is reserved") from None

    @classmethod
    def from_name(cls, name: str) -> Mode:
        try:
            return cls[name.upper()]
        except KeyError:
            raise InvalidModeError(f"unknown mode {name!r} (expected p8, p16 or p32)") from None

    @property
    def fmt(self) -> PositFormat:
        return _MODE_FORMATS[self]


_MODE_FORMATS = {Mode.P8: P8, Mode.P16: P16, Mode.P32: P32}


def mode_for_format(fmt: PositFormat) -> Mode:
    return {P8: Mode.P8, P16: Mode.P16, P32: Mode.P32}[fmt]


def as_mode(mode) -> Mode:
    if isinstance(mode, Mode):
        return mode
    if isinstance(mode, str):
        return Mode.from_name(mode)
    return Mode.from_code(mode)


def unpack_lanes(word: int, mode: Mode) -> list[int]:
    w, m = mode.lane_width, mode.lane_mask
    return [(word >> (w * i)) & m for i in range(mode.lanes)]


def pack_lanes(values: Sequence[int], mode: Mode) -> int:
    if len(values) != mode.lanes:
        raise ValueError(f"{mode.name} packs {mode.lanes} lanes, got {len(values)}")
    w, m = mode.lane_width, mode.lane_mask
    word = 0
    for i, v in enumerate(values):
        if not 0 <= v <= m:
            raise ValueError(f"lane {i} value {v:#x} exceeds {w} bits")
        word |= v << (w * i)
    return word


def _check_lane_args(values: Sequence, mode: Mode, what: str):
    if len(values) != mode.lanes:
        raise ValueError(f"{what} needs {mode.lanes} entries in {mode.name} mode, got {len(values)}")


# -- complementor ------------------------------------------------------------

def simd_complement(x: int, neg_mask: Sequence[bool], mode) -> int:
    """Two's-complement the lanes selected by ``neg_mask``.

    Segments are inverted and incremented through an 8-bit ripple chain. The
    carry leaving a segment enters the next one only when both belong to the
    same lane; a lane's bottom segment always takes the +1 injection.
    """
    mode = as_mode(mode)
    _check_lane_args(neg_mask, mode, "neg_mask")
    spl = mode.segments_per_lane
    out = 0
    carry = 0
    for seg in range(SEGMENTS):
        lane = seg // spl
        byte = (x >> (SEGMENT_BITS * seg)) & 0xFF
        if seg % spl == 0:
            carry = 1 if neg_mask[lane] else 0
        if neg_mask[lane]:
            total = (byte ^ 0xFF) + carry
            byte, carry = total & 0xFF, total >> SEGMENT_BITS
        out |= byte << (SEGMENT_BITS * seg)
    return out


# -- leading-one detector -----------------------------------------------------

@dataclass(frozen=True)
class LodResult:
    position: int
    valid: bool


def _lod8(byte: int) -> tuple[int, bool]:
    if byte == 0:
        return 0, False
    return 8 - byte.bit_length(), True


def simd_lod(x: int, mode) -> list[LodResult]:
    """Leading-one position per lane, counted from the lane MSB.

    Four 8-bit detectors run in parallel; within a lane the highest segment
    with a set bit wins and contributes its offset.
    """
    mode = as_mode(mode)
    spl = mode.segments_per_lane
    results = []
    for lane in range(mode.lanes):
        found = LodResult(0, False)
        for j in range(spl):
            seg = lane * spl + (spl - 1 - j)
            pos, valid = _lod8((x >> (SEGMENT_BITS * seg)) & 0xFF)
            if valid:
                found = LodResult(j * SEGMENT_BITS + pos, True)
                break
        results.append(found)
    return results


def wide_lod(value: int, width: int) -> LodResult:
    """Leading one of a ``width``-bit register, from P32-mode LOD slices.

    Used to normalize quire contents (32, 128 or 512 bits) with the same
    detector the operand path uses.
    """
    chunks = width // WORD_BITS
    for j in range(chunks):
        chunk = (value >> (WORD_BITS * (chunks - 1 - j))) & WORD_MASK
        (res,) = simd_lod(chunk, Mode.P32)
        if res.valid:
            return LodResult(j * WORD_BITS + res.position, True)
    return LodResult(0, False)


# -- logarithmic barrel shifter ------------------------------------------------

LEFT = "left"
RIGHT_ARITH = "right"


def _shift_stage(lanes: list[int], amounts: Sequence[int], stage: int, direction: str, mode: Mode) -> list[int]:
    dist = 1 << stage
    w, m = mode.lane_width, mode.lane_mask
    if direction == LEFT:
        return [(v << dist) & m if (amt >> stage) & 1 else v for v, amt in zip(lanes, amounts)]
    sign_bit = 1 << (w - 1)
    fill = (m << (w - dist)) & m
    return [((v >> dist) | (fill if v & sign_bit else 0)) if (amt >> stage) & 1 else v
            for v, amt in zip(lanes, amounts)]


def shift_stages(mode) -> int:
    return _STAGES[as_mode(mode)]


_STAGES = {m: m.lane_width.bit_length() - 1 for m in Mode}


def simd_shift(x: int, amounts: Sequence[int], direction: str, mode) -> int:
    """Per-lane shift built from log2(lane width) power-of-two stages.

    ``direction`` is ``"left"`` or ``"right"`` (arithmetic, replicating each
    lane's own sign bit). Bits never cross a lane edge.
    """
    mode = as_mode(mode)
    _check_lane_args(amounts, mode, "amounts")
    if direction not in (LEFT, RIGHT_ARITH):
        raise ValueError(f"unknown shift direction {direction!r}")
    for a in amounts:
        if not 0 <= a < mode.lane_width:
            raise ValueError(f"shift amount {a} out of range for {mode.lane_width}-bit lanes")
    lanes = unpack_lanes(x, mode)
    control = 0
    for a in amounts:
        control |= a
    for stage in range(_STAGES[mode]):
        # a stage whose select line is low in every lane passes data through
        if (control >> stage) & 1:
            lanes = _shift_stage(lanes, amounts, stage, direction, mode)
    return pack_lanes(lanes, mode)


# -- partitioned multiplier ----------------------------------------------------

def _partial_product_map(mode: Mode) -> tuple[tuple[int, int, int, int], ...]:
    """``(i, j, lane, weight)`` for each 8x8 multiplier the mode enables."""
    spl = mode.segments_per_lane
    table = []
    for lane in range(mode.lanes):
        base = lane * spl
        for i in range(base, base + spl):
            for j in range(base, base + spl):
                table.append((i, j, lane, SEGMENT_BITS * ((i - base) + (j - base))))
    return tuple(table)


_PP_MAP = {m: _partial_product_map(m) for m in Mode}


def _segments(x: int) -> tuple[int, int, int, int]:
    return x & 0xFF, (x >> 8) & 0xFF, (x >> 16) & 0xFF, (x >> 24) & 0xFF


def sub_products(a: int, b: int, mode) -> list[tuple[int, int, int]]:
    """The 8x8 partial products the given mode activates.

    Returns ``(i, j, product)`` for segment ``i`` of ``a`` and segment ``j``
    of ``b``; only pairs inside one lane are enabled, giving 4 / 8 / 16
    multipliers in P8 / P16 / P32 mode.
    """
    mode = as_mode(mode)
    a_seg, b_seg = _segments(a), _segments(b)
    return [(i, j, a_seg[i] * b_seg[j]) for i, j, _, _ in _PP_MAP[mode]]


def simd_multiply(a: int, b: int, mode) -> list[int]:
    """Unsigned per-lane products, 2 x lane width bits each.

    Every lane product is the shifted sum of its enabled 8x8 sub-products.
    """
    mode = as_mode(mode)
    a_seg, b_seg = _segments(a), _segments(b)
    products = [0] * mode.lanes
    for i, j, lane, weight in _PP_MAP[mode]:
        products[lane] += (a_seg[i] * b_seg[j]) << weight
    return products
