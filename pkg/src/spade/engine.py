"""Behavioral model of the five-stage SIMD posit MAC engine.

One :meth:`SpadeEngine.issue` retires one multiply-accumulate per active lane:

1. unpack each lane (complementor, LOD and shifter recover sign, regime,
   exponent and fraction with its hidden bit),
2. multiply the fractions on the partitioned multiplier,
3. align and add the products into per-lane quires under the lane enables.

:meth:`SpadeEngine.readout` performs the remaining two stages on every lane:
normalize the quire through the wide LOD, then round-to-nearest-even and pack.
Readout does not disturb the quires.

Per-lane quires live in one 512-bit backing register partitioned by mode:
4 x 32 bits for P8, 2 x 128 for P16, 1 x 512 for P32.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from .posit import DecodedPosit, PositClass, PositWord, one
from .quire import (Normalized, Quire, add_aligned, extract, pack_normalized, quire_width,
                    quire_zero)
from .simd import (LEFT, Mode, as_mode, pack_lanes, simd_complement, simd_lod, simd_multiply,
                   simd_shift, unpack_lanes, wide_lod)

BACKING_BITS = 512


# -- stage functions -----------------------------------------------------------

def unpack_operands(word: int, mode) -> tuple[DecodedPosit, ...]:
    """Stage 1 for every lane of one operand word."""
    mode = as_mode(mode)
    return _unpack_cached(word, mode)


@lru_cache(maxsize=1 << 16)
def _unpack_cached(word: int, mode: Mode) -> tuple[DecodedPosit, ...]:
    fmt = mode.fmt
    n, es, lanes = fmt.n, fmt.es, mode.lanes
    raw = unpack_lanes(word, mode)
    signs = [bool(v >> (n - 1)) for v in raw]
    mag = simd_complement(word, signs, mode)
    body = simd_shift(mag, [1] * lanes, LEFT, mode)
    body_lanes = unpack_lanes(body, mode)
    regime_ones = [bool(v >> (n - 1)) for v in body_lanes]
    # a run of ones is detected as the leading one of the inverted body
    inverted = body ^ pack_lanes([fmt.mask if r else 0 for r in regime_ones], mode)
    lod = simd_lod(inverted, mode)
    runs = [r.position for r in lod]
    aligned = simd_shift(body, [min(m + 1, n - 1) for m in runs], LEFT, mode)
    exps = [v >> (n - es) for v in unpack_lanes(aligned, mode)] if es else [0] * lanes
    fracs = unpack_lanes(simd_shift(aligned, [es] * lanes, LEFT, mode), mode)
    out = []
    hidden = 1 << (n - 2)
    for i in range(lanes):
        if raw[i] == 0:
            out.append(DecodedPosit.special(PositClass.ZERO, fmt))
        elif raw[i] == fmt.nar_bits:
            out.append(DecodedPosit.special(PositClass.NAR, fmt))
        else:
            m = runs[i]
            k = m - 1 if regime_ones[i] else -m
            out.append(DecodedPosit.normal(signs[i], k, exps[i], hidden | (fracs[i] >> 2), fmt))
    return tuple(out)


def multiply_fractions(da: Sequence[DecodedPosit], db: Sequence[DecodedPosit], mode) -> list[int]:
    """Stage 2: per-lane unsigned fraction products."""
    mode = as_mode(mode)
    return simd_multiply(pack_lanes([d.frac for d in da], mode),
                         pack_lanes([d.frac for d in db], mode), mode)


def accumulate(q: Quire, a: DecodedPosit, b: DecodedPosit, product: int, enable: bool,
               check: bool = False) -> Quire:
    """Stage 3 for one lane."""
    if not enable:
        return q
    if a.cls is PositClass.NAR or b.cls is PositClass.NAR:
        return Quire(q.acc, q.fmt, True)
    if a.cls is PositClass.ZERO or b.cls is PositClass.ZERO:
        return q
    return add_aligned(q, a.sign != b.sign, product, a.sf + b.sf, check=check)


def reconstruct(q: Quire) -> Normalized:
    """Stage 4: locate the leading one of |quire| and slice fraction bits."""
    if q.nar:
        return Normalized(PositClass.NAR)
    if q.acc == 0:
        return Normalized(PositClass.ZERO)
    negative = q.acc < 0
    mag = -q.acc if negative else q.acc
    width = quire_width(q.fmt)
    lod = wide_lod(mag, width)
    return extract(negative, mag, width - 1 - lod.position, q.fmt)


def round_and_pack(norm: Normalized, mode) -> int:
    """Stage 5."""
    return pack_normalized(norm, as_mode(mode).fmt)


# -- traces ---------------------------------------------------------------------

@dataclass(frozen=True)
class MacTrace:
    index: int
    mode: Mode
    a: int
    b: int
    enables: tuple[bool, ...]
    stage1: tuple[tuple[DecodedPosit, DecodedPosit], ...]
    stage2: tuple[int, ...]
    quire_in: tuple[Quire, ...]
    stage3: tuple[Quire, ...]
    stage4: tuple[Normalized, ...]
    stage5: tuple[int, ...]

    def records(self) -> list[tuple[str, str]]:
        """Ordered ``(key, hex)`` fields of this issue."""
        mode = self.mode
        fmt = mode.fmt
        fd = fmt.frac_width // 4 + 1
        out = [("mode", f"{mode.value:x}"), ("a", f"{self.a:08x}"), ("b", f"{self.b:08x}"),
               ("en", f"{sum(1 << i for i, e in enumerate(self.enables) if e):x}")]
        for lane, (da, db) in enumerate(self.stage1):
            for tag, d in (("a", da), ("b", db)):
                key = f"stage1.lane{lane}.{tag}"
                out += [(f"{key}.cls", f"{int(d.cls):x}"), (f"{key}.sign", f"{int(d.sign):x}"),
                        (f"{key}.sf", f"{d.sf & 0xFFFF:04x}"), (f"{key}.frac", f"{d.frac:0{fd}x}")]
        for lane, p in enumerate(self.stage2):
            out.append((f"stage2.lane{lane}", f"{p:0{mode.lane_width // 2}x}"))
        for lane, q in enumerate(self.stage3):
            out.append((f"stage3.lane{lane}", q.hex()))
            out.append((f"stage3.lane{lane}.nar", f"{int(q.nar):x}"))
        for lane, nrm in enumerate(self.stage4):
            key = f"stage4.lane{lane}"
            out += [(f"{key}.cls", f"{int(nrm.cls):x}"), (f"{key}.sign", f"{int(nrm.sign):x}"),
                    (f"{key}.sf", f"{nrm.sf & 0xFFFF:04x}"),
                    (f"{key}.frac", f"{nrm.frac_ext >> 2:0{fd}x}"),
                    (f"{key}.grs", f"{nrm.guard}{nrm.round}{int(nrm.sticky)}")]
        for lane, bits in enumerate(self.stage5):
            out.append((f"stage5.lane{lane}", f"{bits:0{fmt.hex_digits}x}"))
        return out

    def to_text(self) -> str:
        lines = [f"issue={self.index}"]
        lines += [f"{k}={v}" for k, v in self.records()]
        return "\n".join(lines) + "\n"


def format_traces(traces: Sequence[MacTrace]) -> str:
    """Trace log: one block of ``key=hex`` lines per issue, blank-line separated."""
    return "\n".join(t.to_text() for t in traces)


def parse_traces(text: str) -> list[dict[str, str]]:
    records = []
    for block in text.split("\n\n"):
        block = block.strip()
        if not block:
            continue
        rec = {}
        for line in block.splitlines():
            key, _, value = line.partition("=")
            rec[key] = value
        records.append(rec)
    return records


# -- engine ---------------------------------------------------------------------

class SpadeEngine:
    """Mutable engine state: mode, one quire per lane, issue counter.

    Use one engine per issuing thread; engines share nothing.
    ``check=True`` raises :class:`~spade.quire.QuireOverflowError` on wrap.
    """

    def __init__(self, mode, *, check: bool = False):
        self.mode = as_mode(mode)
        self.check = check
        self.issue_count = 0
        self.quires = [quire_zero(self.mode.fmt) for _ in range(self.mode.lanes)]

    @property
    def fmt(self):
        return self.mode.fmt

    @property
    def lanes(self) -> int:
        return self.mode.lanes

    def set_mode(self, mode):
        """Switch precision; clears every quire, keeps the issue counter."""
        self.mode = as_mode(mode)
        self.quires = [quire_zero(self.mode.fmt) for _ in range(self.mode.lanes)]

    def clear(self):
        self.set_mode(self.mode)

    def backing_register(self) -> int:
        """The lane quires laid out in the shared 512-bit register."""
        slot = BACKING_BITS // self.lanes
        reg = 0
        for i, q in enumerate(self.quires):
            reg |= (q.acc & ((1 << slot) - 1)) << (slot * i)
        return reg

    def issue(self, a: int, b: int, enables: Optional[Sequence[bool]] = None, *,
              trace: bool = False) -> Optional[MacTrace]:
        mode = self.mode
        lanes = mode.lanes
        if enables is None:
            enables = (True,) * lanes
        elif len(enables) != lanes:
            raise ValueError(f"{mode.name} mode takes {lanes} enables, got {len(enables)}")
        da = _unpack_cached(a & 0xFFFFFFFF, mode)
        db = _unpack_cached(b & 0xFFFFFFFF, mode)
        products = multiply_fractions(da, db, mode)
        before = self.quires
        after = [accumulate(q, x, y, p, en, self.check)
                 for q, x, y, p, en in zip(before, da, db, products, enables)]
        self.quires = after
        index = self.issue_count
        self.issue_count += 1
        if not trace:
            return None
        norms = tuple(reconstruct(q) for q in after)
        return MacTrace(index, mode, a, b, tuple(bool(e) for e in enables), tuple(zip(da, db)),
                        tuple(products), tuple(before), tuple(after), norms,
                        tuple(round_and_pack(nm, mode) for nm in norms))

    def readout_lanes(self) -> list[int]:
        return [round_and_pack(reconstruct(q), self.mode) for q in self.quires]

    def readout(self) -> int:
        return pack_lanes(self.readout_lanes(), self.mode)

    def readout_words(self) -> list[PositWord]:
        return [PositWord(bits, self.fmt) for bits in self.readout_lanes()]


def engine_new(mode) -> SpadeEngine:
    return SpadeEngine(mode)


def ones_word(mode) -> int:
    mode = as_mode(mode)
    return pack_lanes([one(mode.fmt).bits] * mode.lanes, mode)


def mac_once(mode, a: int, b: int, c_init: int) -> int:
    """Per-lane ``round(a*b + c)`` with a single rounding.

    The addend enters the quire as the exact product ``c * 1.0``.
    """
    eng = SpadeEngine(mode)
    eng.issue(c_init, ones_word(eng.mode))
    eng.issue(a, b)
    return eng.readout()
