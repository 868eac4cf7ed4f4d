"""Differential conformance campaigns: SIMD engine versus the scalar oracle.

A vector is one engine run from cleared quires: a sequence of issues (packed
``a`` and ``b`` words plus a lane-enable mask each) followed by one readout.
The expected readout comes from :func:`spade.reference.ref_mac` applied per
lane to that lane's enabled pairs.

Vector file format, one vector per line, ``#`` starts a comment::

    mode a_hex b_hex enables_hex expected_hex

``mode`` is p8, p16 or p32; ``a_hex``, ``b_hex`` and ``enables_hex`` hold one
entry per issue, comma separated (8 hex digits for words, one digit for the
lane mask); ``expected_hex`` is the 8-digit readout word.

Random campaigns use Python's ``random.Random`` (MT19937) seeded with a single
64-bit integer, so a seed reproduces the same vectors on every platform.
"""

from __future__ import annotations

import os
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .engine import SpadeEngine
from .posit import PositFormat, PositWord, one, signed_value
from .reference import pattern_value, ref_mac, round_real
from .simd import Mode, as_mode, pack_lanes, unpack_lanes

SINGLE_ISSUE_SHARE = 0.8
MAX_ISSUES = 64


@dataclass(frozen=True)
class Vector:
    mode: Mode
    a: tuple[int, ...]
    b: tuple[int, ...]
    enables: tuple[int, ...]
    expected: Optional[int] = None

    def __post_init__(self):
        if not (len(self.a) == len(self.b) == len(self.enables)):
            raise ValueError("a, b and enables need one entry per issue")

    def lane_pairs(self, lane: int) -> list[tuple[PositWord, PositWord]]:
        fmt = self.mode.fmt
        pairs = []
        for a, b, en in zip(self.a, self.b, self.enables):
            if (en >> lane) & 1:
                pairs.append((PositWord(unpack_lanes(a, self.mode)[lane], fmt),
                              PositWord(unpack_lanes(b, self.mode)[lane], fmt)))
        return pairs

    def with_expected(self) -> Vector:
        return Vector(self.mode, self.a, self.b, self.enables, oracle_readout(self))

    def to_line(self) -> str:
        exp = "-" if self.expected is None else f"{self.expected:08x}"
        return " ".join([self.mode.name.lower(), ",".join(f"{w:08x}" for w in self.a),
                         ",".join(f"{w:08x}" for w in self.b),
                         ",".join(f"{e:x}" for e in self.enables), exp])


class VectorFileError(ValueError):
    pass


def parse_vector_line(line: str) -> Optional[Vector]:
    line = line.split("#", 1)[0].strip()
    if not line:
        return None
    parts = line.split()
    if len(parts) != 5:
        raise VectorFileError(f"expected 5 fields, got {len(parts)}")
    mode = Mode.from_name(parts[0])
    try:
        a = tuple(int(w, 16) for w in parts[1].split(","))
        b = tuple(int(w, 16) for w in parts[2].split(","))
        en = tuple(int(e, 16) for e in parts[3].split(","))
        expected = None if parts[4] == "-" else int(parts[4], 16)
    except ValueError as exc:
        raise VectorFileError(f"bad hex field: {exc}") from None
    if any(w >> 32 for w in a + b) or (expected is not None and expected >> 32):
        raise VectorFileError("words are 32 bits")
    if any(e >> mode.lanes for e in en):
        raise VectorFileError(f"enable mask wider than {mode.lanes} lanes")
    return Vector(mode, a, b, en, expected)


def read_vectors(path: str | os.PathLike) -> list[Vector]:
    vectors = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            try:
                v = parse_vector_line(line)
            except ValueError as exc:
                raise VectorFileError(f"{path}:{lineno}: {exc}") from None
            if v is not None:
                vectors.append(v)
    return vectors


def write_vectors(path: str | os.PathLike, vectors: Iterable[Vector], header: str = ""):
    lines = [f"# {h}" for h in header.splitlines()] if header else []
    lines += [v.to_line() for v in vectors]
    Path(path).write_text("\n".join(lines) + "\n")


# -- execution ------------------------------------------------------------------

def oracle_readout(v: Vector) -> int:
    fmt = v.mode.fmt
    lanes = [ref_mac(v.lane_pairs(i), fmt).bits for i in range(v.mode.lanes)]
    return pack_lanes(lanes, v.mode)


def engine_readout(v: Vector) -> int:
    eng = SpadeEngine(v.mode)
    lanes = v.mode.lanes
    for a, b, en in zip(v.a, v.b, v.enables):
        eng.issue(a, b, [bool((en >> i) & 1) for i in range(lanes)])
    return eng.readout()


@dataclass
class Failure:
    index: int
    vector: Vector
    actual: int


@dataclass
class CampaignReport:
    mode: Mode
    vectors: int = 0
    cases: int = 0
    passed_cases: int = 0
    failures: list[Failure] = field(default_factory=list)
    bins: Counter = field(default_factory=Counter)

    @property
    def ok(self) -> bool:
        return not self.failures and self.passed_cases == self.cases

    def summary(self) -> str:
        lines = [f"{self.mode.name}: {self.passed_cases}/{self.cases} lane cases pass "
                 f"({self.vectors} vectors, {len(self.failures)} failing)"]
        if self.bins:
            lines.append("coverage:")
            for name in sorted(self.bins, key=_bin_order):
                lines.append(f"  {name:<14} {self.bins[name]}")
        return "\n".join(lines)


def _bin_order(name: str):
    head, _, tail = name.partition(":")
    return (head, int(tail) if tail.isdigit() else 0, tail)


def run_campaign(vectors: Sequence[Vector], mode=None) -> CampaignReport:
    """Check every vector; vectors without an expected word use the oracle."""
    mode = as_mode(mode) if mode is not None else (vectors[0].mode if vectors else Mode.P8)
    report = CampaignReport(mode)
    for index, v in enumerate(vectors):
        expected = v.expected if v.expected is not None else oracle_readout(v)
        actual = engine_readout(v)
        lanes = v.mode.lanes
        got = unpack_lanes(actual, v.mode)
        want = unpack_lanes(expected, v.mode)
        report.vectors += 1
        report.cases += lanes
        report.passed_cases += sum(g == w for g, w in zip(got, want))
        if actual != expected:
            report.failures.append(Failure(index, Vector(v.mode, v.a, v.b, v.enables, expected), actual))
        _count_bins(report.bins, v)
    return report


def _regime_run(bits: int, fmt: PositFormat) -> int:
    if bits >> (fmt.n - 1):
        bits = -bits & fmt.mask
    body = format(bits, f"0{fmt.n}b")[1:]
    return len(body) - len(body.lstrip(body[0]))


def _count_bins(bins: Counter, v: Vector):
    fmt = v.mode.fmt
    if len(v.a) > 1:
        bins["multi-issue"] += 1
    for lane in range(v.mode.lanes):
        for a, b in v.lane_pairs(lane):
            for w in (a, b):
                if w.is_zero:
                    bins["zero"] += 1
                elif w.is_nar:
                    bins["nar"] += 1
                else:
                    bins[f"regime:{_regime_run(w.bits, fmt)}"] += 1
            if not (a.is_zero or a.is_nar or b.is_zero or b.is_nar):
                sa = "-" if signed_value(a.bits, fmt) < 0 else "+"
                sb = "-" if signed_value(b.bits, fmt) < 0 else "+"
                bins[f"sign:{sa}{sb}"] += 1


# -- generation -----------------------------------------------------------------

def make_operand(rng: random.Random, fmt: PositFormat, run: int, ones: bool, negative: bool) -> int:
    """A pattern whose regime is a run of ``run`` ones (or zeros)."""
    n = fmt.n
    body_bits = n - 1
    if ones:
        run = min(run, body_bits)
        body = ((1 << run) - 1) << (body_bits - run)
    else:
        run = min(run, body_bits - 1)
        body = 0
    tail = body_bits - run
    if tail > 0:
        # terminator is the opposite bit; the remainder is random
        term = 0 if ones else 1
        body |= term << (tail - 1)
        if tail > 1:
            body |= rng.getrandbits(tail - 1)
    return (-body & fmt.mask) if negative else body


def random_operand(rng: random.Random, fmt: PositFormat) -> int:
    r = rng.random()
    if r < 0.04:
        return 0
    if r < 0.06:
        return fmt.nar_bits
    if r < 0.36:
        return rng.getrandbits(fmt.n)
    ones = rng.random() < 0.5
    max_run = fmt.n - 1 if ones else fmt.n - 2
    return make_operand(rng, fmt, rng.randint(1, max_run), ones, rng.random() < 0.5)


def _as_product(d: Fraction, fmt: PositFormat, rng: random.Random) -> Optional[tuple[int, int]]:
    """Two posits whose product is exactly ``d`` (d > 0), if a power-of-two split exists."""
    exps = list(range(fmt.sf_min, fmt.sf_max + 1))
    rng.shuffle(exps)
    for s in exps[:24]:
        a = Fraction(2) ** s
        b = d / a
        wa, wb = round_real(a, fmt), round_real(b, fmt)
        if _value(wa) == a and _value(wb) == b:
            return wa.bits, wb.bits
    return None


def _value(w: PositWord) -> Fraction:
    return pattern_value(w.bits, w.fmt.n, w.fmt.es)


def tie_sequence(rng: random.Random, fmt: PositFormat, nudge: int = 0) -> Optional[list[tuple[int, int]]]:
    """Pairs summing exactly to a rounding boundary (``nudge`` = -1/0/+1 quire LSB).

    The boundary between patterns p and p+1 is the value of the one-bit-longer
    posit 2p+1.
    """
    p = rng.randint(1, fmt.maxpos_bits - 1)
    boundary = pattern_value(2 * p + 1, fmt.n + 1, fmt.es)
    d = boundary - pattern_value(p, fmt.n, fmt.es)
    split = _as_product(d, fmt, rng)
    if split is None:
        return None
    unit = one(fmt).bits
    seq = [(p, unit), split]
    if nudge:
        tiny = 1  # minpos * (+-minpos) is one quire LSB
        seq.append((tiny, tiny if nudge > 0 else fmt.mask))
    if rng.random() < 0.5:
        # mirror the whole sum to exercise negative ties
        seq = [((-a) & fmt.mask, b) for a, b in seq]
    rng.shuffle(seq)
    return seq


def _lane_sequence(rng: random.Random, fmt: PositFormat, length: int) -> list[tuple[int, int]]:
    if rng.random() < 0.05:
        seq = tie_sequence(rng, fmt, rng.choice((-1, 0, 0, 1)))
        if seq is not None and len(seq) <= length + 2:
            return seq
    return [(random_operand(rng, fmt), random_operand(rng, fmt)) for _ in range(length)]


def generate(mode, count: int, seed: int) -> list[Vector]:
    """``count`` stratified random vectors (oracle expectations not yet filled)."""
    mode = as_mode(mode)
    fmt = mode.fmt
    rng = random.Random(seed)
    vectors = []
    for _ in range(count):
        if rng.random() < SINGLE_ISSUE_SHARE:
            length = 1
        else:
            length = rng.randint(2, MAX_ISSUES)
        seqs = [_lane_sequence(rng, fmt, length) for _ in range(mode.lanes)]
        issues = max(len(s) for s in seqs)
        a_words, b_words, enables = [], [], []
        for t in range(issues):
            a_l, b_l, en = [], [], 0
            for lane, s in enumerate(seqs):
                if t < len(s):
                    a_l.append(s[t][0])
                    b_l.append(s[t][1])
                    en |= 1 << lane
                else:
                    # lanes with shorter sequences idle with junk operands, gated off
                    a_l.append(rng.getrandbits(fmt.n))
                    b_l.append(rng.getrandbits(fmt.n))
            if length > 1 and rng.random() < 0.05:
                en &= rng.getrandbits(mode.lanes)
            a_words.append(pack_lanes(a_l, mode))
            b_words.append(pack_lanes(b_l, mode))
            enables.append(en)
        vectors.append(Vector(mode, tuple(a_words), tuple(b_words), tuple(enables)))
    return vectors


def exhaustive_p8() -> list[Vector]:
    """All 256 x 256 single-pair P8 products, four per vector."""
    mode = Mode.P8
    pairs = [(a, b) for a in range(256) for b in range(256)]
    vectors = []
    for i in range(0, len(pairs), 4):
        chunk = pairs[i:i + 4]
        vectors.append(Vector(mode, (pack_lanes([p[0] for p in chunk], mode),),
                              (pack_lanes([p[1] for p in chunk], mode),), (0xF,)))
    return vectors
