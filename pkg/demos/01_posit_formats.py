"""
Posit formats: fields, values and rounding
==========================================

Decode a few patterns in each of the three formats, look at the value
table of P(8,0), and watch round-to-nearest-even pick the even pattern.
"""

from fractions import Fraction

import numpy as np

from spade import P8, P16, P32, PositWord, decode, round_pack, to_real
from spade.posit import dyadic_str, maxpos, minpos

# Each format has a fixed dynamic range: maxpos = 2^sf_max, minpos = 2^-sf_max
for fmt in (P8, P16, P32):
    print(f"{fmt.name}: sf_max={fmt.sf_max}  minpos={dyadic_str(to_real(minpos(fmt)))}  "
          f"maxpos=2^{fmt.sf_max}")

# Field decomposition of 0x6C in P(8,0): regime 10 -> k=1, fraction 1.1100
d = decode(PositWord(0x6C, P8))
print("\n0x6c:", d, "=", dyadic_str(to_real(PositWord(0x6C, P8))))

# The same value in the wider formats
for fmt in (P16, P32):
    word = PositWord.from_hex({P16: "5c00", P32: "4e000000"}[fmt], fmt)
    print(f"{fmt.name} {word.hex()} -> {dyadic_str(to_real(word))}")

# Values grow monotonically with the pattern read as a signed integer
vals = np.array([float(to_real(PositWord(b & 0xFF, P8))) for b in range(-127, 128)])
print("\nP8 values strictly increasing:", bool(np.all(np.diff(vals) > 0)))
print("positive P8 values near 1:", vals[127:127 + 8])

# Rounding: 6.25 = 1.1001b x 2^2 sits halfway between 6.0 (0x74) and 6.5 (0x75)
print("\nround(6.25)           ->", round_pack(False, 2, 0b11001, False, P8))
print("round(6.25 + epsilon) ->", round_pack(False, 2, 0b11001, True, P8))
print("round(2^200)          ->", round_pack(False, 200, 1, False, P8), "(saturates at maxpos)")
print("round(2^-7)           ->", round_pack(False, -7, 1, False, P8), "(tie between 0 and minpos)")
print("exact 6.25?", Fraction(25, 4) == 6.25)
