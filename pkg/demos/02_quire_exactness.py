"""
The quire: exact accumulation, one rounding at the end
======================================================

Sum many small products in P(16,1) two ways: with a rounding after every
step, and in the quire. Only the quire gets the correctly rounded answer.
"""

import random
from fractions import Fraction

from spade import P16, PositWord, decode, quire_add_product, quire_to_posit, quire_zero, ref_mac, round_real
from spade.posit import to_real
from spade.quire import quire_value, quire_width

fmt = P16
print(f"{fmt.name} quire: {quire_width(fmt)} bits, LSB weight 2^-{2 * fmt.sf_max}")

rng = random.Random(1)
big = round_real(Fraction(4096), fmt)
pairs = [(big, round_real(Fraction(1), fmt))]
for _ in range(1000):
    x = round_real(Fraction(rng.randint(1, 999), 1000), fmt)
    pairs.append((x, x))
pairs.append((big, round_real(Fraction(-1), fmt)))  # cancel the large term at the end

# step-by-step rounding (what a plain posit FMA chain would do)
acc = round_real(Fraction(0), fmt)
for a, b in pairs:
    acc = round_real(to_real(acc) + to_real(a) * to_real(b), fmt)

# quire: exact sum, rounded once
q = quire_zero(fmt)
for a, b in pairs:
    q = quire_add_product(q, decode(a), decode(b))

exact = sum(to_real(a) * to_real(b) for a, b in pairs)
print("exact sum         :", float(exact))
print("quire value exact :", quire_value(q) == exact)
print("quire readout     :", quire_to_posit(q), float(to_real(quire_to_posit(q))))
print("oracle (ref_mac)  :", ref_mac(pairs, fmt))
print("rounded each step :", acc, float(to_real(acc)))
