"""
Lane-partitioned building blocks
================================

One 32-bit datapath, three configurations. The same word means four
bytes, two halfwords or one word depending on the mode, and nothing
crosses a lane edge.
"""

from spade.simd import (LEFT, RIGHT_ARITH, Mode, pack_lanes, simd_complement, simd_lod, simd_multiply,
                        simd_shift, sub_products, unpack_lanes)

x = 0x01020304
for mode in Mode:
    print(f"{mode.name}: lanes {[hex(v) for v in unpack_lanes(x, mode)]}")

# Complement: the carry chain is cut at lane boundaries
print("\nnegate all lanes, P8 :", hex(simd_complement(x, [True] * 4, Mode.P8)))
print("negate all lanes, P32:", hex(simd_complement(x, [True], Mode.P32)))

# Leading-one detection per lane (position counted from the lane MSB)
print("\nLOD P8 :", simd_lod(0x80104001, Mode.P8))
print("LOD P16:", simd_lod(0x00010080, Mode.P16))

# Shifter: log2(width) stages; arithmetic right shifts copy each lane's own sign
print("\nP8 >> 2 (arith)  :", hex(simd_shift(0x80808080, [2, 2, 2, 2], RIGHT_ARITH, Mode.P8)))
print("P16 << 1         :", hex(simd_shift(0x80000001, [1, 1], LEFT, Mode.P16)))

# Multiplier: 4 / 8 / 16 active 8x8 multipliers aggregated per lane
for mode in Mode:
    print(f"{mode.name}: {len(sub_products(0, 0, mode)):2d} sub-products,",
          [hex(p) for p in simd_multiply(0xFFFFFFFF, 0xFFFFFFFF, mode)])
print("pack/unpack round trip:", pack_lanes(unpack_lanes(x, Mode.P16), Mode.P16) == x)
