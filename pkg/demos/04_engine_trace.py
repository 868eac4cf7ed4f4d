"""
The MAC engine and its stage trace
==================================

Issue a few packed operand words, read the lanes out, and dump the
per-stage trace that an HDL testbench would compare against.
"""

from spade import Mode, SpadeEngine, mac_once
from spade.engine import format_traces
from spade.simd import pack_lanes, unpack_lanes

eng = SpadeEngine(Mode.P8)
# lane 0: 2*3, lane 1: 2.5*2.5 (a tie), lane 2: NaR, lane 3: disabled
a = pack_lanes([0x60, 0x64, 0x80, 0x7F], Mode.P8)
b = pack_lanes([0x68, 0x64, 0x40, 0x7F], Mode.P8)
trace = eng.issue(a, b, [True, True, True, False], trace=True)
print("readout lanes:", [hex(v) for v in unpack_lanes(eng.readout(), Mode.P8)])
print("quire of lane 0:", eng.quires[0].hex(), "= 6 * 2^12")

print("\n" + "\n".join(trace.to_text().splitlines()[:12]), "\n...")

# A second issue accumulates onto the same quires
eng.issue(a, b)
print("after two issues:", [hex(v) for v in unpack_lanes(eng.readout(), Mode.P8)])

# mac_once: round(a*b + c) with a single rounding, per lane
print("\nP16 mac_once(1*1 + 1, 1.5*2 + 0):",
      hex(mac_once(Mode.P16, pack_lanes([0x4000, 0x4800], Mode.P16), pack_lanes([0x4000, 0x5000], Mode.P16),
                   pack_lanes([0x4000, 0x0000], Mode.P16))))

# The trace log is deterministic text
print("\nbytes in a two-issue P32 log:", len(format_traces(
    [SpadeEngine(Mode.P32).issue(0x40000000, 0x40000000, trace=True)] * 2)))
