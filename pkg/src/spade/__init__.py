"""Bit-exact model of a multi-precision SIMD posit MAC engine."""

from .posit import (FORMATS, P8, P16, P32, DecodedPosit, PositClass, PositFormat, PositWord,
                    decode, encode, format_by_name, round_pack, to_real)
from .quire import Quire, quire_add_product, quire_to_posit, quire_zero
from .reference import ref_mac, round_real
from .simd import Mode
from .engine import MacTrace, SpadeEngine, engine_new, mac_once

__version__ = "0.1.0"
