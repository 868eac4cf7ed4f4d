"""Self-describing weights container.

Byte layout (all integers little-endian)::

    0   4 bytes  magic b"SPDW"
    4   uint16   version (1)
    6   uint16   reserved, zero
    8   uint32   header length H in bytes
    12  H bytes  UTF-8 JSON header
    12+H         float32 payloads, row-major, in header order

The header is ``{"layers": [...], "meta": {...}}``. Each layer entry holds
``kind``, ``precision`` (``"p8"``, ``"p16"``, ``"p32"`` or null),
``stride``, ``padding`` and ``tensors``: a list of ``{"name", "shape"}``
whose payloads follow one after another.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from ..posit import format_by_name
from .model import LayerSpec

MAGIC = b"SPDW"
VERSION = 1


class ContainerError(ValueError):
    pass


def dumps(layers: list[LayerSpec], meta: dict | None = None) -> bytes:
    entries = []
    payload = []
    for layer in layers:
        tensors = []
        for name in ("weight", "bias"):
            arr = getattr(layer, name)
            if arr is not None:
                arr = np.ascontiguousarray(arr, dtype="<f4")
                tensors.append({"name": name, "shape": list(arr.shape)})
                payload.append(arr.tobytes())
        entries.append({
            "kind": layer.kind,
            "precision": layer.precision.name if layer.precision is not None else None,
            "stride": layer.stride,
            "padding": layer.padding,
            "tensors": tensors,
        })
    header = json.dumps({"layers": entries, "meta": meta or {}}, sort_keys=True).encode()
    return MAGIC + struct.pack("<HHI", VERSION, 0, len(header)) + header + b"".join(payload)


def loads(data: bytes) -> tuple[list[LayerSpec], dict]:
    if data[:4] != MAGIC:
        raise ContainerError("not a weights container (bad magic)")
    version, _, hlen = struct.unpack_from("<HHI", data, 4)
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    try:
        header = json.loads(data[12:12 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"corrupt header: {exc}") from None
    offset = 12 + hlen
    layers = []
    for entry in header["layers"]:
        arrays = {}
        for t in entry["tensors"]:
            count = int(np.prod(t["shape"], dtype=np.int64))
            end = offset + 4 * count
            if end > len(data):
                raise ContainerError(f"payload for {entry['kind']}.{t['name']} is truncated")
            arrays[t["name"]] = np.frombuffer(data, dtype="<f4", count=count, offset=offset) \
                .reshape(t["shape"]).astype(np.float32)
            offset = end
        prec = entry.get("precision")
        layers.append(LayerSpec(entry["kind"], arrays.get("weight"), arrays.get("bias"),
                                stride=entry.get("stride", 1), padding=entry.get("padding", 0),
                                precision=format_by_name(prec) if prec else None))
    if offset != len(data):
        raise ContainerError(f"{len(data) - offset} trailing bytes after payloads")
    return layers, header.get("meta", {})


def save(path: str | os.PathLike, layers: list[LayerSpec], meta: dict | None = None):
    Path(path).write_bytes(dumps(layers, meta))


def load(path: str | os.PathLike) -> tuple[list[LayerSpec], dict]:
    return loads(Path(path).read_bytes())
