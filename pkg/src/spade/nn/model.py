"""Quantized CNN inference with every dot product retired on the MAC engine.

Tensors are numpy arrays: float64 for the reference float path, or a
:class:`PositTensor` holding raw posit patterns in uint32 for the quantized
path. Feature maps are (C, H, W); dense weights are (out, in) and conv weights
(out, in, kh, kw).

A dense or conv output is one quire accumulation: the bias enters as
``bias * 1.0``, then one issue per input tap, then a single rounding at
readout. Outputs are batched across lanes, so P8 layers retire four output
channels per issue and P16 layers two. Taps whose activation is zero are not
issued, since a zero product leaves the quire untouched.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from ..engine import SpadeEngine, ones_word
from ..posit import PositFormat, PositWord, one, signed_value, to_real
from ..reference import ref_mac, round_float, round_real
from ..simd import Mode, mode_for_format

KINDS = ("dense", "conv2d", "relu", "maxpool2x2", "flatten")
COMPUTE_KINDS = ("dense", "conv2d")

_REPLICATE = {Mode.P8: 0x01010101, Mode.P16: 0x00010001, Mode.P32: 1}


@dataclass
class LayerSpec:
    kind: str
    weight: Optional[np.ndarray] = None
    bias: Optional[np.ndarray] = None
    stride: int = 1
    padding: int = 0
    precision: Optional[PositFormat] = None
    _prepared: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind in COMPUTE_KINDS:
            if self.weight is None:
                raise ValueError(f"{self.kind} layer needs weights")
            want = 2 if self.kind == "dense" else 4
            if self.weight.ndim != want:
                raise ValueError(f"{self.kind} weights must be {want}-D, got {self.weight.shape}")
            if self.bias is None:
                self.bias = np.zeros(self.weight.shape[0], dtype=np.float32)
            if self.bias.shape != (self.weight.shape[0],):
                raise ValueError(f"bias shape {self.bias.shape} does not match {self.weight.shape}")

    @property
    def is_compute(self) -> bool:
        return self.kind in COMPUTE_KINDS


@dataclass(frozen=True)
class PositTensor:
    bits: np.ndarray
    fmt: PositFormat

    @property
    def shape(self) -> tuple[int, ...]:
        return self.bits.shape

    def values(self) -> np.ndarray:
        """Float64 view of the values (NaR becomes nan)."""
        uniq, inv = np.unique(self.bits, return_inverse=True)
        vals = np.array([_real_or_nan(int(b), self.fmt) for b in uniq], dtype=np.float64)
        return vals[inv].reshape(self.bits.shape)

    def reshape(self, *shape) -> PositTensor:
        return PositTensor(self.bits.reshape(*shape), self.fmt)

    def words(self) -> list[PositWord]:
        return [PositWord(int(b), self.fmt) for b in self.bits.ravel()]


def _real_or_nan(bits: int, fmt: PositFormat) -> float:
    if bits == fmt.nar_bits:
        return float("nan")
    return float(to_real(PositWord(bits, fmt)))


@lru_cache(maxsize=1 << 18)
def _quantize_scalar(x: float, fmt: PositFormat) -> int:
    return round_float(x, fmt).bits


@lru_cache(maxsize=1 << 18)
def _convert_scalar(bits: int, src: PositFormat, dst: PositFormat) -> int:
    if bits == src.nar_bits:
        return dst.nar_bits
    return round_real(to_real(PositWord(bits, src)), dst).bits


def _map_unique(arr: np.ndarray, fn) -> np.ndarray:
    uniq, inv = np.unique(arr, return_inverse=True)
    mapped = np.array([fn(u.item()) for u in uniq], dtype=np.uint32)
    return mapped[inv].reshape(arr.shape)


def quantize(t: np.ndarray, fmt: PositFormat) -> PositTensor:
    """Round each real to the nearest posit (ties to even); non-finite -> NaR."""
    arr = np.asarray(t, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        warnings.warn("non-finite values quantized to NaR", RuntimeWarning, stacklevel=2)
    if arr.size == 0:
        return PositTensor(np.zeros(arr.shape, dtype=np.uint32), fmt)
    return PositTensor(_map_unique(arr, lambda x: _quantize_scalar(x, fmt)), fmt)


def convert(t: PositTensor, fmt: PositFormat) -> PositTensor:
    """Re-round a posit tensor into another format."""
    if t.fmt == fmt:
        return t
    if t.bits.size == 0:
        return PositTensor(t.bits.copy(), fmt)
    return PositTensor(_map_unique(t.bits, lambda b: _convert_scalar(b, t.fmt, fmt)), fmt)


# -- layer routing ----------------------------------------------------------------

def _im2col(x: np.ndarray, kh: int, kw: int, stride: int, padding: int) -> np.ndarray:
    """(C, H, W) -> (Ho*Wo, C*kh*kw), zero padded; works for bits and floats."""
    c, h, w = x.shape
    if padding:
        x = np.pad(x, ((0, 0), (padding, padding), (padding, padding)))
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    if ho <= 0 or wo <= 0:
        raise ValueError(f"kernel {kh}x{kw} does not fit input {h}x{w}")
    cols = np.empty((ho * wo, c * kh * kw), dtype=x.dtype)
    for i in range(ho):
        for j in range(wo):
            patch = x[:, i * stride:i * stride + kh, j * stride:j * stride + kw]
            cols[i * wo + j] = patch.reshape(-1)
    return cols


def _check_input(layer: LayerSpec, shape: tuple[int, ...]):
    if layer.kind == "dense":
        if len(shape) != 1 or shape[0] != layer.weight.shape[1]:
            raise ValueError(f"dense layer expects ({layer.weight.shape[1]},) input, got {shape}")
    elif layer.kind == "conv2d":
        if len(shape) != 3 or shape[0] != layer.weight.shape[1]:
            raise ValueError(f"conv2d layer expects {layer.weight.shape[1]} input channels, got {shape}")
    elif layer.kind == "maxpool2x2":
        if len(shape) != 3:
            raise ValueError(f"maxpool2x2 expects (C, H, W), got {shape}")


def _prepared(layer: LayerSpec, fmt: PositFormat):
    """Quantized weights packed into per-group lane words, cached on the layer."""
    if fmt not in layer._prepared:
        mode = mode_for_format(fmt)
        lanes, width = mode.lanes, mode.lane_width
        w = quantize(layer.weight.reshape(layer.weight.shape[0], -1), fmt).bits
        b = quantize(layer.bias, fmt).bits
        outs, taps = w.shape
        groups = []
        for g0 in range(0, outs, lanes):
            rows = list(range(g0, min(g0 + lanes, outs)))
            words = [0] * taps
            bias_word = 0
            for lane, r in enumerate(rows):
                shift = width * lane
                bias_word |= int(b[r]) << shift
                for t in range(taps):
                    words[t] |= int(w[r, t]) << shift
            groups.append((rows, bias_word, words))
        layer._prepared[fmt] = (w, b, groups)
    return layer._prepared[fmt]


def _engine_outputs(layer: LayerSpec, cols: np.ndarray, fmt: PositFormat) -> np.ndarray:
    """Run every (site, output) accumulation; cols is (sites, taps) of bits."""
    mode = mode_for_format(fmt)
    w, _, groups = _prepared(layer, fmt)
    rep = _REPLICATE[mode]
    ones = ones_word(mode)
    out = np.zeros((cols.shape[0], w.shape[0]), dtype=np.uint32)
    engine = SpadeEngine(mode)
    for site, acts in enumerate(cols.tolist()):
        live = [(t, x * rep) for t, x in enumerate(acts) if x]
        for rows, bias_word, words in groups:
            engine.clear()
            engine.issue(bias_word, ones)
            for t, xw in live:
                engine.issue(words[t], xw)
            res = engine.readout_lanes()
            for lane, r in enumerate(rows):
                out[site, r] = res[lane]
    return out


def _reference_outputs(layer: LayerSpec, cols: np.ndarray, fmt: PositFormat) -> np.ndarray:
    w, b, _ = _prepared(layer, fmt)
    unit = one(fmt)
    out = np.zeros((cols.shape[0], w.shape[0]), dtype=np.uint32)
    for site in range(cols.shape[0]):
        xs = [PositWord(int(v), fmt) for v in cols[site]]
        for r in range(w.shape[0]):
            pairs = [(PositWord(int(b[r]), fmt), unit)]
            pairs += [(PositWord(int(wv), fmt), x) for wv, x in zip(w[r], xs)]
            out[site, r] = ref_mac(pairs, fmt).bits
    return out


def run_layer(layer: LayerSpec, x: PositTensor, *, route: str = "engine") -> PositTensor:
    """Apply one layer to a posit tensor.

    Compute layers run in ``layer.precision`` when set, else in ``x.fmt``;
    the input is re-rounded first if the formats differ. ``route`` selects
    the SIMD engine (``"engine"``) or the scalar oracle (``"reference"``).
    """
    _check_input(layer, x.shape)
    if layer.kind == "flatten":
        return x.reshape(-1)
    if layer.kind == "relu":
        fmt = x.fmt
        negative = (x.bits >> (fmt.n - 1)).astype(bool) & (x.bits != fmt.nar_bits)
        return PositTensor(np.where(negative, 0, x.bits).astype(np.uint32), fmt)
    if layer.kind == "maxpool2x2":
        return _maxpool_bits(x)
    fmt = layer.precision or x.fmt
    x = convert(x, fmt)
    outputs = {"engine": _engine_outputs, "reference": _reference_outputs}.get(route)
    if outputs is None:
        raise ValueError(f"unknown route {route!r}")
    if layer.kind == "dense":
        res = outputs(layer, x.bits.reshape(1, -1), fmt)
        return PositTensor(res.reshape(-1), fmt)
    o, _, kh, kw = layer.weight.shape
    _, h, wd = x.shape
    cols = _im2col(x.bits, kh, kw, layer.stride, layer.padding)
    ho = (h + 2 * layer.padding - kh) // layer.stride + 1
    wo = (wd + 2 * layer.padding - kw) // layer.stride + 1
    res = outputs(layer, cols, fmt)
    return PositTensor(res.T.reshape(o, ho, wo).copy(), fmt)


def _maxpool_bits(x: PositTensor) -> PositTensor:
    fmt = x.fmt
    c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    bits = x.bits[:, :h2 * 2, :w2 * 2].reshape(c, h2, 2, w2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h2, w2, 4)
    # posit order is two's-complement integer order; NaR propagates
    signed = bits.astype(np.int64)
    signed = np.where(signed >> (fmt.n - 1), signed - (1 << fmt.n), signed)
    idx = signed.argmax(axis=-1)
    best = np.take_along_axis(bits, idx[..., None], axis=-1)[..., 0]
    has_nar = (bits == fmt.nar_bits).any(axis=-1)
    return PositTensor(np.where(has_nar, fmt.nar_bits, best).astype(np.uint32), fmt)


def run_layer_float(layer: LayerSpec, x: np.ndarray) -> np.ndarray:
    _check_input(layer, x.shape)
    if layer.kind == "flatten":
        return x.reshape(-1)
    if layer.kind == "relu":
        return np.maximum(x, 0.0)
    if layer.kind == "maxpool2x2":
        c, h, w = x.shape
        h2, w2 = h // 2, w // 2
        return x[:, :h2 * 2, :w2 * 2].reshape(c, h2, 2, w2, 2).max(axis=(2, 4))
    weight = layer.weight.astype(np.float64)
    bias = layer.bias.astype(np.float64)
    if layer.kind == "dense":
        return weight @ x + bias
    o, _, kh, kw = weight.shape
    _, h, wd = x.shape
    cols = _im2col(x, kh, kw, layer.stride, layer.padding)
    ho = (h + 2 * layer.padding - kh) // layer.stride + 1
    wo = (wd + 2 * layer.padding - kw) // layer.stride + 1
    res = cols @ weight.reshape(o, -1).T + bias
    return res.T.reshape(o, ho, wo)


# -- whole models -------------------------------------------------------------------

Precision = Union[str, PositFormat, Sequence[Optional[PositFormat]], None]


def layer_formats(model: Sequence[LayerSpec], precision: Precision) -> list[Optional[PositFormat]]:
    """Compute precision for every compute layer.

    ``None`` uses the tags stored on the layers; a single format applies to
    all of them; a sequence gives one entry per compute layer (``None``
    entries fall back to the tag).
    """
    compute = [layer for layer in model if layer.is_compute]
    if precision is None:
        fmts = [layer.precision for layer in compute]
    elif isinstance(precision, PositFormat):
        fmts = [precision] * len(compute)
    else:
        precision = list(precision)
        if len(precision) != len(compute):
            raise ValueError(f"{len(precision)} precisions given for {len(compute)} compute layers")
        fmts = [p or layer.precision for p, layer in zip(precision, compute)]
    if any(f is None for f in fmts):
        raise ValueError("a compute layer has no precision; pass one explicitly")
    return fmts


def forward(model: Sequence[LayerSpec], x: np.ndarray, precision: Precision = "float", *,
            route: str = "engine"):
    """Run a model on one input; returns float64 logits or a PositTensor."""
    if isinstance(precision, str):
        if precision != "float":
            raise ValueError(f"unknown precision {precision!r}")
        out = np.asarray(x, dtype=np.float64)
        for layer in model:
            out = run_layer_float(layer, out)
        return out
    fmts = iter(layer_formats(model, precision))
    plan = []
    for layer in model:
        plan.append(next(fmts) if layer.is_compute else None)
    first = next(f for f in plan if f is not None)
    act = quantize(x, first)
    for layer, fmt in zip(model, plan):
        if fmt is not None and fmt != layer.precision:
            layer = LayerSpec(layer.kind, layer.weight, layer.bias, layer.stride, layer.padding,
                              fmt, layer._prepared)
        act = run_layer(layer, act, route=route)
    return act


def predict(logits) -> int:
    """Top-1 class; ties go to the lowest index."""
    if isinstance(logits, PositTensor):
        keys = [signed_value(int(b), logits.fmt) for b in logits.bits]
    else:
        keys = [float(v) for v in logits]
    best = 0
    for i, k in enumerate(keys):
        if k > keys[best]:
            best = i
    return best


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    correct: np.ndarray
    total: np.ndarray
    predictions: np.ndarray

    @property
    def n(self) -> int:
        return int(self.total.sum())


def prepare_image(image: np.ndarray) -> np.ndarray:
    """uint8 (H, W) image -> (1, H, W) float64 in [0, 1]."""
    return (np.asarray(image, dtype=np.float64) / 255.0)[None, :, :]


def evaluate(model: Sequence[LayerSpec], images: np.ndarray, labels: np.ndarray, n: int,
             precision: Precision = "float", *, num_classes: int = 10, progress=None) -> EvalResult:
    """Top-1 accuracy over the first ``n`` samples."""
    if n <= 0:
        raise ValueError("evaluate needs at least one sample")
    if n > len(images) or len(images) != len(labels):
        raise ValueError(f"dataset has {min(len(images), len(labels))} samples, asked for {n}")
    correct = np.zeros(num_classes, dtype=np.int64)
    total = np.zeros(num_classes, dtype=np.int64)
    preds = np.zeros(n, dtype=np.int64)
    for i in range(n):
        logits = forward(model, prepare_image(images[i]), precision)
        p = predict(logits)
        preds[i] = p
        y = int(labels[i])
        total[y] += 1
        correct[y] += p == y
        if progress is not None:
            progress(i + 1, n)
    return EvalResult(float(correct.sum()) / n, correct, total, preds)

