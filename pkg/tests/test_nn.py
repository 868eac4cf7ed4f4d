import gzip
import struct
from pathlib import Path

import numpy as np
import pytest

import spade
from spade.nn import (LayerSpec, PositTensor, container, evaluate, forward, load_mnist, predict, quantize,
                      read_idx, run_layer, write_idx)
from spade.nn.container import ContainerError
from spade.nn.idx import IdxError, dump_idx, parse_idx
from spade.posit import P8, P16, P32, PositWord, to_real

from conftest import ALL_FORMATS, nearest_even_p8

DATA = Path(spade.__file__).parent / "data"


# -- IDX ------------------------------------------------------------------------------

def test_idx_header_bytes():
    raw = dump_idx(np.arange(6, dtype=np.uint8).reshape(2, 3))
    assert raw[:4] == bytes([0, 0, 0x08, 2])
    assert struct.unpack(">II", raw[4:12]) == (2, 3)
    assert raw[12:] == bytes(range(6))


@pytest.mark.parametrize("dtype", [np.uint8, np.int8, np.int16, np.int32, np.float32, np.float64])
def test_idx_roundtrip(tmp_path, dtype):
    arr = (np.arange(24) - 5).astype(dtype).reshape(2, 3, 4)
    for name in ("a.idx", "a.idx.gz"):
        write_idx(tmp_path / name, arr)
        back = read_idx(tmp_path / name)
        assert back.dtype == arr.dtype and np.array_equal(back, arr)
    assert gzip.decompress((tmp_path / "a.idx.gz").read_bytes()) == (tmp_path / "a.idx").read_bytes()


@pytest.mark.parametrize("blob", [b"", b"\x01\x00\x08\x01\x00\x00\x00\x02\x00",
                                  b"\x00\x00\x08\x01\x00\x00\x00\x05\x00", b"\x00\x00\x07\x01\x00\x00\x00\x00"])
def test_idx_rejects_corrupt(blob):
    with pytest.raises(IdxError):
        parse_idx(blob)


def test_shipped_dataset():
    images, labels = load_mnist(DATA / "mnist")
    assert images.shape == (1000, 28, 28) and images.dtype == np.uint8
    assert labels.shape == (1000,)
    assert np.bincount(labels).tolist() == [100] * 10


def test_load_mnist_missing(tmp_path):
    with pytest.raises(FileNotFoundError, match=str(tmp_path)):
        load_mnist(tmp_path)


# -- container ----------------------------------------------------------------------

def small_model():
    rng = np.random.default_rng(0)
    return [
        LayerSpec("conv2d", rng.normal(size=(2, 1, 3, 3)).astype(np.float32), rng.normal(size=2).astype(np.float32),
                  stride=1, padding=1, precision=P16),
        LayerSpec("relu"),
        LayerSpec("maxpool2x2"),
        LayerSpec("flatten"),
        LayerSpec("dense", rng.normal(size=(3, 8)).astype(np.float32), None, precision=P8),
    ]


def test_container_roundtrip(tmp_path):
    layers = small_model()
    container.save(tmp_path / "m.spdw", layers, {"note": "x"})
    back, meta = container.load(tmp_path / "m.spdw")
    assert meta == {"note": "x"}
    assert [l.kind for l in back] == [l.kind for l in layers]
    for a, b in zip(layers, back):
        assert a.precision == b.precision and a.stride == b.stride and a.padding == b.padding
        if a.weight is not None:
            assert np.array_equal(a.weight, b.weight) and np.array_equal(a.bias, b.bias)


def test_container_layout():
    blob = container.dumps([LayerSpec("dense", np.array([[1.5]], dtype=np.float32), np.array([-2.0], np.float32))])
    assert blob[:4] == b"SPDW"
    version, _, hlen = struct.unpack("<HHI", blob[4:12])
    assert version == 1
    assert blob[12 + hlen:] == struct.pack("<ff", 1.5, -2.0)


@pytest.mark.parametrize("mutate", [lambda b: b"XXXX" + b[4:], lambda b: b[:-1], lambda b: b + b"\0"])
def test_container_rejects_corrupt(mutate):
    blob = container.dumps(small_model())
    with pytest.raises(ContainerError):
        container.loads(mutate(blob))


def test_shipped_model_tags():
    layers, meta = container.load(DATA / "mnist_small.spdw")
    assert sum(l.weight.size + l.bias.size for l in layers if l.is_compute) == meta["params"] < 100_000
    assert all(l.precision == P16 for l in layers if l.is_compute)
    assert meta["test_samples"] == 1000


# -- quantize / layers ----------------------------------------------------------------

def test_quantize_matches_enumeration_p8():
    xs = np.linspace(-70, 70, 2001)
    got = quantize(xs, P8).bits
    from fractions import Fraction
    want = [nearest_even_p8(Fraction(float(x))) if abs(x) <= 64 else (0x7F if x > 0 else 0x81) for x in xs]
    assert got.tolist() == want


@pytest.mark.parametrize("fmt, x, bits", [(P8, 0.0, 0x00), (P8, 1.0, 0x40), (P8, 0.3, 0x13)])
def test_quantize_examples(fmt, x, bits):
    assert quantize(np.array([x]), fmt).bits[0] == bits


def test_quantize_nonfinite_warns():
    with pytest.warns(RuntimeWarning):
        t = quantize(np.array([np.nan, 1.0]), P16)
    assert t.bits.tolist() == [0x8000, 0x4000]


def test_dense_two_plus_three():
    layer = LayerSpec("dense", np.array([[1.0, 1.0]]), precision=P8)
    out = run_layer(layer, quantize(np.array([2.0, 3.0]), P8))
    assert out.bits.tolist() == [0x72]


@pytest.mark.parametrize("fmt", ALL_FORMATS)
def test_dense_identity(fmt):
    x = quantize(np.linspace(-3, 5, 7), fmt)
    out = run_layer(LayerSpec("dense", np.eye(7), precision=fmt), x)
    assert np.array_equal(out.bits, x.bits)


@pytest.mark.parametrize("fmt", ALL_FORMATS)
def test_relu(fmt):
    bits = np.arange(0, 1 << min(fmt.n, 16), dtype=np.uint32) if fmt.n < 32 else \
        np.array([0, 1, 0x7FFFFFFF, 0x80000000, 0x80000001, 0xFFFFFFFF], dtype=np.uint32)
    out = run_layer(LayerSpec("relu"), PositTensor(bits, fmt))
    for b, o in zip(bits.tolist(), out.bits.tolist()):
        if b == fmt.nar_bits:
            assert o == b
        elif to_real(PositWord(b, fmt)) < 0:
            assert o == 0
        else:
            assert o == b


def test_maxpool_and_nar():
    x = quantize(np.array([[[1.0, -2.0, 0.5, 0.25], [3.0, -4.0, 0.125, 0.0]]]), P8)
    assert run_layer(LayerSpec("maxpool2x2"), x).values().tolist() == [[[3.0, 0.5]]]
    x.bits[0, 0, 0] = 0x80
    assert run_layer(LayerSpec("maxpool2x2"), x).bits.tolist() == [[[0x80, 0x20]]]


def test_shape_mismatch():
    with pytest.raises(ValueError):
        run_layer(LayerSpec("dense", np.ones((2, 3)), precision=P8), quantize(np.ones(4), P8))
    with pytest.raises(ValueError):
        LayerSpec("dense", np.ones((2, 3)), np.ones(3))


@pytest.mark.parametrize("fmt", ALL_FORMATS)
def test_conv_engine_equals_reference(fmt):
    layer = small_model()[0]
    layer.precision = fmt
    x = quantize(np.random.default_rng(1).normal(size=(1, 5, 6)), fmt)
    a = run_layer(layer, x, route="engine")
    b = run_layer(layer, x, route="reference")
    assert a.shape == (2, 5, 6)
    assert np.array_equal(a.bits, b.bits)


# -- evaluate -------------------------------------------------------------------------

def test_predict_ties_lowest():
    assert predict(np.zeros(10)) == 0
    assert predict(np.array([0.0, 2.0, 2.0])) == 1
    assert predict(quantize(np.array([1.0, 3.0, 3.0, -5.0]), P8)) == 1


def test_evaluate_needs_samples():
    images, labels = np.zeros((3, 4, 4), np.uint8), np.zeros(3, np.uint8)
    with pytest.raises(ValueError):
        evaluate([LayerSpec("flatten")], images, labels, 0)


@pytest.mark.parametrize("precision", ["float", P8, P32])
def test_all_zero_model_accuracy_is_class0_share(precision):
    images, labels = load_mnist(DATA / "mnist")
    model = [LayerSpec("flatten"), LayerSpec("dense", np.zeros((10, 784)), precision=P16)]
    res = evaluate(model, images, labels, 50, precision)
    assert res.accuracy == np.mean(labels[:50] == 0)
    assert res.predictions.tolist() == [0] * 50


def test_shipped_float_baseline_reproduces():
    layers, meta = container.load(DATA / "mnist_small.spdw")
    images, labels = load_mnist(DATA / "mnist")
    res = evaluate(layers, images, labels, len(images), "float")
    assert res.accuracy == meta["float_accuracy"]
    assert int(res.correct.sum()) == meta["float_correct"]


def test_posit_evaluate_deterministic():
    layers, _ = container.load(DATA / "mnist_small.spdw")
    images, labels = load_mnist(DATA / "mnist")
    a = evaluate(layers, images, labels, 5, P8)
    b = evaluate(layers, images, labels, 5, P8)
    assert a.predictions.tolist() == b.predictions.tolist()


def test_per_layer_precision():
    layers, _ = container.load(DATA / "mnist_small.spdw")
    images, _ = load_mnist(DATA / "mnist")
    x = images[0][None] / 255.0
    out = forward(layers, x, [P8, P16, P32, P32])
    assert out.fmt == P32
    with pytest.raises(ValueError):
        forward(layers, x, [P8, P16])
