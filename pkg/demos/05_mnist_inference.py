"""
MNIST through the engine
========================

Run the shipped small CNN on the shipped test images in float and in the
three posit precisions, and try a mixed per-layer configuration.
"""

import sys
import time
from pathlib import Path

import spade
from spade import P8, P16, P32
from spade.nn import container, evaluate, load_mnist

n = int(sys.argv[1]) if len(sys.argv) > 1 else 100

data = Path(spade.__file__).parent / "data"
layers, meta = container.load(data / "mnist_small.spdw")
images, labels = load_mnist(data / "mnist")
print(f"model: {meta['description']} ({meta['params']} parameters)")
print(f"recorded float accuracy on all {meta['test_samples']} images: {meta['float_accuracy']:.4f}")

for name, precision in [("float", "float"), ("P32", P32), ("P16", P16), ("P8", P8),
                        ("P8/P8/P16/P32", [P8, P8, P16, P32])]:
    t = time.perf_counter()
    res = evaluate(layers, images, labels, n, precision)
    print(f"{name:>14}: {res.accuracy:.3f} on {n} images ({time.perf_counter() - t:.1f}s)")
