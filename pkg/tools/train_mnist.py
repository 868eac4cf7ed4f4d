#!/usr/bin/env python3
"""Build the shipped MNIST assets: a 1000-image test split and a small CNN.

Source data is the 5000-sample MNIST subset bundled with mlxtend
(``mlxtend/data/data/mnist_5k.csv.gz``: 784 pixel columns then the label).
100 images per class go to the test split; the other 4000 train the model.

Needs torch, which the package itself does not use:

    python tools/train_mnist.py path/to/mnist_5k.csv.gz
"""

import argparse
import gzip
import io
from pathlib import Path

import numpy as np
import torch
from torch import nn

from spade.nn import LayerSpec, container, evaluate, write_idx

DATA = Path(__file__).resolve().parents[1] / "src" / "spade" / "data"


def split(path, per_class=100, seed=0):
    raw = np.loadtxt(io.BytesIO(gzip.decompress(Path(path).read_bytes())), delimiter=",")
    images = raw[:, :784].astype(np.uint8).reshape(-1, 28, 28)
    labels = raw[:, 784].astype(np.uint8)
    rng = np.random.default_rng(seed)
    test_idx = []
    for c in range(10):
        idx = np.flatnonzero(labels == c)
        test_idx += list(rng.choice(idx, per_class, replace=False))
    test_idx = rng.permutation(test_idx)
    train_mask = np.ones(len(labels), dtype=bool)
    train_mask[test_idx] = False
    return (images[train_mask], labels[train_mask]), (images[test_idx], labels[test_idx])


def build(c1=8, c2=16, hidden=32):
    return nn.Sequential(
        nn.MaxPool2d(2),
        nn.Conv2d(1, c1, 3, stride=2), nn.ReLU(),
        nn.Conv2d(c1, c2, 3, stride=2), nn.ReLU(),
        nn.Flatten(),
        nn.Linear(c2 * 4, hidden), nn.ReLU(),
        nn.Linear(hidden, 10),
    )


def to_layers(net, precision):
    layers = []
    for m in net:
        if isinstance(m, nn.MaxPool2d):
            layers.append(LayerSpec("maxpool2x2"))
        elif isinstance(m, nn.Conv2d):
            layers.append(LayerSpec("conv2d", m.weight.detach().numpy().copy(),
                                    m.bias.detach().numpy().copy(), stride=m.stride[0],
                                    padding=m.padding[0], precision=precision))
        elif isinstance(m, nn.ReLU):
            layers.append(LayerSpec("relu"))
        elif isinstance(m, nn.Flatten):
            layers.append(LayerSpec("flatten"))
        elif isinstance(m, nn.Linear):
            layers.append(LayerSpec("dense", m.weight.detach().numpy().copy(),
                                    m.bias.detach().numpy().copy(), precision=precision))
    return layers


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", help="mnist_5k.csv.gz from the mlxtend wheel")
    ap.add_argument("--epochs", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    (xtr, ytr), (xte, yte) = split(args.csv, seed=args.seed)
    (DATA / "mnist").mkdir(parents=True, exist_ok=True)
    write_idx(DATA / "mnist" / "t10k-images-idx3-ubyte.gz", xte)
    write_idx(DATA / "mnist" / "t10k-labels-idx1-ubyte.gz", yte)

    torch.manual_seed(args.seed)
    net = build()
    x = torch.tensor(xtr, dtype=torch.float32).unsqueeze(1) / 255.0
    y = torch.tensor(ytr, dtype=torch.long)
    opt = torch.optim.Adam(net.parameters(), lr=3e-3, weight_decay=1e-4)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, args.epochs)
    for epoch in range(args.epochs):
        perm = torch.randperm(len(x))
        net.train()
        for i in range(0, len(x), 64):
            b = perm[i:i + 64]
            opt.zero_grad()
            loss = nn.functional.cross_entropy(net(x[b]), y[b])
            loss.backward()
            opt.step()
        sched.step()
        if epoch % 10 == 9:
            print(f"epoch {epoch + 1}: loss {loss.item():.4f}")

    from spade.posit import P16
    layers = to_layers(net, P16)
    res = evaluate(layers, xte, yte, len(xte), "float")
    print(f"float baseline on {len(xte)} test images: {res.accuracy:.4f}")
    meta = {
        "description": "maxpool -> conv3x3/2 -> conv3x3/2 -> dense -> dense, MNIST",
        "input_scale": "pixel / 255",
        "test_samples": int(len(xte)),
        "float_accuracy": res.accuracy,
        "float_correct": int(round(res.accuracy * len(xte))),
        "params": int(sum(p.numel() for p in net.parameters())),
    }
    container.save(DATA / "mnist_small.spdw", layers, meta)
    print(f"wrote {DATA / 'mnist_small.spdw'} ({meta['params']} params)")


if __name__ == "__main__":
    main()
