"""Desk-scale quantized inference on the MAC engine."""

from .idx import load_mnist, read_idx, write_idx
from .model import (EvalResult, LayerSpec, PositTensor, evaluate, forward, predict, quantize,
                    run_layer, run_layer_float)
from . import container
