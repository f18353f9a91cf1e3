"""Network-level operations: init, forward, backward, SGD, feature taps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..seeding import STREAM_DROPOUT, derive_seed
from . import layers as L
from .spec import CONV, DROPOUT, FC, MAXPOOL, RELU, SOFTMAX_XENT, NetworkSpec, ShapeError

TRAIN = "train"
INFER = "infer"


@dataclass
class Parameters:
    """Trainable weights/biases per parametric layer plus SGD momentum buffers."""

    weights: dict[int, np.ndarray]
    biases: dict[int, np.ndarray]
    vel_w: dict[int, np.ndarray] = field(default_factory=dict)
    vel_b: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for i in self.weights:
            self.vel_w.setdefault(i, np.zeros_like(self.weights[i]))
            self.vel_b.setdefault(i, np.zeros_like(self.biases[i]))

    def copy(self) -> "Parameters":
        return Parameters(
            {i: w.copy() for i, w in self.weights.items()},
            {i: b.copy() for i, b in self.biases.items()},
            {i: v.copy() for i, v in self.vel_w.items()},
            {i: v.copy() for i, v in self.vel_b.items()},
        )

    def astype(self, dtype) -> "Parameters":
        return Parameters(
            {i: w.astype(dtype) for i, w in self.weights.items()},
            {i: b.astype(dtype) for i, b in self.biases.items()},
        )

    def param_count(self) -> int:
        return sum(w.size for w in self.weights.values()) + sum(
            b.size for b in self.biases.values()
        )


@dataclass
class ForwardCache:
    """Everything backward and the gradient checker need from a forward pass."""

    mode: str
    rng_seed: int
    layer_caches: list
    outputs: list[np.ndarray]
    logits: np.ndarray
    single: bool


def init_params(net: NetworkSpec, scheme: str = "he_normal", seed: int = 0) -> Parameters:
    """He-normal weights (std sqrt(2/fan_in)), zero biases, float32 storage."""
    if scheme != "he_normal":
        raise ValueError(f"unknown init scheme {scheme!r}")
    rng = np.random.default_rng(seed)
    shapes = _param_shapes(net)
    weights, biases = {}, {}
    for i, (w_shape, fan_in) in shapes.items():
        std = np.sqrt(2.0 / fan_in)
        weights[i] = rng.normal(0.0, std, size=w_shape).astype(np.float32)
        biases[i] = np.zeros(w_shape[0], dtype=np.float32)
    return Parameters(weights, biases)


def _param_shapes(net: NetworkSpec) -> dict[int, tuple[tuple[int, ...], int]]:
    shapes: dict[int, tuple[tuple[int, ...], int]] = {}
    cur = net.input_shape
    out_shapes = net.output_shapes()
    for i, layer in enumerate(net.layers):
        if layer.kind == CONV:
            c_in = cur[0]
            fan_in = c_in * layer.kernel * layer.kernel
            shapes[i] = ((layer.out_channels, c_in, layer.kernel, layer.kernel), fan_in)
        elif layer.kind == FC:
            fan_in = int(np.prod(cur))
            shapes[i] = ((layer.out_features, fan_in), fan_in)
        cur = out_shapes[i]
    return shapes


def _check_params(net: NetworkSpec, params: Parameters) -> None:
    expected = _param_shapes(net)
    if set(expected) != set(params.weights):
        raise ShapeError(
            f"parametric layers {sorted(expected)} != parameter keys {sorted(params.weights)}"
        )
    for i, (w_shape, _) in expected.items():
        if params.weights[i].shape != w_shape:
            raise ShapeError(
                f"layer {i}: weight shape {params.weights[i].shape} != expected {w_shape}"
            )
        if params.biases[i].shape != (w_shape[0],):
            raise ShapeError(
                f"layer {i}: bias shape {params.biases[i].shape} != expected ({w_shape[0]},)"
            )


def forward(net: NetworkSpec, params: Parameters, x: np.ndarray,
            mode: str = INFER, rng_seed: int = 0) -> tuple[np.ndarray, ForwardCache]:
    """Run the network; returns logits and the cache backward needs.

    Accepts a single (3, H, W) input or a batch (N, 3, H, W). Dropout is
    active only in train mode, with masks drawn from a counter-based RNG
    keyed on (rng_seed, layer index) so runs are exactly reproducible.
    """
    if mode not in (TRAIN, INFER):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    single = x.ndim == 3
    if single:
        x = x[None]
    if x.ndim != 4 or x.shape[1:] != net.input_shape:
        raise ShapeError(
            f"input shape {x.shape} does not match network input {net.input_shape}"
        )

    caches: list = []
    outputs: list[np.ndarray] = []
    out = x
    for i, layer in enumerate(net.layers):
        kind = layer.kind
        if kind == CONV:
            out, cache = L.conv_forward(out, params.weights[i], params.biases[i],
                                        layer.stride, layer.pad)
        elif kind == RELU:
            out, cache = L.relu_forward(out)
        elif kind == MAXPOOL:
            out, cache = L.maxpool_forward(out, layer.window, layer.stride)
        elif kind == DROPOUT:
            rng = None
            if mode == TRAIN and layer.rate > 0.0:
                rng = np.random.default_rng(derive_seed(STREAM_DROPOUT, rng_seed, i))
            out, cache = L.dropout_forward(out, layer.rate, mode == TRAIN, rng)
        elif kind == FC:
            out, cache = L.fc_forward(out, params.weights[i], params.biases[i])
        else:  # SOFTMAX_XENT marks the loss attachment; identity in forward
            cache = None
        caches.append(cache)
        outputs.append(out)

    logits = out
    result = logits[0] if single else logits
    return result, ForwardCache(mode, rng_seed, caches, outputs, logits, single)


def backward(net: NetworkSpec, params: Parameters, cache: ForwardCache,
             label) -> tuple[float, dict[int, tuple[np.ndarray, np.ndarray]]]:
    """Cross-entropy loss at label plus gradients for every parametric layer."""
    if cache.mode != TRAIN:
        raise ValueError("backward requires a cache from a train-mode forward")
    labels = np.atleast_1d(np.asarray(label, dtype=np.intp))
    n = cache.logits.shape[0]
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {labels.shape}")
    if np.any((labels < 0) | (labels > 1)):
        raise ValueError("labels must be 0 or 1")

    loss, d = L.softmax_cross_entropy(cache.logits, labels)
    grads: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for i in range(len(net.layers) - 1, -1, -1):
        kind = net.layers[i].kind
        lc = cache.layer_caches[i]
        if kind == CONV:
            d, dw, db = L.conv_backward(d, lc)
            grads[i] = (dw, db)
        elif kind == RELU:
            d = L.relu_backward(d, lc)
        elif kind == MAXPOOL:
            d = L.maxpool_backward(d, lc)
        elif kind == DROPOUT:
            d = L.dropout_backward(d, lc)
        elif kind == FC:
            d, dw, db = L.fc_backward(d, lc)
            grads[i] = (dw, db)
        # SOFTMAX_XENT: gradient already starts at the logits
    return loss, grads


def softmax_prob(logits: np.ndarray) -> tuple[float, float]:
    """Class probabilities (p0, p1) for a single 2-logit output."""
    logits = np.asarray(logits)
    if logits.shape != (2,):
        raise ValueError(f"expected logits of shape (2,), got {logits.shape}")
    p = L.softmax_probabilities(logits)
    return float(p[0]), float(p[1])


def sgd_step(params: Parameters, grads: dict, base_lr: float, momentum: float,
             net: NetworkSpec) -> Parameters:
    """One SGD-with-momentum update, scaled per layer by its lr_multiplier.

    Per layer: buf <- momentum*buf + grad; weight <- weight - base_lr*mult*buf.
    A zero multiplier leaves the stored weights bit-identical.
    """
    if base_lr <= 0:
        raise ValueError(f"base_lr must be > 0, got {base_lr}")
    if not 0.0 <= momentum < 1.0:
        raise ValueError(f"momentum must be in [0, 1), got {momentum}")
    if set(grads) != set(params.weights):
        raise ShapeError(f"gradient keys {sorted(grads)} != parameter keys {sorted(params.weights)}")
    for i, (dw, db) in grads.items():
        if dw.shape != params.weights[i].shape or db.shape != params.biases[i].shape:
            raise ShapeError(f"layer {i}: gradient shape mismatch")
        mult = net.layers[i].lr_multiplier
        params.vel_w[i] = momentum * params.vel_w[i] + dw
        params.vel_b[i] = momentum * params.vel_b[i] + db
        if mult != 0.0:
            lr = params.weights[i].dtype.type(base_lr * mult)
            params.weights[i] -= lr * params.vel_w[i]
            params.biases[i] -= lr * params.vel_b[i]
    return params


def extract_features(net: NetworkSpec, params: Parameters, x: np.ndarray,
                     layer_index: int) -> np.ndarray:
    """Flattened activation after the indexed layer, in inference mode."""
    if not 0 <= layer_index < len(net.layers):
        raise IndexError(f"layer_index {layer_index} out of range [0, {len(net.layers)})")
    single = x.ndim == 3
    _, cache = forward(net, params, x, mode=INFER)
    act = cache.outputs[layer_index]
    flat = act.reshape(act.shape[0], -1)
    return flat[0] if single else flat
