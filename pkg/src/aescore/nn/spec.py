"""Network architecture description and static shape inference."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

CONV = "conv"
RELU = "relu"
MAXPOOL = "maxpool"
DROPOUT = "dropout"
FC = "fc"
SOFTMAX_XENT = "softmax_xent"

_KINDS = (CONV, RELU, MAXPOOL, DROPOUT, FC, SOFTMAX_XENT)


class ShapeError(ValueError):
    """Layer input/output shapes do not line up."""


@dataclass(frozen=True)
class LayerSpec:
    """One layer: its kind, kind-specific parameters, and SGD rate multiplier."""

    kind: str
    out_channels: int | None = None
    kernel: int | None = None
    stride: int | None = None
    pad: int | None = None
    window: int | None = None
    rate: float | None = None
    out_features: int | None = None
    lr_multiplier: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.lr_multiplier < 0:
            raise ValueError(f"lr_multiplier must be >= 0, got {self.lr_multiplier}")
        if self.kind == CONV:
            if self.out_channels is None or self.out_channels < 1:
                raise ValueError("conv requires out_channels >= 1")
            if self.kernel is None or self.kernel < 1:
                raise ValueError("conv requires kernel >= 1")
            if self.stride is None or self.stride < 1:
                raise ValueError("conv requires stride >= 1")
            if self.pad is None or self.pad < 0:
                raise ValueError("conv requires pad >= 0")
        elif self.kind == MAXPOOL:
            if self.window is None or self.window < 1:
                raise ValueError("maxpool requires window >= 1")
            if self.stride is None or self.stride < 1:
                raise ValueError("maxpool requires stride >= 1")
        elif self.kind == DROPOUT:
            if self.rate is None or not 0.0 <= self.rate < 1.0:
                raise ValueError("dropout requires 0 <= rate < 1")
        elif self.kind == FC:
            if self.out_features is None or self.out_features < 1:
                raise ValueError("fc requires out_features >= 1")

    @property
    def has_weights(self) -> bool:
        return self.kind in (CONV, FC)


def conv(out_channels: int, kernel: int, stride: int = 1, pad: int = 0,
         lr_multiplier: float = 1.0) -> LayerSpec:
    return LayerSpec(CONV, out_channels=out_channels, kernel=kernel, stride=stride,
                     pad=pad, lr_multiplier=lr_multiplier)


def relu() -> LayerSpec:
    return LayerSpec(RELU)


def maxpool(window: int, stride: int | None = None) -> LayerSpec:
    return LayerSpec(MAXPOOL, window=window, stride=window if stride is None else stride)


def dropout(rate: float) -> LayerSpec:
    return LayerSpec(DROPOUT, rate=rate)


def fc(out_features: int, lr_multiplier: float = 1.0) -> LayerSpec:
    return LayerSpec(FC, out_features=out_features, lr_multiplier=lr_multiplier)


def softmax_xent() -> LayerSpec:
    return LayerSpec(SOFTMAX_XENT)


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layers over a (3, H, W) input, plus preprocessing metadata.

    ``name`` identifies the model in replies and weight files; ``channel_mean``
    is the per-channel mean subtracted during preprocessing (stored here so it
    travels with the weights).
    """

    name: str
    input_shape: tuple[int, int, int]
    layers: tuple[LayerSpec, ...]
    channel_mean: tuple[float, float, float] = (0.5, 0.5, 0.5)

    def __post_init__(self):
        if len(self.input_shape) != 3 or self.input_shape[0] != 3:
            raise ValueError(f"input_shape must be (3, H, W), got {self.input_shape}")
        if any(d < 1 for d in self.input_shape):
            raise ValueError(f"input extents must be >= 1, got {self.input_shape}")
        if not self.layers:
            raise ValueError("network needs at least one layer")
        if len(self.channel_mean) != 3:
            raise ValueError("channel_mean must have 3 entries")
        body = [l for l in self.layers if l.kind != SOFTMAX_XENT]
        if not body or body[-1].kind != FC or body[-1].out_features != 2:
            raise ValueError("final fc layer must have out_features == 2")
        self.output_shapes()  # raises ShapeError on bad geometry

    def output_shapes(self) -> list[tuple[int, ...]]:
        """Per-layer output shapes (without batch extent)."""
        shapes: list[tuple[int, ...]] = []
        cur: tuple[int, ...] = self.input_shape
        for i, layer in enumerate(self.layers):
            cur = _layer_output_shape(layer, cur, i)
            shapes.append(cur)
        return shapes

    def parametric_indices(self) -> list[int]:
        return [i for i, l in enumerate(self.layers) if l.has_weights]

    def first_fc_index(self) -> int:
        for i, l in enumerate(self.layers):
            if l.kind == FC:
                return i
        raise ValueError("network has no fc layer")

    def with_lr_multipliers(self, overrides: dict[int, float]) -> "NetworkSpec":
        """Copy of the network with per-layer lr_multiplier overrides applied."""
        layers = list(self.layers)
        for idx, mult in overrides.items():
            if not 0 <= idx < len(layers):
                raise ValueError(f"lr_multiplier override for missing layer {idx}")
            layers[idx] = replace(layers[idx], lr_multiplier=mult)
        return replace(self, layers=tuple(layers))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "channel_mean": list(self.channel_mean),
            "layers": [
                {k: v for k, v in vars(l).items() if v is not None}
                for l in self.layers
            ],
        }

    @staticmethod
    def from_dict(data: dict) -> "NetworkSpec":
        layers = tuple(LayerSpec(**entry) for entry in data["layers"])
        return NetworkSpec(
            name=data["name"],
            input_shape=tuple(data["input_shape"]),
            layers=layers,
            channel_mean=tuple(data["channel_mean"]),
        )


def _conv_extent(extent: int, kernel: int, stride: int, pad: int) -> int:
    return (extent + 2 * pad - kernel) // stride + 1


def _layer_output_shape(layer: LayerSpec, in_shape: tuple[int, ...], index: int) -> tuple[int, ...]:
    kind = layer.kind
    if kind == CONV:
        if len(in_shape) != 3:
            raise ShapeError(f"layer {index} (conv): expected 3-d input, got {in_shape}")
        _, h, w = in_shape
        oh = _conv_extent(h, layer.kernel, layer.stride, layer.pad)
        ow = _conv_extent(w, layer.kernel, layer.stride, layer.pad)
        if oh < 1 or ow < 1:
            raise ShapeError(f"layer {index} (conv): kernel {layer.kernel} too large for {in_shape}")
        return (layer.out_channels, oh, ow)
    if kind == MAXPOOL:
        if len(in_shape) != 3:
            raise ShapeError(f"layer {index} (maxpool): expected 3-d input, got {in_shape}")
        c, h, w = in_shape
        oh = _conv_extent(h, layer.window, layer.stride, 0)
        ow = _conv_extent(w, layer.window, layer.stride, 0)
        if oh < 1 or ow < 1:
            raise ShapeError(f"layer {index} (maxpool): window {layer.window} too large for {in_shape}")
        return (c, oh, ow)
    if kind == FC:
        return (layer.out_features,)
    # relu / dropout / softmax_xent preserve shape
    return in_shape


def reference_network(name: str = "scratch", input_hw: int = 64,
                      dropout_rate: float = 0.5) -> NetworkSpec:
    """Desk-scale 5-conv/3-fc architecture used throughout the toolkit.

    Topology: conv16(5,p2)-pool-conv32(3,p1)-pool-conv48(3,p1)-conv48(3,p1)-
    conv32(3,p1)-pool-fc256-fc128-fc2 with ReLU activations and dropout on
    the first two fc layers. The first fc output is the feature-extraction
    tap (256-dim).
    """
    return NetworkSpec(
        name=name,
        input_shape=(3, input_hw, input_hw),
        layers=(
            conv(16, 5, 1, 2), relu(), maxpool(2, 2),
            conv(32, 3, 1, 1), relu(), maxpool(2, 2),
            conv(48, 3, 1, 1), relu(),
            conv(48, 3, 1, 1), relu(),
            conv(32, 3, 1, 1), relu(), maxpool(2, 2),
            fc(256), relu(), dropout(dropout_rate),
            fc(128), relu(), dropout(dropout_rate),
            fc(2),
        ),
    )


def toy_network(name: str = "toy", input_hw: int = 16,
                dropout_rate: float = 0.5) -> NetworkSpec:
    """Shrunken 5-conv/3-fc network small enough for exhaustive gradient checks."""
    return NetworkSpec(
        name=name,
        input_shape=(3, input_hw, input_hw),
        layers=(
            conv(4, 3, 1, 1), relu(), maxpool(2, 2),
            conv(6, 3, 1, 1), relu(), maxpool(2, 2),
            conv(8, 3, 1, 1), relu(),
            conv(8, 3, 1, 1), relu(),
            conv(6, 3, 1, 1), relu(), maxpool(2, 2),
            fc(32), relu(), dropout(dropout_rate),
            fc(16), relu(), dropout(dropout_rate),
            fc(2),
        ),
    )
