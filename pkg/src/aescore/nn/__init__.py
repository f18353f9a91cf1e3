"""From-scratch tensor network: five layer kinds, manual backprop, SGD."""

from .gradcheck import gradient_check
from .network import (
    INFER,
    TRAIN,
    ForwardCache,
    Parameters,
    backward,
    extract_features,
    forward,
    init_params,
    sgd_step,
    softmax_prob,
)
from .spec import (
    LayerSpec,
    NetworkSpec,
    ShapeError,
    conv,
    dropout,
    fc,
    maxpool,
    reference_network,
    relu,
    softmax_xent,
    toy_network,
)
from .weights_io import WeightsError, load_weights, save_weights

__all__ = [
    "INFER", "TRAIN", "ForwardCache", "Parameters", "LayerSpec", "NetworkSpec",
    "ShapeError", "WeightsError", "backward", "conv", "dropout", "extract_features",
    "fc", "forward", "gradient_check", "init_params", "load_weights", "maxpool",
    "reference_network", "relu", "save_weights", "sgd_step", "softmax_prob",
    "softmax_xent", "toy_network",
]
