"""Central-difference verification of the analytic backward pass.

The check casts parameters and input to float64 (storage stays whatever the
caller uses), runs forward/backward, then perturbs every parameter entry by
+/-epsilon and compares the difference quotient against the analytic
gradient. ReLU sign flips and max-pool argmax switches between the two
perturbed passes mark a kink crossing; those entries are skipped because the
quotient straddles a non-differentiable point.
"""

from __future__ import annotations

import numpy as np

from . import network as N
from .spec import MAXPOOL, RELU, NetworkSpec
from . import layers as L


def _routing_signature(net: NetworkSpec, cache: N.ForwardCache) -> list[np.ndarray]:
    sig = []
    for i, layer in enumerate(net.layers):
        if layer.kind == RELU:
            sig.append(cache.layer_caches[i])
        elif layer.kind == MAXPOOL:
            sig.append(cache.layer_caches[i][3])
    return sig


def _same_routing(a: list[np.ndarray], b: list[np.ndarray]) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def _loss_at(net, params, x, labels, rng_seed):
    logits, cache = N.forward(net, params, x, mode=N.TRAIN, rng_seed=rng_seed)
    loss, _ = L.softmax_cross_entropy(cache.logits, labels)
    return loss, _routing_signature(net, cache)


def gradient_check(net: NetworkSpec, params: N.Parameters, x: np.ndarray,
                   label, epsilon: float = 1e-4, rng_seed: int = 0) -> float:
    """Max relative error |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).

    Intended for small networks (a few thousand parameters); cost is two
    forward passes per parameter entry.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    p64 = params.astype(np.float64)
    x64 = np.asarray(x, dtype=np.float64)
    labels = np.atleast_1d(np.asarray(label, dtype=np.intp))

    _, cache = N.forward(net, p64, x64, mode=N.TRAIN, rng_seed=rng_seed)
    _, grads = N.backward(net, p64, cache, labels)

    max_rel = 0.0
    for i in sorted(grads):
        for analytic, tensor in ((grads[i][0], p64.weights[i]), (grads[i][1], p64.biases[i])):
            flat_t = tensor.reshape(-1)
            flat_g = analytic.reshape(-1)
            for j in range(flat_t.size):
                original = flat_t[j]
                flat_t[j] = original + epsilon
                loss_hi, sig_hi = _loss_at(net, p64, x64, labels, rng_seed)
                flat_t[j] = original - epsilon
                loss_lo, sig_lo = _loss_at(net, p64, x64, labels, rng_seed)
                flat_t[j] = original
                if not _same_routing(sig_hi, sig_lo):
                    continue  # perturbation crossed a ReLU/max-pool kink
                numeric = (loss_hi - loss_lo) / (2.0 * epsilon)
                a = float(flat_g[j])
                rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
                if rel > max_rel:
                    max_rel = rel
    return max_rel
