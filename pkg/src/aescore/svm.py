"""Binary RBF-kernel SVM trained with sequential minimal optimization.

The solver is the two-multiplier analytic SMO: sweep over samples, pick the
partner by the largest |E_i - E_j| (falling back through the remaining
candidates in deterministic order), clip to the box [0, C], and update the
bias per the standard rules. Training exits after ``max_passes`` consecutive
sweeps without an update. Labels are {0, 1} at the API boundary and
{-1, +1} internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Hard cap on sweeps so degenerate inputs cannot loop forever.
_MAX_SWEEPS = 1000


@dataclass(frozen=True)
class SvmModel:
    """Support vectors with signed dual coefficients alpha_i * y_i.

    ``kkt_residual`` is the largest KKT violation over the training set at
    solver exit; for well-posed problems it sits below the training tol.
    """

    support_vectors: np.ndarray
    coefficients: np.ndarray
    bias: float
    gamma: float
    C: float
    kkt_residual: float = 0.0
    dual_balance: float = 0.0  # sum alpha_i y_i at exit, zero up to rounding

    def decision(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.support_vectors.shape[1],):
            raise ValueError(
                f"feature length {x.shape} != model dimension {self.support_vectors.shape[1]}"
            )
        dist = ((self.support_vectors - x) ** 2).sum(axis=1)
        return float(self.coefficients @ np.exp(-self.gamma * dist) + self.bias)


def rbf_kernel(x, y, gamma: float) -> float:
    """exp(-gamma * ||x - y||^2)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"feature length mismatch: {x.shape} vs {y.shape}")
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    return float(np.exp(-gamma * ((x - y) ** 2).sum()))


def _kernel_matrix(X: np.ndarray, gamma: float) -> np.ndarray:
    sq = (X ** 2).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (X @ X.T), 0.0)
    return np.exp(-gamma * d2)


def svm_train(features, labels, C: float = 10.0, gamma: float = 1e-6,
              tol: float = 1e-3, max_passes: int = 5) -> SvmModel:
    X = np.asarray(features, dtype=np.float64)
    y01 = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] != y01.shape[0]:
        raise ValueError(f"features {X.shape} and labels {y01.shape} do not align")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if len(np.unique(y01)) < 2:
        raise ValueError("both classes must be present")
    if C <= 0 or gamma <= 0 or tol <= 0 or max_passes < 1:
        raise ValueError("C, gamma, tol must be > 0 and max_passes >= 1")

    n = X.shape[0]
    y = np.where(y01 == 1, 1.0, -1.0)
    K = _kernel_matrix(X, gamma)
    alpha = np.zeros(n)
    b = 0.0

    quiet_passes = 0
    sweeps = 0
    while quiet_passes < max_passes and sweeps < _MAX_SWEEPS:
        sweeps += 1
        changed = 0
        for i in range(n):
            E = (alpha * y) @ K + b - y
            r = y[i] * E[i]
            if not ((r < -tol and alpha[i] < C) or (r > tol and alpha[i] > 0)):
                continue
            # second-choice heuristic, then remaining candidates in order
            order = np.argsort(-np.abs(E[i] - E), kind="stable")
            for j in order:
                if j == i:
                    continue
                new_b = _optimize_pair(i, int(j), alpha, y, K, E, b, C)
                if new_b is not None:
                    b = new_b
                    changed += 1
                    break
        quiet_passes = quiet_passes + 1 if changed == 0 else 0

    decisions = (alpha * y) @ K + b
    residual = float(_kkt_violations(alpha, y, decisions, C).max())
    keep = alpha > 1e-10
    return SvmModel(
        support_vectors=X[keep].copy(),
        coefficients=(alpha * y)[keep].copy(),
        bias=float(b),
        gamma=gamma,
        C=C,
        kkt_residual=residual,
        dual_balance=float((alpha * y).sum()),
    )


def _optimize_pair(i, j, alpha, y, K, E, b, C):
    # Analytic update of (alpha_i, alpha_j); returns the new bias, or None if
    # this pair cannot make progress.
    if y[i] != y[j]:
        low = max(0.0, alpha[j] - alpha[i])
        high = min(C, C + alpha[j] - alpha[i])
    else:
        low = max(0.0, alpha[i] + alpha[j] - C)
        high = min(C, alpha[i] + alpha[j])
    if high - low < 1e-12:
        return None
    eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
    if eta >= 0:  # no negative curvature along this direction
        return None
    aj_new = float(np.clip(alpha[j] - y[j] * (E[i] - E[j]) / eta, low, high))
    if abs(aj_new - alpha[j]) < 1e-5 * (aj_new + alpha[j] + 1e-5):
        return None
    ai_new = alpha[i] + y[i] * y[j] * (alpha[j] - aj_new)

    b1 = b - E[i] - y[i] * (ai_new - alpha[i]) * K[i, i] - y[j] * (aj_new - alpha[j]) * K[i, j]
    b2 = b - E[j] - y[i] * (ai_new - alpha[i]) * K[i, j] - y[j] * (aj_new - alpha[j]) * K[j, j]
    alpha[i], alpha[j] = ai_new, aj_new
    if 0.0 < ai_new < C:
        return b1
    if 0.0 < aj_new < C:
        return b2
    return (b1 + b2) / 2.0


def _kkt_violations(alpha, y, decisions, C):
    margin = y * decisions
    near_zero = alpha <= 1e-8
    near_c = alpha >= C - 1e-8
    interior = ~near_zero & ~near_c
    res = np.zeros_like(alpha)
    res[near_zero] = np.maximum(0.0, 1.0 - margin[near_zero])
    res[near_c] = np.maximum(0.0, margin[near_c] - 1.0)
    res[interior] = np.abs(margin[interior] - 1.0)
    return res


def svm_predict(model: SvmModel, x) -> tuple[int, float]:
    """Predicted label and the decision margin; margin 0 breaks to label 0."""
    margin = model.decision(x)
    return (1 if margin > 0 else 0), margin
