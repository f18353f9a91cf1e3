"""Training orchestration: scratch runs, proxy pretraining, fine-tuning,
evaluation, learning curves, and aesthetics ranking."""

from __future__ import annotations

import colorsys
import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import nn
from .dataset import LabeledDataset, PhotoRecord, ScoredPhoto
from .imaging import Image, PpmError, decode_ppm, resize_bilinear, to_tensor
from .metrics import Metrics, compute_metrics
from .nn.spec import ShapeError
from .seeding import STREAM_EPOCH, STREAM_INIT, STREAM_STEP, derive_seed

SCRATCH = "scratch"
FINETUNE = "finetune"

# Transferred layers learn at a tenth of the re-initialized head's rate.
FINETUNE_MULTIPLIER = 0.1

_EVAL_BATCH = 100


class DataError(ValueError):
    """A photo referenced by the dataset could not be loaded."""


@dataclass(frozen=True)
class TrainConfig:
    base_lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 50
    max_iterations: int = 1000
    eval_interval: int = 100
    seed: int = 0
    lr_multipliers: dict[int, float] | None = None
    mode: str = SCRATCH

    def __post_init__(self):
        if self.base_lr <= 0:
            raise ValueError(f"base_lr must be > 0, got {self.base_lr}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.eval_interval < 1:
            raise ValueError(f"eval_interval must be >= 1, got {self.eval_interval}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.mode not in (SCRATCH, FINETUNE):
            raise ValueError(f"mode must be scratch or finetune, got {self.mode!r}")


class LogRow(NamedTuple):
    iteration: int
    train_loss: float
    test_loss: float
    test_accuracy: float


@dataclass
class TrainingLog:
    rows: list[LogRow] = field(default_factory=list)

    def append(self, row: LogRow) -> None:
        if self.rows and row.iteration <= self.rows[-1].iteration:
            raise ValueError("log iterations must be strictly increasing")
        self.rows.append(row)

    def final_accuracy(self) -> float:
        if not self.rows:
            raise ValueError("empty training log")
        return self.rows[-1].test_accuracy

    def best_accuracy(self) -> float:
        if not self.rows:
            raise ValueError("empty training log")
        return max(r.test_accuracy for r in self.rows)


def load_photo_tensor(record: PhotoRecord, net: nn.NetworkSpec,
                      image_root: str | Path) -> np.ndarray:
    """Decode, resize to the net input, and mean-subtract one photo."""
    path = Path(image_root) / record.image_path
    try:
        image = decode_ppm(path.read_bytes())
    except (OSError, PpmError) as exc:
        raise DataError(f"photo {record.photo_id}: {exc}") from exc
    _, h, w = net.input_shape
    if (image.width, image.height) != (w, h):
        image = resize_bilinear(image, w, h)
    return to_tensor(image, net.channel_mean)


def dataset_tensors(dataset: LabeledDataset, net: nn.NetworkSpec,
                    image_root: str | Path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Stack a labeled dataset into (X, y, photo_ids), positives first."""
    xs, ys, ids = [], [], []
    for photo, label in dataset.photos():
        xs.append(load_photo_tensor(photo.record, net, image_root))
        ys.append(label)
        ids.append(photo.record.photo_id)
    if not xs:
        raise ValueError("dataset has no photos")
    return np.stack(xs), np.array(ys, dtype=np.intp), ids


def _loss_and_accuracy(net, params, X, y) -> tuple[float, float]:
    losses = []
    correct = 0
    for start in range(0, X.shape[0], _EVAL_BATCH):
        xb, yb = X[start:start + _EVAL_BATCH], y[start:start + _EVAL_BATCH]
        _, cache = nn.forward(net, params, xb, mode=nn.INFER)
        from .nn.layers import softmax_cross_entropy

        loss, _ = softmax_cross_entropy(cache.logits, yb)
        losses.append(loss * xb.shape[0])
        correct += int((cache.logits.argmax(axis=1) == yb).sum())
    return sum(losses) / X.shape[0], correct / X.shape[0]


def _train_on_arrays(net, params, X_train, y_train, X_test, y_test,
                     config: TrainConfig) -> tuple[nn.Parameters, TrainingLog]:
    if config.lr_multipliers:
        net = net.with_lr_multipliers(config.lr_multipliers)
    n = X_train.shape[0]
    log = TrainingLog()
    window_losses: list[float] = []
    epoch = 0
    perm = np.random.default_rng(
        derive_seed(STREAM_EPOCH, config.seed, epoch)).permutation(n)
    cursor = 0

    for iteration in range(1, config.max_iterations + 1):
        if cursor >= n:
            epoch += 1
            perm = np.random.default_rng(
                derive_seed(STREAM_EPOCH, config.seed, epoch)).permutation(n)
            cursor = 0
        batch = perm[cursor:cursor + config.batch_size]
        cursor += config.batch_size

        _, cache = nn.forward(net, params, X_train[batch], mode=nn.TRAIN,
                              rng_seed=derive_seed(STREAM_STEP, config.seed, iteration))
        loss, grads = nn.backward(net, params, cache, y_train[batch])
        nn.sgd_step(params, grads, config.base_lr, config.momentum, net)
        window_losses.append(loss)

        if iteration % config.eval_interval == 0 or iteration == config.max_iterations:
            test_loss, test_acc = _loss_and_accuracy(net, params, X_test, y_test)
            log.append(LogRow(iteration, sum(window_losses) / len(window_losses),
                              test_loss, test_acc))
            window_losses.clear()
    return params, log


def train(net: nn.NetworkSpec, params: nn.Parameters,
          datasets: tuple[LabeledDataset, LabeledDataset], config: TrainConfig,
          image_root: str | Path) -> tuple[nn.Parameters, TrainingLog]:
    """SGD training of `params` on the (train, test) dataset pair.

    Deterministic for a fixed config seed: epoch shuffles and dropout masks
    are derived from it, so repeated runs produce bit-identical weights.
    """
    train_set, test_set = datasets
    X_train, y_train, _ = dataset_tensors(train_set, net, image_root)
    X_test, y_test, _ = dataset_tensors(test_set, net, image_root)
    return _train_on_arrays(net, params, X_train, y_train, X_test, y_test, config)


def finetune(net: nn.NetworkSpec, pretrained: nn.Parameters,
             datasets: tuple[LabeledDataset, LabeledDataset], config: TrainConfig,
             image_root: str | Path) -> tuple[nn.Parameters, TrainingLog]:
    """Continue from pretrained weights with a re-initialized final fc layer.

    Unless config.lr_multipliers overrides them, transferred layers run at
    FINETUNE_MULTIPLIER and the new head at 1.0.
    """
    from .nn.network import _param_shapes

    shapes = _param_shapes(net)
    head = max(shapes)
    for i, (w_shape, _) in shapes.items():
        if i == head:
            continue
        if (i not in pretrained.weights
                or pretrained.weights[i].shape != w_shape
                or pretrained.biases[i].shape != (w_shape[0],)):
            raise ShapeError(
                f"pretrained weights for layer {i} do not match the network"
            )

    params = pretrained.copy()
    w_shape, fan_in = shapes[head]
    rng = np.random.default_rng(derive_seed(STREAM_INIT, config.seed, head))
    params.weights[head] = rng.normal(0.0, np.sqrt(2.0 / fan_in), w_shape).astype(np.float32)
    params.biases[head] = np.zeros(w_shape[0], dtype=np.float32)
    params.vel_w[head] = np.zeros_like(params.weights[head])
    params.vel_b[head] = np.zeros_like(params.biases[head])

    multipliers = config.lr_multipliers
    if multipliers is None:
        multipliers = {i: FINETUNE_MULTIPLIER for i in shapes if i != head}
        multipliers[head] = 1.0
    config = replace(config, lr_multipliers=multipliers, mode=FINETUNE)

    train_set, test_set = datasets
    X_train, y_train, _ = dataset_tensors(train_set, net, image_root)
    X_test, y_test, _ = dataset_tensors(test_set, net, image_root)
    return _train_on_arrays(net, params, X_train, y_train, X_test, y_test, config)


def evaluate(net: nn.NetworkSpec, params: nn.Parameters, dataset: LabeledDataset,
             image_root: str | Path) -> Metrics:
    """Inference-mode metrics over a labeled dataset; accuracy is correct/N."""
    X, y, _ = dataset_tensors(dataset, net, image_root)
    preds = []
    for start in range(0, X.shape[0], _EVAL_BATCH):
        logits, _ = nn.forward(net, params, X[start:start + _EVAL_BATCH], mode=nn.INFER)
        preds.extend(logits.argmax(axis=1).tolist())
    return compute_metrics(preds, y.tolist())


def rank_by_aesthetics(net: nn.NetworkSpec, params: nn.Parameters,
                       photos: Sequence[PhotoRecord],
                       image_root: str | Path) -> list[tuple[str, float]]:
    """Photos ordered by the positive-class probability p1, best first.

    Ties (identical p1) break by photo_id ascending.
    """
    from .nn.layers import softmax_probabilities

    if not photos:
        raise ValueError("cannot rank an empty photo list")
    X = np.stack([load_photo_tensor(r, net, image_root) for r in photos])
    p1s: list[float] = []
    for start in range(0, X.shape[0], _EVAL_BATCH):
        logits, _ = nn.forward(net, params, X[start:start + _EVAL_BATCH], mode=nn.INFER)
        p1s.extend(softmax_probabilities(logits)[:, 1].tolist())
    ranked = sorted(zip((r.photo_id for r in photos), p1s), key=lambda t: (-t[1], t[0]))
    return ranked


def export_learning_curves(log: TrainingLog, path: str | Path) -> None:
    if not log.rows:
        raise ValueError("cannot export an empty training log")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "train_loss", "test_loss", "test_accuracy"])
        for row in log.rows:
            writer.writerow([row.iteration, repr(row.train_loss),
                             repr(row.test_loss), repr(row.test_accuracy)])


def parse_learning_curves(path: str | Path) -> TrainingLog:
    log = TrainingLog()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["iteration", "train_loss", "test_loss", "test_accuracy"]:
            raise ValueError(f"unexpected learning-curve header: {header}")
        for row in reader:
            log.append(LogRow(int(row[0]), float(row[1]), float(row[2]), float(row[3])))
    return log


def dominant_hue_label(image: Image) -> int:
    """Proxy pretraining label: bucket of the mean color's hue (label-free)."""
    mean_rgb = image.to_array().reshape(-1, 3).mean(axis=0) / 255.0
    hue, _, _ = colorsys.rgb_to_hsv(*mean_rgb)
    return 1 if hue >= 0.5 else 0


def proxy_pretrain(net: nn.NetworkSpec, records: Sequence[PhotoRecord],
                   config: TrainConfig,
                   image_root: str | Path) -> tuple[nn.Parameters, TrainingLog]:
    """Pretrain on the dominant-hue task; labels come from pixels alone.

    Stands in for large-scale pretrained weights so the fine-tuning path can
    exercise per-layer learning rates end to end.
    """
    if not records:
        raise ValueError("no records to pretrain on")
    xs, ys = [], []
    for record in records:
        tensor = load_photo_tensor(record, net, image_root)
        path = Path(image_root) / record.image_path
        ys.append(dominant_hue_label(decode_ppm(path.read_bytes())))
        xs.append(tensor)
    X = np.stack(xs)
    y = np.array(ys, dtype=np.intp)
    params = nn.init_params(net, seed=config.seed)
    return _train_on_arrays(net, params, X, y, X, y, config)
