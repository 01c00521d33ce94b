"""Dataset splitting, the SGD training loop, and test-set evaluation.

Training iterates seeded-shuffled mini-batches, averages per-sample
gradients over each batch, and applies one plain SGD step per batch.
The per-epoch mean sample loss and wall time feed the learning-curve and
timing reports.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import Dataset, one_hot
from .layers import TRAIN, LayerState, mse_loss
from .network import Network, network_backward, network_forward, predict


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    learning_rate: float = 1.0
    batch_size: int = 10
    dropout_rate: float = 0.5
    seed: int = 42
    split_fraction: float = 0.9

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout rate must be in [0,1)")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError("split fraction must be in (0,1)")


@dataclass
class TrainingReport:
    per_epoch_error: list
    per_epoch_seconds: list
    total_seconds: float
    avg_seconds_per_epoch: float
    final_train_error: float


@dataclass
class EvalReport:
    accuracy_percent: float
    confusion: np.ndarray
    sample_count: int


def split_dataset(ds: Dataset, train_fraction: float, seed: int):
    """Stratified split: per populated class, shuffle and take
    round-half-up(n * fraction) samples for training."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must be in (0,1), got {train_fraction}")
    by_class: dict[int, list[int]] = {}
    for i, s in enumerate(ds.samples):
        by_class.setdefault(s.class_index, []).append(i)
    for c, idxs in sorted(by_class.items()):
        if len(idxs) < 2:
            raise ValueError(f"class {c} has {len(idxs)} sample(s); need >= 2")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for c in sorted(by_class):
        idxs = np.array(by_class[c])
        rng.shuffle(idxs)
        n_train = int(np.floor(len(idxs) * train_fraction + 0.5))
        train_idx.extend(idxs[:n_train])
        test_idx.extend(idxs[n_train:])
    train = Dataset(samples=[ds.samples[i] for i in train_idx], labels=ds.labels)
    test = Dataset(samples=[ds.samples[i] for i in test_idx], labels=ds.labels)
    return train, test


def sgd_update(net: Network, grads: list, learning_rate: float) -> Network:
    """Elementwise w <- w - lr*g over every weight and bias; returns a new net."""
    states = []
    for state, grad in zip(net.states, grads):
        if state is None:
            states.append(None)
            continue
        if (
            grad is None
            or grad.weights.shape != state.weights.shape
            or grad.biases.shape != state.biases.shape
        ):
            raise ValueError("gradient shapes do not match network state")
        states.append(
            LayerState(
                weights=state.weights - learning_rate * grad.weights,
                biases=state.biases - learning_rate * grad.biases,
            )
        )
    return Network(config=net.config, states=states)


def _zero_like(states: list) -> list:
    return [
        None if s is None else LayerState(np.zeros_like(s.weights),
                                          np.zeros_like(s.biases))
        for s in states
    ]


def train(net: Network, train_set: Dataset, config: TrainConfig):
    """Run the SGD loop; returns the trained network and a TrainingReport."""
    n = len(train_set)
    if n == 0:
        raise ValueError("training set is empty")
    if config.batch_size > n:
        raise ValueError(f"batch size {config.batch_size} exceeds dataset size {n}")
    classes = net.config.class_count
    targets = [one_hot(s.class_index, classes) for s in train_set.samples]
    rng = np.random.default_rng(config.seed)

    per_epoch_error = []
    per_epoch_seconds = []
    loop_start = time.perf_counter()
    for _ in range(config.epochs):
        epoch_start = time.perf_counter()
        order = rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, config.batch_size):
            batch = order[lo : lo + config.batch_size]
            acc = _zero_like(net.states)
            for i in batch:
                scores, traces = network_forward(
                    net, train_set.samples[i].image, mode=TRAIN, rng=rng
                )
                loss, _ = mse_loss(scores, targets[i])
                epoch_loss += loss
                for a, g in zip(acc, network_backward(net, traces, targets[i])):
                    if a is not None:
                        a.weights += g.weights
                        a.biases += g.biases
            inv = 1.0 / len(batch)
            for a in acc:
                if a is not None:
                    a.weights *= inv
                    a.biases *= inv
            net = sgd_update(net, acc, config.learning_rate)
        per_epoch_error.append(epoch_loss / n)
        per_epoch_seconds.append(time.perf_counter() - epoch_start)
    total = time.perf_counter() - loop_start

    report = TrainingReport(
        per_epoch_error=per_epoch_error,
        per_epoch_seconds=per_epoch_seconds,
        total_seconds=total,
        avg_seconds_per_epoch=total / config.epochs,
        final_train_error=per_epoch_error[-1],
    )
    return net, report


def evaluate(net: Network, test_set: Dataset) -> EvalReport:
    """Predict every sample; confusion rows are true classes, columns predicted."""
    if len(test_set) == 0:
        raise ValueError("test set is empty")
    k = net.config.class_count
    confusion = np.zeros((k, k), dtype=np.int64)
    for s in test_set.samples:
        predicted, _ = predict(net, s.image)
        confusion[s.class_index, predicted] += 1
    count = len(test_set)
    accuracy = 100.0 * float(np.trace(confusion)) / count
    return EvalReport(
        accuracy_percent=accuracy, confusion=confusion, sample_count=count
    )
