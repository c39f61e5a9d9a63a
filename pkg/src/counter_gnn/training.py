"""Mini-batch training with adaptive moment estimation.

Deterministic for a fixed seed in serial mode: parameter init, epoch
shuffles, and dropout masks all derive from the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, TrainingDiverged
from .graphs import GraphDataset, GraphSample
from .model import ModelParams, backward, batch_loss, forward, pack, EPS_PROB


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    batch_size: int = 32
    dropout_rate: float = 0.5
    seed: int = 0
    dense_width: int = 64

    def __post_init__(self):
        if self.epochs < 1:
            raise DataError("epochs must be at least 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise DataError("dropout_rate must be in [0, 1)")
        if self.batch_size < 1 or self.learning_rate <= 0:
            raise DataError("batch_size and learning_rate must be positive")


@dataclass
class TrainReport:
    epoch_losses: list[float]
    params: ModelParams
    seed: int
    config: TrainConfig


class _Adam:
    """Adam with the standard decay pair (0.9, 0.999) and eps 1e-8."""

    def __init__(self, arrays: list[np.ndarray], lr: float):
        self.lr = lr
        self.beta1 = 0.9
        self.beta2 = 0.999
        self.eps = 1e-8
        self.t = 0
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]

    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            a -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def train(
    dataset: GraphDataset | list[GraphSample],
    config: TrainConfig | None = None,
    initial_params: ModelParams | None = None,
) -> TrainReport:
    """Train a model on the given samples.

    With initial_params the run continues from those weights (fresh
    optimizer state); otherwise a seeded fresh model is initialised.
    """
    config = config or TrainConfig()
    samples = dataset.samples if isinstance(dataset, GraphDataset) else list(dataset)
    if not samples:
        raise DataError("training set is empty")
    width = samples[0].feature_width
    if initial_params is not None:
        if initial_params.n_node_features != width:
            raise DataError("initial_params feature width does not match dataset")
        if initial_params.dense_width != config.dense_width:
            raise DataError("initial_params dense width does not match config")
        params = initial_params.copy()
    else:
        params = ModelParams.init(width, config.dense_width, seed=config.seed)
    adam = _Adam(params.arrays(), config.learning_rate)
    rng = np.random.default_rng(config.seed)
    n = len(samples)

    epoch_losses: list[float] = []
    for _epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        count = 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = pack([samples[i] for i in idx])
            mask = None
            if config.dropout_rate > 0.0:
                keep = rng.random((batch.n_graphs, config.dense_width)) >= config.dropout_rate
                mask = keep / (1.0 - config.dropout_rate)
            probs, cache = forward(params, batch, mask)
            l = batch_loss(probs, batch.labels)
            inside = (probs > EPS_PROB) & (probs < 1.0 - EPS_PROB)
            d_logit = np.where(inside, probs - batch.labels, 0.0) / batch.n_graphs
            grads = backward(params, batch, cache, d_logit)
            adam.step(params.arrays(), grads.arrays())
            total += l * len(idx)
            count += len(idx)
        epoch_loss = total / count
        if math.isnan(epoch_loss):
            raise TrainingDiverged(f"loss is NaN at epoch {_epoch}")
        epoch_losses.append(epoch_loss)

    return TrainReport(
        epoch_losses=epoch_losses, params=params, seed=config.seed, config=config
    )
