"""SGD training loop for the hover-feasibility surrogate.

Sequences stay as tokens until batch time: each shuffled batch is embedded
on the fly (padded to its own longest member), so memory stays proportional
to one batch rather than the whole corpus.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .codec import Token, TokenEmbedder
from .errors import ConfigError
from .surrogate import SurrogateModel


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    optimizer: str = "sgd"
    epochs: int = 2500
    batch_size: int = 128
    shuffle_seed: int = 0
    init_seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.learning_rate, (int, float)) and self.learning_rate > 0):
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if self.optimizer != "sgd":
            raise ConfigError(f"unsupported optimizer {self.optimizer!r}")
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise ConfigError(f"epochs must be a positive integer, got {self.epochs!r}")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ConfigError(f"batch_size must be a positive integer, got {self.batch_size!r}")
        for name in ("shuffle_seed", "init_seed"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ConfigError(f"{name} must be a non-negative integer, got {value!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return replace(cls(), **obj)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


def train(model: SurrogateModel, embedder: TokenEmbedder,
          sequences: list[list[Token]], labels, config: TrainConfig,
          log=None) -> list[EpochStats]:
    """Run plain SGD in place on `model`; returns per-epoch loss/accuracy.

    Epoch loss is the example-weighted mean of the pre-update batch losses,
    and accuracy thresholds the same pre-update logits at zero
    (probability 0.5).
    """
    n = len(sequences)
    if n == 0:
        raise ConfigError("cannot train on an empty dataset")
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (n,):
        raise ConfigError(f"labels shape {y.shape} does not match {n} sequences")

    history: list[EpochStats] = []
    lr = config.learning_rate
    for epoch in range(config.epochs):
        seed = np.random.SeedSequence((config.shuffle_seed, epoch))
        perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            data, mask = embedder.embed_batch([sequences[i] for i in idx])
            batch_y = y[idx]
            loss, grads = model.loss_and_gradients(data, mask, batch_y)
            z = model.last_logits
            correct += int(((z >= 0.0) == (batch_y == 1.0)).sum())
            loss_sum += loss * len(idx)
            for name, param in model.parameters().items():
                param -= lr * grads[name]
        stats = EpochStats(epoch=epoch, loss=loss_sum / n, accuracy=correct / n)
        history.append(stats)
        if log is not None:
            log(stats)
    return history
