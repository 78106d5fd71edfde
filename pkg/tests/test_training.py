"""SGD loop: history bookkeeping, determinism, divergence, callbacks."""

import numpy as np
import pytest

from uavforge.codec import FloatStats, Token, TokenEmbedder, flatten
from uavforge.errors import ConfigError, TrainingDivergedError
from uavforge.generator import GeneratorConfig, sample_design
from uavforge.physics import label_design
from uavforge.surrogate import ModelConfig, SurrogateModel, save_checkpoint
from uavforge.training import EpochStats, TrainConfig, train

import io

TINY = ModelConfig(d_model=8, n_layers=1, n_heads=2, d_ff=16,
                   input_dim=741, max_seq_len=64)


@pytest.fixture(scope="module")
def toy(catalog):
    """16 short generated designs, half hovering, plus their embedder."""
    config = GeneratorConfig(seed=11)
    pos, neg = [], []
    index = 0
    while len(pos) < 8 or len(neg) < 8:
        tree = sample_design(config, index, catalog)
        index += 1
        tokens = flatten(tree)
        if len(tokens) > 64:
            continue
        label, _ = label_design(tree, catalog)
        (pos if label else neg).append(tokens)
    seqs = pos[:8] + neg[:8]
    labels = np.array([1.0] * 8 + [0.0] * 8)
    stats = FloatStats.from_sequences(seqs)
    return seqs, labels, TokenEmbedder(catalog, stats), stats


def fresh_model(stats, catalog, seed=0):
    return SurrogateModel(TINY, float_stats=stats,
                          catalog_hash=catalog.content_hash, init_seed=seed)


def test_history_length_equals_epochs(toy, catalog):
    seqs, labels, embedder, stats = toy
    config = TrainConfig(epochs=3, batch_size=8, learning_rate=0.001)
    history = train(fresh_model(stats, catalog), embedder, seqs, labels, config)
    assert [h.epoch for h in history] == [0, 1, 2]
    assert all(isinstance(h, EpochStats) for h in history)
    assert all(0.0 <= h.accuracy <= 1.0 for h in history)
    assert all(h.loss > 0 for h in history)


def test_training_reduces_loss(toy, catalog):
    seqs, labels, embedder, stats = toy
    config = TrainConfig(epochs=150, batch_size=4, learning_rate=0.01)
    history = train(fresh_model(stats, catalog), embedder, seqs, labels, config)
    assert history[-1].loss < history[0].loss * 0.7
    assert history[-1].accuracy >= 0.75


def test_identical_seeds_give_bitwise_identical_runs(toy, catalog):
    seqs, labels, embedder, stats = toy
    config = TrainConfig(epochs=5, batch_size=4)
    out = []
    for _ in range(2):
        model = fresh_model(stats, catalog, seed=1)
        history = train(model, embedder, seqs, labels, config)
        sink = io.BytesIO()
        save_checkpoint(model, sink)
        out.append((history, sink.getvalue()))
    assert out[0][0] == out[1][0]
    assert out[0][1] == out[1][1]


def test_shuffle_seed_changes_the_trajectory(toy, catalog):
    seqs, labels, embedder, stats = toy
    a = train(fresh_model(stats, catalog), embedder, seqs, labels,
              TrainConfig(epochs=3, batch_size=4, shuffle_seed=0))
    b = train(fresh_model(stats, catalog), embedder, seqs, labels,
              TrainConfig(epochs=3, batch_size=4, shuffle_seed=9))
    assert [h.loss for h in a] != [h.loss for h in b]


def test_oversized_batch_is_one_full_batch(toy, catalog):
    seqs, labels, embedder, stats = toy
    config = TrainConfig(epochs=2, batch_size=1000)
    history = train(fresh_model(stats, catalog), embedder, seqs, labels, config)
    assert len(history) == 2


def test_huge_learning_rate_diverges(toy, catalog):
    seqs, labels, embedder, stats = toy
    config = TrainConfig(epochs=50, batch_size=16, learning_rate=1e12)
    with pytest.raises(TrainingDivergedError):
        with np.errstate(all="ignore"):
            train(fresh_model(stats, catalog), embedder, seqs, labels, config)


def test_log_callback_sees_every_epoch_and_can_stop(toy, catalog):
    seqs, labels, embedder, stats = toy
    seen = []
    train(fresh_model(stats, catalog), embedder, seqs, labels,
          TrainConfig(epochs=4, batch_size=8), log=seen.append)
    assert [s.epoch for s in seen] == [0, 1, 2, 3]

    class Stop(Exception):
        pass

    def stopper(stats):
        if stats.epoch == 1:
            raise Stop()

    with pytest.raises(Stop):
        train(fresh_model(stats, catalog), embedder, seqs, labels,
              TrainConfig(epochs=100, batch_size=8), log=stopper)


def test_empty_dataset_and_label_mismatch_are_config_errors(toy, catalog):
    seqs, labels, embedder, stats = toy
    with pytest.raises(ConfigError, match="empty"):
        train(fresh_model(stats, catalog), embedder, [], np.array([]), TrainConfig())
    with pytest.raises(ConfigError, match="labels"):
        train(fresh_model(stats, catalog), embedder, seqs, labels[:-1], TrainConfig())


def test_config_validation_and_round_trip():
    assert TrainConfig.from_dict(TrainConfig().to_dict()) == TrainConfig()
    assert TrainConfig().learning_rate == 0.01
    assert TrainConfig().epochs == 2500
    assert TrainConfig().batch_size == 128
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(optimizer="adam")
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(shuffle_seed=-1)
    with pytest.raises(ConfigError, match="unknown"):
        TrainConfig.from_dict({"momentum": 0.9})
