"""Pair-difference training: SGD with momentum, step-decayed learning rate,
early stopping on validation MSE."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import Network, to_internal


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    decay_factor: float = 0.5
    decay_every: int = 10
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 10
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.decay_factor <= 0:
            raise ValueError("rates must be positive")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")

    def rate_at(self, epoch: int) -> float:
        """Learning rate during ``epoch`` (0-based) under the step-decay schedule."""
        return self.learning_rate * self.decay_factor ** (epoch // self.decay_every)


@dataclass(frozen=True)
class TrainingPair:
    """Two images of equivalent circuits and their measured noise difference."""

    image_a: np.ndarray
    image_b: np.ndarray
    delta: float
    group: int


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"training loss became non-finite at epoch {epoch}")
        self.epoch = epoch


class _PairTensor:
    """Pairs stacked into internal-layout arrays for fast batch slicing."""

    def __init__(self, pairs):
        if not pairs:
            raise ValueError("empty pair set")
        self.a = to_internal(np.stack([p.image_a for p in pairs]))
        self.b = to_internal(np.stack([p.image_b for p in pairs]))
        self.y = np.array([p.delta for p in pairs], dtype=float)

    def __len__(self):
        return len(self.y)


def _batch_loss_and_grads(net: Network, xa, xb, y):
    scores, caches = net.forward_batch(np.concatenate([xa, xb]), want_cache=True)
    m = len(y)
    diff = scores[:m] - scores[m:]
    err = diff - y
    loss = float(np.mean(err * err))
    g = 2.0 * err / m
    grads, _ = net.backward_batch(caches, np.concatenate([g, -g]))
    return loss, grads


def _mse(net: Network, data: _PairTensor, chunk: int = 256) -> float:
    total = 0.0
    for lo in range(0, len(data), chunk):
        xa = data.a[lo : lo + chunk]
        xb = data.b[lo : lo + chunk]
        diff = net.forward_batch(xa) - net.forward_batch(xb)
        err = diff - data.y[lo : lo + chunk]
        total += float(np.sum(err * err))
    return total / len(data)


def train(net: Network, pairs, val_pairs, cfg: TrainConfig):
    """Minimize pair-difference MSE; return (best network, per-epoch history).

    The network with the best validation MSE is restored before returning.
    Training stops once validation MSE has not improved for ``cfg.patience``
    consecutive epochs, or at ``cfg.max_epochs``.
    """
    data = _PairTensor(pairs)
    val = _PairTensor(val_pairs)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    velocity = [np.zeros_like(p) for p in net.params()]
    params = net.params()

    best_val = np.inf
    best_weights = net.copy_weights()
    stale = 0
    history = []

    for epoch in range(cfg.max_epochs):
        lr = cfg.rate_at(epoch)
        order = rng.permutation(len(data))
        epoch_loss = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, grads = _batch_loss_and_grads(
                net, data.a[idx], data.b[idx], data.y[idx]
            )
            epoch_loss += loss * len(idx)
            for p, v, g in zip(params, velocity, grads):
                v *= cfg.momentum
                v -= lr * g
                p += v
        epoch_loss /= len(data)
        if not np.isfinite(epoch_loss):
            raise TrainingDiverged(epoch)
        val_loss = _mse(net, val)
        history.append(
            {"epoch": epoch, "train_mse": epoch_loss, "val_mse": val_loss, "lr": lr}
        )
        # improvements below 0.01% relative are noise, not progress
        if val_loss < best_val * (1.0 - 1e-4):
            best_val = val_loss
            best_weights = net.copy_weights()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    net.set_weights(best_weights)
    return net, history
