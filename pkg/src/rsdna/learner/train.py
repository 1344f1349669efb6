"""Deterministic mini-batch training of the encoder/decoder pair."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import TrainingError
from .losses import LossWeights, MaskSpec, SurrogateConfig, evaluate_loss, gradient
from .model import ModelConfig, ModelParameters, init_parameters, symbols_to_bits


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 2
    batch_size: int = 32
    seed: int = 0
    optimizer: str = "momentum"  # or "adam"
    momentum: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # rescale each mini-batch gradient to at most this global L2 norm (None = off)
    clip_norm: float | None = 1.0
    straight_through: bool = True
    surrogate: SurrogateConfig = field(default_factory=lambda: SurrogateConfig(max_stem=6))

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if self.optimizer not in ("momentum", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainResult:
    params: ModelParameters
    loss_trace: list[float]
    initial_loss: float
    final_loss: float


class _Momentum:
    def __init__(self, cfg: TrainConfig, params: ModelParameters):
        self.cfg = cfg
        self.v = {k: np.zeros_like(a) for k, a in params.arrays.items()}

    def step(self, params, grads):
        lr, mu = self.cfg.learning_rate, self.cfg.momentum
        for k, g in grads.items():
            self.v[k] = mu * self.v[k] - lr * g
            params.arrays[k] += self.v[k]


class _Adam:
    def __init__(self, cfg: TrainConfig, params: ModelParameters):
        self.cfg = cfg
        self.m = {k: np.zeros_like(a) for k, a in params.arrays.items()}
        self.v = {k: np.zeros_like(a) for k, a in params.arrays.items()}
        self.t = 0

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        b1, b2 = c.momentum, c.beta2
        lr = c.learning_rate * math.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
        for k, g in grads.items():
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            params.arrays[k] -= lr * self.m[k] / (np.sqrt(self.v[k]) + c.eps)


def corpus_loss(params: ModelParameters, rows: np.ndarray, weights: LossWeights, mask: MaskSpec,
                cfg: TrainConfig) -> float:
    """Row-weighted mean loss over the whole corpus, evaluated in batches."""
    total = 0.0
    for lo in range(0, len(rows), cfg.batch_size):
        batch = symbols_to_bits(rows[lo : lo + cfg.batch_size])
        total += evaluate_loss(params, batch, weights, mask, cfg.surrogate, cfg.straight_through).total * len(batch)
    return total / len(rows)


def train(rows: np.ndarray, model_config: ModelConfig = ModelConfig(), train_config: TrainConfig = TrainConfig(),
          weights: LossWeights = LossWeights(), mask: MaskSpec = MaskSpec(),
          params: ModelParameters | None = None,
          progress: Callable[[int, float, ModelParameters], None] | None = None) -> TrainResult:
    """Fit the model to RS-coded symbol rows ``(R, tokens_in)``.

    The run is fully determined by the seeds in both configs.  ``loss_trace``
    holds the mean mini-batch loss of every epoch.
    """
    rows = np.asarray(rows, dtype=np.uint8)
    if rows.ndim != 2 or len(rows) == 0:
        raise ValueError("corpus must be a non-empty (rows, tokens) matrix")
    if rows.shape[1] != model_config.tokens_in:
        raise ValueError(f"rows have {rows.shape[1]} symbols, model expects {model_config.tokens_in}")
    params = init_parameters(model_config) if params is None else params.copy()
    cfg = train_config
    opt = (_Adam if cfg.optimizer == "adam" else _Momentum)(cfg, params)
    rng = np.random.default_rng(cfg.seed)
    initial = corpus_loss(params, rows, weights, mask, cfg)
    trace: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(rows))
        acc = 0.0
        for lo in range(0, len(rows), cfg.batch_size):
            batch = symbols_to_bits(rows[order[lo : lo + cfg.batch_size]])
            parts, grads = gradient(params, batch, weights, mask, cfg.surrogate, cfg.straight_through)
            if not math.isfinite(parts.total):
                raise TrainingError(epoch, parts.total)
            if cfg.clip_norm is not None:
                norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
                if norm > cfg.clip_norm:
                    grads = {k: g * (cfg.clip_norm / norm) for k, g in grads.items()}
            opt.step(params, grads)
            acc += parts.total * len(batch)
        trace.append(acc / len(rows))
        if not all(np.all(np.isfinite(a)) for a in params.arrays.values()):
            raise TrainingError(epoch, float("nan"))
        if progress:
            progress(epoch, trace[-1], params)
    final = corpus_loss(params, rows, weights, mask, cfg) if cfg.epochs else initial
    return TrainResult(params, trace, initial, final)
