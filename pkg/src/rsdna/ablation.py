"""Desk-scale ablation of the learned pipeline: full model, no mask, no BC loss."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel_eval import evaluate_roundtrip, package_metrics
from .gf_rs import RsConfig
from .learner.losses import LossWeights, MaskSpec
from .learner.model import ModelConfig, ModelParameters
from .learner.train import TrainConfig, TrainResult, train
from .pipeline import PipelineConfig, encode, pack_file

VARIANTS = ("full", "no_mask", "no_bc")


def corpus_rows(data: bytes, rs: RsConfig = RsConfig(), rows_per_block: int = 32) -> np.ndarray:
    """RS codewords ``(rows, n)`` of ``data`` exactly as the pipeline packs them."""
    words, _ = pack_file(data, PipelineConfig(rs, rows_per_block))
    return words.reshape(-1, rs.n)


@dataclass
class VariantResult:
    variant: str
    reconstruction_rate: float
    block_failure_rate: float
    gc_ave: float
    initial_loss: float
    final_loss: float
    training: TrainResult = field(repr=False)

    @property
    def model(self) -> ModelParameters:
        return self.training.params


def variant_settings(variant: str, model_config: ModelConfig, weights: LossWeights) -> tuple[MaskSpec, LossWeights]:
    """Training mask (also the decode-time erasure set) and loss weights of a variant."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    # same positions as pipeline.learned_mask for a model with this config
    t_in = model_config.tokens_in
    full = MaskSpec.tail(t_in - model_config.tokens_out + model_config.free_slots, t_in)
    if variant == "no_mask":
        return MaskSpec.none(), weights
    if variant == "no_bc":
        return full, replace(weights, alpha=0.0)
    return full, weights


def run_variant(data: bytes, variant: str, model_config: ModelConfig = ModelConfig(),
                train_config: TrainConfig = TrainConfig(), weights: LossWeights = LossWeights(),
                rs: RsConfig = RsConfig(), rows_per_block: int = 32) -> VariantResult:
    """Train one variant on ``data`` and score the noiseless round trip of the same data."""
    mask, w = variant_settings(variant, model_config, weights)
    result = train(corpus_rows(data, rs, rows_per_block), model_config, train_config, w, mask)
    config = PipelineConfig(rs, rows_per_block, "learned", mask, result.params)
    rec = evaluate_roundtrip(data, config)
    stats = package_metrics(encode(data, config), ("gc",))
    return VariantResult(variant, rec.reconstruction_rate, rec.block_failure_rate, stats.gc_ave,
                         result.initial_loss, result.final_loss, result)


def run_ablation(data: bytes, variants=VARIANTS, **kwargs) -> dict[str, VariantResult]:
    return {v: run_variant(data, v, **kwargs) for v in variants}


def ablation_text(results: dict[str, VariantResult]) -> str:
    lines = ["variant,reconstruction_rate,block_failure_rate,gc_ave,initial_loss,final_loss"]
    for r in results.values():
        lines.append(f"{r.variant},{r.reconstruction_rate:.6f},{r.block_failure_rate:.6f},{r.gc_ave:.4f},"
                     f"{r.initial_loss:.6g},{r.final_loss:.6g}")
    return "\n".join(lines) + "\n"
