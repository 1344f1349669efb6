from .losses import (LossWeights, MaskSpec, SurrogateConfig, bc_loss, bio_terms, gradient, mask_mse,
                     nibble_distributions, soft_gc, soft_hairpin, total_loss)
from .model import (ModelConfig, ModelParameters, attention, bits_to_symbols, decode_block, encode_block,
                    init_parameters, quantize, symbols_to_bits, zero_parameters)
from .serialize import MODEL_FORMAT_VERSION, load_model, model_bytes, model_digest, parse_model, save_model
from .train import TrainConfig, TrainResult, train

__all__ = [
    "LossWeights", "MaskSpec", "SurrogateConfig", "bc_loss", "bio_terms", "gradient", "mask_mse",
    "nibble_distributions", "soft_gc", "soft_hairpin", "total_loss",
    "ModelConfig", "ModelParameters", "attention", "bits_to_symbols", "decode_block", "encode_block",
    "init_parameters", "quantize", "symbols_to_bits", "zero_parameters",
    "MODEL_FORMAT_VERSION", "load_model", "model_bytes", "model_digest", "parse_model", "save_model",
    "TrainConfig", "TrainResult", "train",
]
