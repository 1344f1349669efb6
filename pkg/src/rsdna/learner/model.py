"""Attention encoder / decoder with a learned compression across positions.

Both towers share one layout::

    bits (B, T_in, 8) -> +-1 -> embed (8 -> D) + positional table
      -> post-LN transformer layers (MHA, then GELU feed-forward)
      -> linear map across positions (T_in -> T_out) + per-slot bias
      -> head (D -> 8) -> sigmoid

The encoder maps 64 symbol tokens to 56, the decoder maps 56 back to 64.
Everything is plain numpy in float64; every forward has a matching backward
that returns exact gradients, so no autodiff framework is involved.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

LN_EPS = 1e-5
_GELU_C = np.sqrt(2.0 / np.pi)
_GELU_K = 0.044715
# head gain of the structured init; copied bits start with |logit| near 20,
# deep in sigmoid saturation
HEAD_GAIN = 10.0


@dataclass(frozen=True)
class ModelConfig:
    tokens_in: int = 64
    hidden_dim: int = 32
    tokens_out: int = 56
    heads: int = 4
    layers: int = 2
    symbol_bits: int = 8
    ffn_dim: int = 64
    seed: int = 0
    # "structured" starts close to a position-preserving copy; "random" does not
    init: str = "structured"
    # trailing representation slots the structured init leaves free (not copies)
    free_slots: int = 4

    def __post_init__(self):
        for name in ("tokens_in", "hidden_dim", "tokens_out", "heads", "symbol_bits", "ffn_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.layers < 0:
            raise ValueError("layers must be >= 0")
        if self.hidden_dim % self.heads:
            raise ValueError("hidden_dim must be divisible by heads")
        if self.tokens_out >= self.tokens_in:
            raise ValueError("tokens_out must be smaller than tokens_in")
        if self.init not in ("structured", "random"):
            raise ValueError(f"unknown init scheme {self.init!r}")
        if not 0 <= self.free_slots <= self.tokens_out:
            raise ValueError("free_slots must lie in [0, tokens_out]")

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.heads

    def to_dict(self) -> dict:
        return asdict(self)


def _tower_shapes(prefix: str, cfg: ModelConfig, t_in: int, t_out: int, mix: str) -> list[tuple[str, tuple]]:
    D, F, S = cfg.hidden_dim, cfg.ffn_dim, cfg.symbol_bits
    shapes = [
        (f"{prefix}.embed.W", (S, D)),
        (f"{prefix}.embed.b", (D,)),
        (f"{prefix}.pos", (t_in, D)),
    ]
    for i in range(cfg.layers):
        p = f"{prefix}.layer{i}"
        shapes += [
            (f"{p}.Wq", (D, D)), (f"{p}.Wk", (D, D)), (f"{p}.Wv", (D, D)),
            (f"{p}.Wo", (D, D)), (f"{p}.bo", (D,)),
            (f"{p}.ln1.g", (D,)), (f"{p}.ln1.b", (D,)),
            (f"{p}.W1", (D, F)), (f"{p}.b1", (F,)),
            (f"{p}.W2", (F, D)), (f"{p}.b2", (D,)),
            (f"{p}.ln2.g", (D,)), (f"{p}.ln2.b", (D,)),
        ]
    shapes += [
        (f"{prefix}.{mix}.W", (t_out, t_in)),
        (f"{prefix}.{mix}.b", (t_out, D)),
        (f"{prefix}.head.W", (D, S)),
        (f"{prefix}.head.b", (S,)),
    ]
    return shapes


def parameter_shapes(cfg: ModelConfig) -> list[tuple[str, tuple]]:
    """(name, shape) of every parameter, in the declared serialization order."""
    return (_tower_shapes("enc", cfg, cfg.tokens_in, cfg.tokens_out, "compress")
            + _tower_shapes("dec", cfg, cfg.tokens_out, cfg.tokens_in, "expand"))


@dataclass
class ModelParameters:
    config: ModelConfig
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        expected = parameter_shapes(self.config)
        if [n for n, _ in expected] != list(self.arrays):
            raise ValueError("parameter names do not match the model configuration")
        for name, shape in expected:
            a = self.arrays[name]
            if a.shape != shape:
                raise ValueError(f"{name}: shape {a.shape}, expected {shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def copy(self) -> "ModelParameters":
        return ModelParameters(self.config, {k: v.copy() for k, v in self.arrays.items()})

    @property
    def size(self) -> int:
        return sum(a.size for a in self.arrays.values())


def zero_parameters(cfg: ModelConfig) -> ModelParameters:
    return ModelParameters(cfg, {n: np.zeros(s) for n, s in parameter_shapes(cfg)})


def init_parameters(cfg: ModelConfig) -> ModelParameters:
    rng = np.random.default_rng(cfg.seed)
    arrays = {}
    for name, shape in parameter_shapes(cfg):
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "g":
            arrays[name] = np.ones(shape)
        elif leaf in ("b", "bo", "b1", "b2"):
            arrays[name] = np.zeros(shape)
        elif leaf == "pos":
            arrays[name] = rng.normal(0.0, 0.02, shape)
        else:
            arrays[name] = rng.normal(0.0, 1.0 / np.sqrt(shape[0]), shape)
    if cfg.init == "structured":
        _structure(arrays, cfg, rng)
    return ModelParameters(cfg, arrays)


def _structure(arrays: dict, cfg: ModelConfig, rng) -> None:
    # Bits go into their own hidden channels, residual branches start small,
    # the position map starts as a truncated identity and the head reads the
    # bit channels back.  Training then starts from a near copy of each symbol.
    S, D = cfg.symbol_bits, cfg.hidden_dim
    for prefix, mix, t_in, t_out in (("enc", "compress", cfg.tokens_in, cfg.tokens_out),
                                     ("dec", "expand", cfg.tokens_out, cfg.tokens_in)):
        W = rng.normal(0.0, 0.05, (S, D))
        head = rng.normal(0.0, 0.05, (D, S))
        k = min(S, D)
        W[np.arange(k), np.arange(k)] = 1.0
        head[np.arange(k), np.arange(k)] = HEAD_GAIN
        arrays[f"{prefix}.embed.W"] = W
        arrays[f"{prefix}.head.W"] = head
        for i in range(cfg.layers):
            arrays[f"{prefix}.layer{i}.Wo"] *= 0.1
            arrays[f"{prefix}.layer{i}.W2"] *= 0.1
        copy = np.zeros((t_out, t_in))
        kept = cfg.tokens_out - cfg.free_slots
        copy[np.arange(kept), np.arange(kept)] = 1.0
        arrays[f"{prefix}.{mix}.W"] = copy + rng.normal(0.0, 0.01, (t_out, t_in))


# -- primitives --------------------------------------------------------------

def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def softmax(x, axis=-1):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def attention(Q, K, V, d_k: int):
    """softmax(Q K^T / sqrt(d_k)) V with the softmax taken along each row.

    Works on 2-D matrices or on stacks of them (leading batch axes).
    """
    Q, K, V = np.asarray(Q, float), np.asarray(K, float), np.asarray(V, float)
    if d_k <= 0:
        raise ValueError("d_k must be positive")
    if Q.shape[-1] != K.shape[-1] or K.shape[-2] != V.shape[-2]:
        raise ValueError(f"shape mismatch: Q{Q.shape} K{K.shape} V{V.shape}")
    return softmax(Q @ np.swapaxes(K, -1, -2) / np.sqrt(d_k)) @ V


def _layer_norm(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    rstd = 1.0 / np.sqrt((xc * xc).mean(-1, keepdims=True) + LN_EPS)
    xh = xc * rstd
    return xh * g + b, (xh, rstd)


def _layer_norm_back(dy, cache, g):
    xh, rstd = cache
    dg = (dy * xh).reshape(-1, xh.shape[-1]).sum(0)
    db = dy.reshape(-1, dy.shape[-1]).sum(0)
    dxh = dy * g
    dx = rstd * (dxh - dxh.mean(-1, keepdims=True) - xh * (dxh * xh).mean(-1, keepdims=True))
    return dx, dg, db


def _gelu(x):
    t = np.tanh(_GELU_C * (x + _GELU_K * x ** 3))
    return 0.5 * x * (1.0 + t), t


def _gelu_grad(x, t):
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * _GELU_C * (1.0 + 3 * _GELU_K * x * x)


def _split(x, heads):
    B, T, D = x.shape
    return x.reshape(B, T, heads, D // heads).transpose(0, 2, 1, 3)


def _merge(x):
    B, H, T, d = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, T, H * d)


def _flat_t(x, y):
    """x^T y with all leading axes folded into the contraction."""
    return x.reshape(-1, x.shape[-1]).T @ y.reshape(-1, y.shape[-1])


# -- transformer layer -------------------------------------------------------

def _layer_forward(h, P, p, heads):
    dk = h.shape[-1] // heads
    q, k, v = (_split(h @ P[f"{p}.{w}"], heads) for w in ("Wq", "Wk", "Wv"))
    a = softmax(q @ k.transpose(0, 1, 3, 2) / np.sqrt(dk))
    o = _merge(a @ v)
    att = o @ P[f"{p}.Wo"] + P[f"{p}.bo"]
    h1, ln1 = _layer_norm(h + att, P[f"{p}.ln1.g"], P[f"{p}.ln1.b"])
    z = h1 @ P[f"{p}.W1"] + P[f"{p}.b1"]
    f, t = _gelu(z)
    h2, ln2 = _layer_norm(h1 + f @ P[f"{p}.W2"] + P[f"{p}.b2"], P[f"{p}.ln2.g"], P[f"{p}.ln2.b"])
    return h2, (h, q, k, v, a, o, h1, ln1, z, f, t, ln2)


def _layer_backward(dh2, cache, P, p, heads, grads):
    h, q, k, v, a, o, h1, ln1, z, f, t, ln2 = cache
    dk = h.shape[-1] // heads
    ds2, grads[f"{p}.ln2.g"], grads[f"{p}.ln2.b"] = _layer_norm_back(dh2, ln2, P[f"{p}.ln2.g"])
    grads[f"{p}.W2"] = _flat_t(f, ds2)
    grads[f"{p}.b2"] = ds2.reshape(-1, ds2.shape[-1]).sum(0)
    dz = (ds2 @ P[f"{p}.W2"].T) * _gelu_grad(z, t)
    grads[f"{p}.W1"] = _flat_t(h1, dz)
    grads[f"{p}.b1"] = dz.reshape(-1, dz.shape[-1]).sum(0)
    dh1 = ds2 + dz @ P[f"{p}.W1"].T
    ds1, grads[f"{p}.ln1.g"], grads[f"{p}.ln1.b"] = _layer_norm_back(dh1, ln1, P[f"{p}.ln1.g"])
    grads[f"{p}.Wo"] = _flat_t(o, ds1)
    grads[f"{p}.bo"] = ds1.reshape(-1, ds1.shape[-1]).sum(0)
    do = _split(ds1 @ P[f"{p}.Wo"].T, heads)
    da = do @ v.transpose(0, 1, 3, 2)
    dv = a.transpose(0, 1, 3, 2) @ do
    dsc = a * (da - (da * a).sum(-1, keepdims=True)) / np.sqrt(dk)
    dq = dsc @ k
    dkk = dsc.transpose(0, 1, 3, 2) @ q
    dh = ds1
    for w, d in (("Wq", dq), ("Wk", dkk), ("Wv", dv)):
        dm = _merge(d)
        grads[f"{p}.{w}"] = _flat_t(h, dm)
        dh = dh + dm @ P[f"{p}.{w}"].T
    return dh


# -- towers ------------------------------------------------------------------

_TOWERS = {"enc": "compress", "dec": "expand"}


def tower_forward(params: ModelParameters, prefix: str, bits: np.ndarray, keep: bool = False):
    """Bit probabilities/values ``(B, T_in, S)`` -> output probabilities ``(B, T_out, S)``."""
    P, cfg, mix = params.arrays, params.config, _TOWERS[prefix]
    x = 2.0 * bits - 1.0
    h = x @ P[f"{prefix}.embed.W"] + P[f"{prefix}.embed.b"] + P[f"{prefix}.pos"]
    caches = []
    for i in range(cfg.layers):
        h, c = _layer_forward(h, P, f"{prefix}.layer{i}", cfg.heads)
        caches.append(c)
    c_tok = np.einsum("ot,btd->bod", P[f"{prefix}.{mix}.W"], h) + P[f"{prefix}.{mix}.b"]
    logits = c_tok @ P[f"{prefix}.head.W"] + P[f"{prefix}.head.b"]
    probs = sigmoid(logits)
    if not keep:
        return probs, None
    return probs, (x, caches, h, c_tok, probs)


def tower_backward(params: ModelParameters, prefix: str, dprobs: np.ndarray, cache, grads: dict):
    """Accumulate parameter gradients into ``grads``; return d(loss)/d(input bits)."""
    P, cfg, mix = params.arrays, params.config, _TOWERS[prefix]
    x, caches, h, c_tok, probs = cache
    dlogits = dprobs * probs * (1.0 - probs)
    grads[f"{prefix}.head.W"] = _flat_t(c_tok, dlogits)
    grads[f"{prefix}.head.b"] = dlogits.reshape(-1, dlogits.shape[-1]).sum(0)
    dc = dlogits @ P[f"{prefix}.head.W"].T
    grads[f"{prefix}.{mix}.W"] = np.einsum("bod,btd->ot", dc, h)
    grads[f"{prefix}.{mix}.b"] = dc.sum(0)
    dh = np.einsum("ot,bod->btd", P[f"{prefix}.{mix}.W"], dc)
    for i in reversed(range(cfg.layers)):
        dh = _layer_backward(dh, caches[i], P, f"{prefix}.layer{i}", cfg.heads, grads)
    grads[f"{prefix}.embed.W"] = _flat_t(x, dh)
    grads[f"{prefix}.embed.b"] = dh.reshape(-1, dh.shape[-1]).sum(0)
    grads[f"{prefix}.pos"] = dh.sum(0)
    return 2.0 * (dh @ P[f"{prefix}.embed.W"].T)


def _check_block(bits: np.ndarray, tokens: int, symbol_bits: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=float)
    if bits.ndim != 3 or bits.shape[1:] != (tokens, symbol_bits):
        raise ValueError(f"expected shape (rows, {tokens}, {symbol_bits}), got {bits.shape}")
    return bits


def encode_block(bits: np.ndarray, params: ModelParameters) -> np.ndarray:
    """Row bits ``(R, tokens_in, S)`` -> representation probabilities ``(R, tokens_out, S)``."""
    cfg = params.config
    return tower_forward(params, "enc", _check_block(bits, cfg.tokens_in, cfg.symbol_bits))[0]


def decode_block(bits: np.ndarray, params: ModelParameters) -> np.ndarray:
    """Representation bits ``(R, tokens_out, S)`` -> reconstruction probabilities ``(R, tokens_in, S)``."""
    cfg = params.config
    return tower_forward(params, "dec", _check_block(bits, cfg.tokens_out, cfg.symbol_bits))[0]


def quantize(probs: np.ndarray) -> np.ndarray:
    """Threshold at 0.5 (ties go to 1)."""
    return (np.asarray(probs) >= 0.5).astype(np.uint8)


def symbols_to_bits(symbols: np.ndarray) -> np.ndarray:
    """uint8 symbols ``(..., T)`` -> bits ``(..., T, 8)``, most significant bit first."""
    s = np.asarray(symbols, dtype=np.uint8)
    return np.unpackbits(s[..., None], axis=-1)


def bits_to_symbols(bits: np.ndarray) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint8)
    if b.shape[-1] != 8:
        raise ValueError("last axis must hold 8 bits")
    return np.packbits(b, axis=-1)[..., 0]
