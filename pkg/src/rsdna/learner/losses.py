"""Masked reconstruction loss, smooth GC / hairpin surrogates and their gradients.

The surrogates treat every representation bit as an independent Bernoulli
variable.  A nibble (4 bits) then has a 16-way distribution, each of its two
bases a 4-way marginal, and two bases in different nibbles pair with
probability ``sum_c q_x[c] * q_y[3 - c]`` (A=0, C=1, G=2, T=3, so complements
sum to 3).  Bases inside one nibble are adjacent and never form a stem pair, so
this independence is exact wherever it is used.

Hairpin gate: the hard rule keeps a stem of length ``s`` when its match count
``m`` exceeds ``s * threshold``.  The surrogate replaces that step by
``m * sigmoid((m - s*threshold) / tau)`` with ``m`` the expected match count.
On point-mass inputs each stem term therefore deviates from the hard value by
at most ``m * sigmoid(-|m - s*threshold| / tau)``; at an exact tie
(``m == s*threshold``) the surrogate gives ``m / 2`` where the hard rule
gives 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..base_map import FIRST_BASE, NIBBLE_TO_DINUC, SECOND_BASE
from ..bio_metrics import HairpinParams, hairpin_geometry
from .model import ModelParameters, sigmoid, tower_backward, tower_forward

NIBBLE_BITS = np.array([[(v >> (3 - i)) & 1 for i in range(4)] for v in range(16)])
GC_PER_NIBBLE = np.array([sum(b in "GC" for b in d) for d in NIBBLE_TO_DINUC], dtype=float)
_FIRST = np.eye(4)[FIRST_BASE]
_SECOND = np.eye(4)[SECOND_BASE]


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 16.67
    beta: float = 0.058
    gc_target: float = 50.0
    hairpin_target: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")


@dataclass(frozen=True)
class MaskSpec:
    """Symbol positions whose reconstruction error is excluded from the loss.

    ``None`` means the final symbol of the row.
    """

    masked_symbol_indices: tuple[int, ...] | None = None

    @classmethod
    def tail(cls, count: int, tokens_in: int) -> "MaskSpec":
        if not 0 <= count <= tokens_in:
            raise ValueError("mask count out of range")
        return cls(tuple(range(tokens_in - count, tokens_in)))

    @classmethod
    def none(cls) -> "MaskSpec":
        return cls(())

    def resolve(self, tokens_in: int) -> tuple[int, ...]:
        idx = (tokens_in - 1,) if self.masked_symbol_indices is None else tuple(sorted(set(self.masked_symbol_indices)))
        if any(not 0 <= i < tokens_in for i in idx):
            raise ValueError(f"mask indices must lie in [0, {tokens_in})")
        return idx

    def tensor(self, tokens_in: int, symbol_bits: int) -> np.ndarray:
        """0/1 weights of shape (tokens_in, symbol_bits); 0 marks masked entries."""
        m = np.ones((tokens_in, symbol_bits))
        m[list(self.resolve(tokens_in))] = 0.0
        return m


@dataclass(frozen=True)
class SurrogateConfig:
    hairpin: HairpinParams = field(default_factory=HairpinParams)
    tau: float = 0.1
    # longest stem scored during training (None = every stem length)
    max_stem: int | None = None
    # divide the hairpin sum by the number of scored (pair, stem) slots
    normalize_hairpin: bool = True

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")


# -- masked reconstruction ---------------------------------------------------

def _mask_like(Z, M):
    try:
        return np.broadcast_to(np.asarray(M, dtype=float), Z.shape)
    except ValueError:
        raise ValueError(f"mask shape {np.shape(M)} does not fit {Z.shape}") from None


def mask_mse(Z, Z_hat, M) -> float:
    """(1/N) * sum of M * (Z - Z_hat)^2 with N the total element count."""
    Z, Z_hat = np.asarray(Z, dtype=float), np.asarray(Z_hat, dtype=float)
    if Z.shape != Z_hat.shape:
        raise ValueError(f"shape mismatch: {Z.shape} vs {Z_hat.shape}")
    if Z.size == 0:
        raise ValueError("empty tensors")
    return float((_mask_like(Z, M) * (Z - Z_hat) ** 2).sum() / Z.size)


def mask_mse_grad(Z, Z_hat, M) -> np.ndarray:
    """d mask_mse / d Z_hat."""
    Z, Z_hat = np.asarray(Z, dtype=float), np.asarray(Z_hat, dtype=float)
    return -2.0 * _mask_like(Z, M) * (Z - Z_hat) / Z.size


# -- nibble / base distributions --------------------------------------------

def nibble_distributions(bit_probs: np.ndarray) -> np.ndarray:
    """P(bit = 1) of shape (..., T, 8) -> nibble distributions (..., 2T, 16)."""
    p = np.asarray(bit_probs, dtype=float)
    p4 = p.reshape(p.shape[:-2] + (-1, 4))
    F = np.stack([1.0 - p4, p4], axis=-1)          # (..., n, 4, 2)
    G = F[..., np.arange(4), NIBBLE_BITS]          # (..., n, 16, 4)
    return G.prod(-1)


def _nibble_backward(bit_probs: np.ndarray, dq: np.ndarray) -> np.ndarray:
    p = np.asarray(bit_probs, dtype=float)
    p4 = p.reshape(p.shape[:-2] + (-1, 4))
    F = np.stack([1.0 - p4, p4], axis=-1)
    G = F[..., np.arange(4), NIBBLE_BITS]
    # leave-one-out products without division (point masses contain zeros)
    ones = np.ones(G.shape[:-1] + (1,))
    pre = np.concatenate([ones, np.cumprod(G[..., :-1], -1)], -1)
    suf = np.concatenate([np.cumprod(G[..., :0:-1], -1)[..., ::-1], ones], -1)
    sign = 2.0 * NIBBLE_BITS - 1.0
    dp4 = (dq[..., None] * sign * pre * suf).sum(-2)
    return dp4.reshape(p.shape)


def base_marginals(nibble_probs: np.ndarray) -> np.ndarray:
    """Nibble distributions (..., n, 16) -> per-base distributions (..., 2n, 4)."""
    q = np.asarray(nibble_probs, dtype=float)
    both = np.stack([q @ _FIRST, q @ _SECOND], axis=-2)
    return both.reshape(q.shape[:-2] + (-1, 4))


def _base_backward(dbase: np.ndarray) -> np.ndarray:
    d = dbase.reshape(dbase.shape[:-2] + (-1, 2, 4))
    return d[..., 0, :] @ _FIRST.T + d[..., 1, :] @ _SECOND.T


# -- GC ----------------------------------------------------------------------

def soft_gc(nibble_probs: np.ndarray) -> np.ndarray | float:
    """Expected GC percent of the sequence(s) described by nibble distributions (..., n, 16)."""
    q = np.asarray(nibble_probs, dtype=float)
    g = 100.0 * (q @ GC_PER_NIBBLE).sum(-1) / (2 * q.shape[-2])
    return float(g) if np.ndim(g) == 0 else g


# -- hairpin -----------------------------------------------------------------

def _hairpin_forward(base: np.ndarray, hp: HairpinParams, tau: float, max_stem):
    B, L, _ = base.shape
    geo = hairpin_geometry(L, hp.s_min, hp.r_min, max_stem)
    if L < 2 * hp.s_min + hp.r_min or geo.left.size == 0:
        return np.zeros(B), None, geo
    Qp = np.concatenate([base, np.zeros((B, 1, 4))], axis=1)
    Pm = Qp @ Qp[..., ::-1].transpose(0, 2, 1)
    pairs = Pm[:, geo.left, geo.right]
    m = np.cumsum(pairs, axis=-1)
    sig = sigmoid((m - geo.stem * hp.threshold_ratio) / tau)
    H = (geo.valid * m * sig).sum(axis=(1, 2))
    return H, (Qp, m, sig), geo


def _hairpin_backward(dH: np.ndarray, cache, geo, tau: float) -> np.ndarray:
    Qp, m, sig = cache
    B, L1, _ = Qp.shape
    dm = geo.valid * (sig + m * sig * (1.0 - sig) / tau) * dH[:, None, None]
    dpairs = np.cumsum(dm[..., ::-1], axis=-1)[..., ::-1]
    flat = (geo.left * L1 + geo.right).ravel()
    idx = (np.arange(B)[:, None] * L1 * L1 + flat[None, :]).ravel()
    dPm = np.bincount(idx, weights=dpairs.reshape(B, -1).ravel(), minlength=B * L1 * L1).reshape(B, L1, L1)
    R = Qp[..., ::-1]
    dQ = dPm @ R + (dPm.transpose(0, 2, 1) @ Qp)[..., ::-1]
    return dQ[:, :-1]


def soft_hairpin(nibble_probs: np.ndarray, params: HairpinParams = HairpinParams(),
                 tau: float = 0.1, max_stem: int | None = None) -> np.ndarray | float:
    """Smoothed hairpin sum (unnormalized) of nibble distributions (n, 16) or (B, n, 16)."""
    q = np.asarray(nibble_probs, dtype=float)
    single = q.ndim == 2
    base = base_marginals(q[None] if single else q)
    H, _, _ = _hairpin_forward(base, params, tau, max_stem)
    return float(H[0]) if single else H


# -- combined surrogate over representation bits -----------------------------

def bio_terms(bit_probs: np.ndarray, cfg: SurrogateConfig = SurrogateConfig(), hairpin: bool = True):
    """Per-row soft GC percent and hairpin score for representation probabilities (B, T, 8).

    Returns ``(G, H, backward)`` where ``backward(dG, dH)`` maps loss
    sensitivities to a gradient with respect to ``bit_probs``.  With
    ``hairpin=False`` the (costly) hairpin score is skipped and reported as 0.
    """
    q = nibble_distributions(bit_probs)
    n = q.shape[-2]
    G = 100.0 * (q @ GC_PER_NIBBLE).sum(-1) / (2 * n)
    if hairpin:
        H, hcache, geo = _hairpin_forward(base_marginals(q), cfg.hairpin, cfg.tau, cfg.max_stem)
        scale = 1.0 / geo.size if cfg.normalize_hairpin and geo.size else 1.0
        H = H * scale
    else:
        H, hcache = np.zeros(len(G)), None

    def backward(dG, dH):
        dq = (100.0 / (2 * n)) * np.asarray(dG, dtype=float)[:, None, None] * GC_PER_NIBBLE
        if hcache is not None:
            dbase = _hairpin_backward(np.asarray(dH, dtype=float) * scale, hcache, geo, cfg.tau)
            dq = dq + _base_backward(dbase)
        return _nibble_backward(bit_probs, dq)

    return G, H, backward


def bc_loss(gc_values, hairpin_values, weights: LossWeights = LossWeights()) -> float:
    """Mean squared distance of GC percent to its target plus beta times the same for hairpins."""
    G = np.asarray(gc_values, dtype=float).ravel()
    H = np.asarray(hairpin_values, dtype=float).ravel()
    if G.size == 0 or G.size != H.size:
        raise ValueError("need at least one sequence and matching GC / hairpin values")
    return float(((G - weights.gc_target) ** 2).mean() + weights.beta * ((H - weights.hairpin_target) ** 2).mean())


def total_loss(Z, Z_hat, M, gc_values, hairpin_values, weights: LossWeights = LossWeights()) -> float:
    return mask_mse(Z, Z_hat, M) + weights.alpha * bc_loss(gc_values, hairpin_values, weights)


@dataclass
class LossParts:
    total: float
    mse: float
    bc: float
    gc: np.ndarray
    hairpin: np.ndarray


def gradient(params: ModelParameters, bits: np.ndarray, weights: LossWeights = LossWeights(),
             mask: MaskSpec = MaskSpec(), surrogate: SurrogateConfig = SurrogateConfig(),
             straight_through: bool = False) -> tuple[LossParts, dict[str, np.ndarray]]:
    """Loss and its gradient for a batch of rows given as bits (B, tokens_in, S).

    With ``straight_through`` the decoder sees the quantized representation
    and its input gradient is passed to the probabilities unchanged; the
    result is then a training signal rather than the exact gradient.
    """
    cfg = params.config
    Z = np.asarray(bits, dtype=float)
    M = mask.tensor(cfg.tokens_in, cfg.symbol_bits)
    rep, enc_cache = tower_forward(params, "enc", Z, keep=True)
    dec_in = (rep >= 0.5).astype(float) if straight_through else rep
    rec, dec_cache = tower_forward(params, "dec", dec_in, keep=True)
    # with alpha = 0 the hairpin term cannot affect loss or gradient
    G, H, bio_back = bio_terms(rep, surrogate, hairpin=weights.alpha > 0)
    mse = mask_mse(Z, rec, M)
    bc = bc_loss(G, H, weights)
    parts = LossParts(mse + weights.alpha * bc, mse, bc, G, H)

    grads: dict[str, np.ndarray] = {}
    drep = tower_backward(params, "dec", mask_mse_grad(Z, rec, M), dec_cache, grads)
    m = len(G)
    dG = weights.alpha * 2.0 * (G - weights.gc_target) / m
    dH = weights.alpha * weights.beta * 2.0 * (H - weights.hairpin_target) / m
    if weights.alpha > 0:
        drep = drep + bio_back(dG, dH)
    tower_backward(params, "enc", drep, enc_cache, grads)
    return parts, {k: grads[k] for k in params.arrays}


def evaluate_loss(params: ModelParameters, bits: np.ndarray, weights: LossWeights = LossWeights(),
                  mask: MaskSpec = MaskSpec(), surrogate: SurrogateConfig = SurrogateConfig(),
                  straight_through: bool = False) -> LossParts:
    cfg = params.config
    Z = np.asarray(bits, dtype=float)
    rep, _ = tower_forward(params, "enc", Z)
    dec_in = (rep >= 0.5).astype(float) if straight_through else rep
    rec, _ = tower_forward(params, "dec", dec_in)
    G, H, _ = bio_terms(rep, surrogate, hairpin=weights.alpha > 0)
    mse = mask_mse(Z, rec, mask.tensor(cfg.tokens_in, cfg.symbol_bits))
    bc = bc_loss(G, H, weights)
    return LossParts(mse + weights.alpha * bc, mse, bc, G, H)
