"""Sequence constraint analyzers: GC content, local GC, homopolymers, hairpins."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import groupby

import numpy as np

from .base_map import encode_bases, validate_dna


@dataclass(frozen=True)
class HairpinParams:
    s_min: int = 3
    r_min: int = 3
    threshold_ratio: float = 0.5

    def __post_init__(self):
        if self.s_min < 1 or self.r_min < 1:
            raise ValueError("s_min and r_min must be >= 1")
        if not 0 < self.threshold_ratio < 1:
            raise ValueError("threshold_ratio must lie in (0, 1)")


@dataclass
class GcProfile:
    global_percent: float
    window_series: list[tuple[int, float]] = field(default_factory=list)


def gc_content(seq: str) -> float:
    validate_dna(seq)
    if not seq:
        raise ValueError("GC content of an empty sequence is undefined")
    return 100.0 * (seq.count("G") + seq.count("C")) / len(seq)


def local_gc(seq: str, window: int = 20, step: int = 1) -> GcProfile:
    """GC percent of each full window; a trailing partial window is dropped."""
    if step < 1:
        raise ValueError("step must be >= 1")
    if not 1 <= window <= len(seq):
        raise ValueError(f"window {window} must lie in [1, {len(seq)}]")
    codes = encode_bases(seq)
    csum = np.concatenate([[0], np.cumsum((codes == 1) | (codes == 2))])
    starts = np.arange(0, len(seq) - window + 1, step)
    pct = 100.0 * (csum[starts + window] - csum[starts]) / window
    return GcProfile(gc_content(seq), [(int(s), float(p)) for s, p in zip(starts, pct)])


def homopolymer_max_run(seq: str) -> int:
    return max((sum(1 for _ in g) for _, g in groupby(seq)), default=0)


def homopolymer_runs(seq: str) -> list[int]:
    return [sum(1 for _ in g) for _, g in groupby(seq)]


def bp(a: str, b: str) -> int:
    return int({a, b} in ({"A", "T"}, {"G", "C"}))


@dataclass(frozen=True)
class HairpinGeometry:
    """Every (inner pair, stem length) the hairpin sum visits for length ``L``.

    Row ``g`` describes the innermost stem pair ``(left[g, 0], right[g, 0])``;
    column ``j`` holds the ``j``-th pair counted outward.  ``valid[g, j]`` marks
    stem length ``s = j + 1`` as part of the sum.  Out-of-range slots index
    position ``L`` which callers pad with a non-pairing value.
    """

    length: int
    left: np.ndarray
    right: np.ndarray
    valid: np.ndarray
    stem: np.ndarray

    @property
    def size(self) -> int:
        return int(self.valid.sum())


@lru_cache(maxsize=32)
def hairpin_geometry(length: int, s_min: int, r_min: int, max_stem: int | None = None) -> HairpinGeometry:
    L = length
    s_top = (L - r_min) // 2
    if max_stem is not None:
        s_top = min(s_top, max_stem)
    lefts, rights, his = [], [], []
    # inner pair (a, b), 0-based, loop length r = b - a - 1.  The stem of length
    # s spans a-s+1..a and b..b+s-1, and the summation bounds i >= 1 and
    # i <= L - 2s - r give a - s + 1 >= 0 and b + s - 1 <= L - 2.
    for a in range(L):
        for b in range(a + r_min + 1, L - 1):
            hi = min(s_top, a + 1, L - 1 - b)
            if hi >= s_min:
                lefts.append(a)
                rights.append(b)
                his.append(hi)
    J = max(his, default=0)
    j = np.arange(J)
    a = np.array(lefts, dtype=np.int64)[:, None]
    b = np.array(rights, dtype=np.int64)[:, None]
    hi = np.array(his, dtype=np.int64)[:, None]
    inside = j[None, :] < hi
    left = np.where(inside, a - j, L)
    right = np.where(inside, b + j, L)
    valid = inside & (j[None, :] + 1 >= s_min)
    stem = np.broadcast_to(j + 1, valid.shape)
    return HairpinGeometry(L, left, right, valid, stem)


def hairpin_counts(codes: np.ndarray, params: HairpinParams = HairpinParams(),
                   chunk_elements: int = 1 << 23) -> np.ndarray:
    """Weighted hairpin sum for each row of an ``(N, L)`` base-index matrix.

    For each geometry the stem match count ``m`` contributes ``m`` when it
    exceeds ``s * threshold_ratio`` (the sum counts matched pairs, not
    structures).
    """
    codes = np.asarray(codes, dtype=np.uint8)
    if codes.ndim != 2:
        raise ValueError("expected an (N, L) matrix of base indices")
    N, L = codes.shape
    out = np.zeros(N, dtype=np.int64)
    if L < 2 * params.s_min + params.r_min:
        return out
    geo = hairpin_geometry(L, params.s_min, params.r_min)
    if geo.left.size == 0:
        return out
    thresh = geo.stem * params.threshold_ratio
    padded = np.concatenate([codes, np.full((N, 1), 9, dtype=np.uint8)], axis=1)
    step = max(1, chunk_elements // geo.left.size)
    for lo in range(0, N, step):
        blk = padded[lo : lo + step].astype(np.int16)
        pairs = (blk[:, geo.left] + blk[:, geo.right]) == 3
        m = np.cumsum(pairs, axis=2, dtype=np.int16)
        keep = geo.valid & (m > thresh)
        out[lo : lo + step] = np.where(keep, m, 0).sum(axis=(1, 2))
    return out


def hairpin_count(seq: str, params: HairpinParams = HairpinParams()) -> int:
    if len(seq) < 2 * params.s_min + params.r_min:
        validate_dna(seq)
        return 0
    return int(hairpin_counts(encode_bases(seq)[None, :], params)[0])
