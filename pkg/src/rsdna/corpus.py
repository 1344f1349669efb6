"""Seeded synthetic corpus: a mix of word-like text and raw random bytes."""

from __future__ import annotations

import numpy as np

_LETTERS = np.frombuffer(b"etaoinshrdlcumwfgypbvkjxqz", dtype=np.uint8)
# rough English letter frequencies for the alphabet above
_FREQ = np.array([12.7, 9.1, 8.2, 7.5, 7.0, 6.7, 6.3, 6.1, 6.0, 4.3, 4.0, 2.8, 2.8,
                  2.4, 2.4, 2.2, 2.0, 2.0, 1.9, 1.5, 1.0, 0.8, 0.2, 0.2, 0.1, 0.1])


def synthetic_corpus(size: int = 65536, seed: int = 0, text_fraction: float = 0.25,
                     segment: int = 512) -> bytes:
    """``size`` bytes built from alternating segments of text and random bytes.

    Each ``segment``-byte chunk is text with probability ``text_fraction``.
    """
    if size < 0 or not 0 <= text_fraction <= 1:
        raise ValueError("bad corpus parameters")
    rng = np.random.default_rng(seed)
    p = _FREQ / _FREQ.sum()
    out = bytearray()
    while len(out) < size:
        if rng.random() < text_fraction:
            words = []
            n = 0
            while n < segment:
                w = _LETTERS[rng.choice(len(_LETTERS), size=rng.integers(2, 9), p=p)].tobytes()
                words.append(w)
                n += len(w) + 1
            out += b" ".join(words)[:segment]
        else:
            out += rng.integers(0, 256, segment, dtype=np.uint8).tobytes()
    return bytes(out[:size])
