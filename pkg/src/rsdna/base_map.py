"""Nibble <-> dinucleotide block mapping.

Each 4-bit group selects a row (first two bits) and a column (last two bits)
of a fixed 4x4 table of dinucleotides.  Bytes are transcoded high nibble first,
so one byte always becomes four bases.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError

BASES = "ACGT"
COMPLEMENT = {"A": "T", "T": "A", "G": "C", "C": "G"}

# rows indexed by bits b1b2, columns by b3b4
DINUCLEOTIDE_TABLE = (
    ("AT", "AG", "AC", "AA"),
    ("TA", "TC", "TG", "TT"),
    ("GG", "GA", "GT", "GC"),
    ("CC", "CT", "CA", "CG"),
)
NIBBLE_TO_DINUC = tuple(DINUCLEOTIDE_TABLE[v >> 2][v & 3] for v in range(16))
DINUC_TO_NIBBLE = {d: v for v, d in enumerate(NIBBLE_TO_DINUC)}

_BYTE_TO_DNA = tuple(NIBBLE_TO_DINUC[b >> 4] + NIBBLE_TO_DINUC[b & 15] for b in range(256))
_DNA_TO_BYTE = {s: b for b, s in enumerate(_BYTE_TO_DNA)}
_REVCOMP = str.maketrans("ACGT", "TGCA")
_BASE_INDEX = np.zeros(256, dtype=np.uint8)
_BASE_INDEX[[ord(b) for b in BASES]] = np.arange(4)

# base index (A=0, C=1, G=2, T=3) of the first / second base of each nibble
FIRST_BASE = np.array([BASES.index(d[0]) for d in NIBBLE_TO_DINUC])
SECOND_BASE = np.array([BASES.index(d[1]) for d in NIBBLE_TO_DINUC])


def validate_dna(seq: str) -> str:
    bad = set(seq) - set(BASES)
    if bad:
        raise FormatError(f"invalid base(s) {''.join(sorted(bad))!r} in DNA sequence")
    return seq


def nibble_to_dinucleotide(n: int) -> str:
    if not 0 <= n < 16:
        raise ValueError(f"nibble out of range: {n}")
    return NIBBLE_TO_DINUC[n]


def dinucleotide_to_nibble(d: str) -> int:
    try:
        return DINUC_TO_NIBBLE[d]
    except KeyError:
        raise FormatError(f"not a dinucleotide over ACGT: {d!r}") from None


def bytes_to_dna(data: bytes) -> str:
    return "".join(_BYTE_TO_DNA[b] for b in data)


def dna_to_bytes(seq: str) -> bytes:
    if len(seq) % 4:
        raise FormatError(f"sequence length {len(seq)} is not a multiple of 4")
    try:
        return bytes(_DNA_TO_BYTE[seq[i : i + 4]] for i in range(0, len(seq), 4))
    except KeyError:
        validate_dna(seq)
        raise


def complement(base: str) -> str:
    try:
        return COMPLEMENT[base]
    except KeyError:
        raise FormatError(f"invalid base {base!r}") from None


def reverse_complement(seq: str) -> str:
    return validate_dna(seq).translate(_REVCOMP)[::-1]


def encode_bases(seq: str) -> np.ndarray:
    """Sequence -> uint8 array of base indices (A=0, C=1, G=2, T=3)."""
    validate_dna(seq)
    return _BASE_INDEX[np.frombuffer(seq.encode("ascii"), dtype=np.uint8)]


def decode_bases(codes: np.ndarray) -> str:
    return np.frombuffer(BASES.encode("ascii"), dtype=np.uint8)[np.asarray(codes)].tobytes().decode("ascii")
