"""Reference transcoders: one-bit-per-base direct mapping and ternary Huffman
with a rotating base code.
"""

from __future__ import annotations

import heapq
from collections import Counter
from typing import Iterable

from .base_map import BASES
from .errors import FormatError

_ZERO, _ONE = "AC", "GT"


def church_encode(bits: Iterable[int]) -> str:
    """0 -> A|C, 1 -> G|T; the second option is used only to avoid a run of four."""
    out: list[str] = []
    for bit in bits:
        if bit not in (0, 1):
            raise ValueError(f"not a bit: {bit!r}")
        first, second = (_ZERO if bit == 0 else _ONE)
        base = first
        if len(out) >= 3 and out[-1] == out[-2] == out[-3] == first:
            base = second
        out.append(base)
    return "".join(out)


def church_decode(seq: str) -> list[int]:
    bits = []
    for base in seq:
        if base in _ZERO:
            bits.append(0)
        elif base in _ONE:
            bits.append(1)
        else:
            raise FormatError(f"invalid base {base!r}")
    return bits


def bytes_to_bits(data: bytes) -> list[int]:
    return [(b >> (7 - i)) & 1 for b in data for i in range(8)]


def bits_to_bytes(bits: list[int]) -> bytes:
    if len(bits) % 8:
        raise FormatError("bit count is not a multiple of 8")
    return bytes(int("".join(map(str, bits[i : i + 8])), 2) for i in range(0, len(bits), 8))


# -- rotation code ---------------------------------------------------------

# next base = BASES[(index(prev) + 1 + trit) % 4]; never repeats prev
ROTATION = {p: tuple(BASES[(BASES.index(p) + 1 + t) % 4] for t in range(3)) for p in BASES}
ROTATION_START = "A"


def trits_to_dna(trits: Iterable[int], prev: str = ROTATION_START) -> str:
    out = []
    for t in trits:
        prev = ROTATION[prev][t]
        out.append(prev)
    return "".join(out)


def dna_to_trits(seq: str, prev: str = ROTATION_START) -> list[int]:
    trits = []
    for base in seq:
        if base not in BASES:
            raise FormatError(f"invalid base {base!r}")
        t = (BASES.index(base) - BASES.index(prev) - 1) % 4
        if t == 3:
            raise FormatError("repeated base cannot occur in rotation-coded DNA")
        trits.append(t)
        prev = base
    return trits


# -- ternary Huffman --------------------------------------------------------

def build_huffman_codebook(data: bytes) -> dict[int, str]:
    """Byte -> trit-string code, prefix-free over {0, 1, 2}."""
    if not data:
        raise ValueError("cannot build a codebook from empty input")
    freq = Counter(data)
    if len(freq) == 1:
        return {next(iter(freq)): "0"}
    tick = 0
    heap: list = []
    for sym, w in sorted(freq.items()):
        heap.append((w, tick, sym))
        tick += 1
    # a full ternary tree needs an odd number of leaves
    if len(heap) % 2 == 0:
        heap.append((0, tick, None))
        tick += 1
    heapq.heapify(heap)
    while len(heap) > 1:
        kids = [heapq.heappop(heap) for _ in range(3)]
        heapq.heappush(heap, (sum(k[0] for k in kids), tick, kids))
        tick += 1
    code: dict[int, str] = {}
    stack = [(heap[0], "")]
    while stack:
        (_, _, node), prefix = stack.pop()
        if isinstance(node, list):
            for digit, child in enumerate(node):
                stack.append((child, prefix + str(digit)))
        elif node is not None:
            code[node] = prefix
    return code


def is_prefix_free(codebook: dict[int, str]) -> bool:
    words = sorted(codebook.values())
    return all(not b.startswith(a) for a, b in zip(words, words[1:]))


def serialize_codebook(codebook: dict[int, str]) -> str:
    return "".join(f"{b}\t{codebook[b]}\n" for b in sorted(codebook))


def parse_codebook(text: str) -> dict[int, str]:
    code = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            byte, word = line.split("\t")
            value = int(byte)
        except ValueError:
            raise FormatError(f"codebook line {lineno} is not 'byte<TAB>trits'") from None
        if not 0 <= value < 256 or not word or set(word) - set("012"):
            raise FormatError(f"codebook line {lineno} is invalid")
        code[value] = word
    if not is_prefix_free(code):
        raise FormatError("codebook is not prefix-free")
    return code


def goldman_encode(data: bytes, codebook: dict[int, str] | None = None) -> tuple[str, dict[int, str]]:
    codebook = codebook or build_huffman_codebook(data)
    try:
        trits = [int(t) for b in data for t in codebook[b]]
    except KeyError as exc:
        raise FormatError(f"byte {exc.args[0]} has no codeword") from None
    return trits_to_dna(trits), codebook


def goldman_decode(seq: str, codebook: dict[int, str]) -> bytes:
    lookup = {w: b for b, w in codebook.items()}
    longest = max(map(len, lookup), default=0)
    out = bytearray()
    word = ""
    for t in dna_to_trits(seq):
        word += str(t)
        if len(word) > longest:
            raise FormatError("trit stream does not match the codebook")
        if word in lookup:
            out.append(lookup[word])
            word = ""
    if word:
        raise FormatError("trailing trits do not form a codeword")
    return bytes(out)
