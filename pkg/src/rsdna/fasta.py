"""Minimal strict FASTA reader/writer for DNA records."""

from __future__ import annotations

from .base_map import BASES
from .errors import FormatError

LINE_WIDTH = 80
_ALLOWED = set(BASES)


def format_fasta(records, width: int = LINE_WIDTH) -> str:
    lines = []
    for name, seq in records:
        lines.append(f">{name}")
        lines.extend(seq[i : i + width] for i in range(0, len(seq), width))
    return "".join(line + "\n" for line in lines)


def parse_fasta(text: str) -> list[tuple[str, str]]:
    """Records as (name, sequence); any character outside ACGT is a format error."""
    records: list[tuple[str, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            name = line[1:].strip()
            if not name:
                raise FormatError(f"line {lineno}: empty record name")
            records.append((name, []))
            continue
        if not records:
            raise FormatError(f"line {lineno}: sequence data before the first header")
        bad = set(line) - _ALLOWED
        if bad:
            raise FormatError(f"line {lineno}: invalid character(s) {''.join(sorted(bad))!r}")
        records[-1][1].append(line)
    return [(name, "".join(parts)) for name, parts in records]
