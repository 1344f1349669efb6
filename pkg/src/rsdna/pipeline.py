"""File <-> DNA package conversion.

A file is zero-padded and cut into rows of ``k`` bytes, each row is RS-encoded
to ``n`` bytes, and rows are grouped ``rows_per_block`` to a block.  In
identity mode every code byte becomes four bases.  In learned mode the
encoder turns each 64-symbol row into 56 representation symbols (224 nt); on
the way back the decoder rebuilds 64 symbols and the masked positions are
handed to the RS decoder as erasures.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .base_map import bytes_to_dna, dna_to_bytes
from .errors import ConfigurationError, FormatError
from .fasta import format_fasta, parse_fasta
from .gf_rs import RsConfig, decode_rows, encode_rows
from .learner.losses import MaskSpec
from .learner.model import ModelParameters, bits_to_symbols, decode_block, encode_block, quantize, symbols_to_bits
from .learner.serialize import atomic_write, model_digest

MANIFEST_MAGIC = "RSDNA-MANIFEST"
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.txt"
FASTA_NAME = "sequences.fasta"
MODES = ("identity", "learned")


def learned_mask(model: ModelParameters) -> MaskSpec:
    """Default learned-mode mask: every position the representation does not carry."""
    cfg = model.config
    return MaskSpec.tail(cfg.tokens_in - cfg.tokens_out + cfg.free_slots, cfg.tokens_in)


@dataclass(frozen=True)
class PipelineConfig:
    rs: RsConfig = field(default_factory=RsConfig)
    rows_per_block: int = 32
    mode: str = "identity"
    # None picks the mode default: no erasures in identity mode, learned_mask() otherwise
    mask: MaskSpec | None = None
    model: ModelParameters | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.rows_per_block < 1:
            raise ConfigurationError("rows_per_block must be positive")
        if self.mode == "learned":
            if self.model is None:
                raise ConfigurationError("learned mode needs a model")
            if self.model.config.tokens_in != self.rs.n:
                raise ConfigurationError(
                    f"model takes {self.model.config.tokens_in} symbols but RS rows have {self.rs.n}")

    def erasures(self) -> tuple[int, ...]:
        if self.mask is not None:
            return self.mask.resolve(self.rs.n)
        if self.mode == "learned":
            return learned_mask(self.model).resolve(self.rs.n)
        return ()

    @property
    def symbols_per_row(self) -> int:
        return self.rs.n if self.mode == "identity" else self.model.config.tokens_out

    @property
    def nt_per_row(self) -> int:
        return 4 * self.symbols_per_row

    @property
    def model_hash(self) -> str:
        return model_digest(self.model) if self.model is not None else "-"


@dataclass(frozen=True)
class Header:
    length: int
    mode: str
    rs_n: int
    rs_k: int
    rows_per_block: int
    blocks: int
    nt_per_row: int
    mask: tuple[int, ...] = ()
    model_sha256: str = "-"
    first_root_exponent: int = 0
    version: int = MANIFEST_VERSION

    _INT_KEYS = ("version", "length", "rs_n", "rs_k", "first_root_exponent", "rows_per_block", "blocks", "nt_per_row")

    def to_text(self) -> str:
        lines = [f"magic={MANIFEST_MAGIC}"]
        for key in self._INT_KEYS:
            lines.append(f"{key}={getattr(self, key)}")
        lines.append(f"mode={self.mode}")
        lines.append(f"mask={','.join(map(str, self.mask)) or '-'}")
        lines.append(f"model_sha256={self.model_sha256}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Header":
        fields: dict[str, str] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError(f"manifest line {lineno} is not key=value")
            if key in fields:
                raise FormatError(f"manifest key {key!r} repeated")
            fields[key] = value
        if fields.pop("magic", None) != MANIFEST_MAGIC:
            raise FormatError("manifest magic missing or wrong")
        known = set(cls._INT_KEYS) | {"mode", "mask", "model_sha256"}
        unknown = set(fields) - known
        if unknown:
            raise FormatError(f"unknown manifest key(s): {', '.join(sorted(unknown))}")
        missing = known - set(fields)
        if missing:
            raise FormatError(f"manifest lacks key(s): {', '.join(sorted(missing))}")
        try:
            ints = {k: int(fields[k]) for k in cls._INT_KEYS}
            mask = () if fields["mask"] == "-" else tuple(int(v) for v in fields["mask"].split(","))
        except ValueError:
            raise FormatError("non-integer manifest field") from None
        if ints["version"] != MANIFEST_VERSION:
            raise FormatError(f"unsupported manifest version {ints['version']}")
        if fields["mode"] not in MODES:
            raise FormatError(f"unknown mode {fields['mode']!r}")
        if min(ints.values()) < 0:
            raise FormatError("negative manifest field")
        return cls(mode=fields["mode"], mask=mask, model_sha256=fields["model_sha256"], **ints)

    @property
    def rs(self) -> RsConfig:
        try:
            return RsConfig(self.rs_n, self.rs_k, first_root_exponent=self.first_root_exponent)
        except ValueError as exc:
            raise FormatError(str(exc)) from None


@dataclass
class StoragePackage:
    header: Header
    sequences: list[tuple[int, int, str]]

    @property
    def total_nt(self) -> int:
        return sum(len(s) for _, _, s in self.sequences)

    @property
    def net_density(self) -> float:
        """Source bits per stored nucleotide."""
        nt = self.total_nt
        return 8 * self.header.length / nt if nt else 0.0


@dataclass
class DecodeReport:
    ok: np.ndarray               # (blocks, rows) bool
    errors_found: np.ndarray     # (blocks, rows) symbol errors corrected
    erasures_used: np.ndarray    # (blocks, rows)

    @property
    def all_ok(self) -> bool:
        return bool(self.ok.all())

    @property
    def failed_rows(self) -> list[tuple[int, int]]:
        return [(int(b), int(r)) for b, r in np.argwhere(~self.ok)]

    @property
    def failed_blocks(self) -> list[int]:
        return [int(b) for b in np.flatnonzero(~self.ok.all(axis=1))] if self.ok.size else []

    def summary(self) -> str:
        rows = self.ok.size
        return (f"rows={rows} corrected={int(self.ok.sum())} failed={rows - int(self.ok.sum())} "
                f"symbol_errors_fixed={int(self.errors_found[self.ok].sum())}")


# -- packing -----------------------------------------------------------------

def pack_file(data: bytes, config: PipelineConfig = PipelineConfig()) -> tuple[np.ndarray, Header]:
    """Pad, split and RS-encode ``data``; returns ``(blocks, rows_per_block, n)`` codewords and the header."""
    k, R = config.rs.k, config.rows_per_block
    per_block = k * R
    n_blocks = -(-len(data) // per_block)
    buf = np.zeros(n_blocks * per_block, dtype=np.uint8)
    buf[: len(data)] = np.frombuffer(bytes(data), dtype=np.uint8)
    words = encode_rows(buf.reshape(-1, k), config.rs).reshape(n_blocks, R, config.rs.n)
    header = Header(
        length=len(data), mode=config.mode, rs_n=config.rs.n, rs_k=config.rs.k,
        rows_per_block=R, blocks=n_blocks, nt_per_row=config.nt_per_row,
        mask=config.erasures(), model_sha256=config.model_hash,
        first_root_exponent=config.rs.first_root_exponent,
    )
    return words, header


def unpack(messages: np.ndarray, header: Header) -> bytes:
    """Concatenate per-row messages and strip the padding recorded in ``header``."""
    flat = np.asarray(messages, dtype=np.uint8).reshape(-1)
    if header.length > flat.size:
        raise FormatError(f"header length {header.length} exceeds the {flat.size} bytes available")
    return flat[: header.length].tobytes()


# -- encode / decode ---------------------------------------------------------

def _represent(words: np.ndarray, model: ModelParameters) -> np.ndarray:
    flat = words.reshape(-1, words.shape[-1])
    rep = quantize(encode_block(symbols_to_bits(flat), model))
    return bits_to_symbols(rep)


def _reconstruct(rep: np.ndarray, model: ModelParameters) -> np.ndarray:
    return bits_to_symbols(quantize(decode_block(symbols_to_bits(rep), model)))


def encode(data: bytes, config: PipelineConfig = PipelineConfig()) -> StoragePackage:
    words, header = pack_file(data, config)
    R = config.rows_per_block
    flat = words.reshape(-1, config.rs.n)
    if config.mode == "learned":
        flat = _represent(flat, config.model)
    seqs = [(i // R, i % R, bytes_to_dna(row.tobytes())) for i, row in enumerate(flat)]
    return StoragePackage(header, seqs)


def config_for(header: Header, model: ModelParameters | None = None) -> PipelineConfig:
    """Pipeline configuration implied by a package header (and a model in learned mode)."""
    if header.mode == "learned":
        if model is None:
            raise ConfigurationError("package was written in learned mode; a model is required")
        digest = model_digest(model)
        if digest != header.model_sha256:
            raise ConfigurationError(f"model hash {digest[:12]}... does not match package {header.model_sha256[:12]}...")
    else:
        model = None
    mask = MaskSpec(header.mask)
    try:
        return PipelineConfig(header.rs, header.rows_per_block, header.mode, mask, model)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def _ordered_symbols(package: StoragePackage, rows: int, width: int) -> np.ndarray:
    h = package.header
    expected = h.blocks * h.rows_per_block
    if len(package.sequences) != expected:
        raise FormatError(f"package holds {len(package.sequences)} sequences, header expects {expected}")
    out = np.zeros((rows, width), dtype=np.uint8)
    seen = np.zeros(rows, dtype=bool)
    for b, r, seq in package.sequences:
        if not (0 <= b < h.blocks and 0 <= r < h.rows_per_block):
            raise FormatError(f"sequence address b{b}_r{r} outside the package")
        if len(seq) != h.nt_per_row:
            raise FormatError(f"sequence b{b}_r{r} has {len(seq)} nt, expected {h.nt_per_row}")
        i = b * h.rows_per_block + r
        if seen[i]:
            raise FormatError(f"duplicate sequence b{b}_r{r}")
        seen[i] = True
        out[i] = np.frombuffer(dna_to_bytes(seq), dtype=np.uint8)
    return out


def decode_messages(package: StoragePackage, model: ModelParameters | None = None) -> tuple[np.ndarray, DecodeReport]:
    """Per-row RS-decoded messages ``(blocks * rows, k)`` plus the row report."""
    h = package.header
    config = config_for(h, model)
    rows = h.blocks * h.rows_per_block
    width = config.symbols_per_row
    if h.nt_per_row != 4 * width:
        raise FormatError(f"header nt_per_row {h.nt_per_row} does not fit {width}-symbol rows")
    symbols = _ordered_symbols(package, rows, width)
    if config.mode == "learned":
        symbols = _reconstruct(symbols, config.model)
    res = decode_rows(symbols, list(config.erasures()) or None, config.rs)
    shape = (h.blocks, h.rows_per_block)
    report = DecodeReport(res.ok.reshape(shape), res.errors_found.reshape(shape), res.erasures_used.reshape(shape))
    return res.messages, report


def decode(package: StoragePackage, model: ModelParameters | None = None) -> tuple[bytes, DecodeReport]:
    """Recover the file; uncorrectable rows are reported and left uncorrected in the output."""
    messages, report = decode_messages(package, model)
    return unpack(messages, package.header), report


def net_density(config: PipelineConfig) -> float:
    """Closed-form source bits per nucleotide of a full block."""
    return 8 * config.rs.k / config.nt_per_row


# -- disk format ---------------------------------------------------------------

def record_name(block: int, row: int) -> str:
    return f"b{block}_r{row}"


def parse_record_name(name: str) -> tuple[int, int]:
    try:
        b, r = name.split("_")
        if b[0] != "b" or r[0] != "r":
            raise ValueError
        return int(b[1:]), int(r[1:])
    except (ValueError, IndexError):
        raise FormatError(f"record name {name!r} is not b<block>_r<row>") from None


def package_fasta(package: StoragePackage) -> str:
    return format_fasta((record_name(b, r), s) for b, r, s in package.sequences)


def write_package(package: StoragePackage, directory: str | Path) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    atomic_write(d / FASTA_NAME, package_fasta(package).encode("ascii"))
    atomic_write(d / MANIFEST_NAME, package.header.to_text().encode("ascii"))


def read_package(directory: str | Path) -> StoragePackage:
    d = Path(directory)
    header = Header.from_text((d / MANIFEST_NAME).read_text(encoding="ascii", errors="replace"))
    records = parse_fasta((d / FASTA_NAME).read_text(encoding="ascii", errors="replace"))
    return StoragePackage(header, [(*parse_record_name(name), seq) for name, seq in records])


def file_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
