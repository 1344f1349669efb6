import numpy as np
import pytest
from hypothesis import given, strategies as st

from rsdna.base_map import bytes_to_dna, dna_to_bytes
from rsdna.errors import ConfigurationError, FormatError
from rsdna.fasta import format_fasta, parse_fasta
from rsdna.gf_rs import RsConfig, decode_rows, encode_rows
from rsdna.learner import ModelConfig, init_parameters, model_digest
from rsdna.pipeline import (FASTA_NAME, MANIFEST_NAME, Header, PipelineConfig, StoragePackage, decode,
                            decode_messages, encode, learned_mask, net_density, pack_file, parse_record_name,
                            read_package, record_name, unpack, write_package)

BLOCK = 48 * 32


@pytest.fixture(scope="module")
def model():
    return init_parameters(ModelConfig())


def test_pack_examples():
    words, h = pack_file(b"")
    assert words.shape == (0, 32, 64) and h.length == 0 and h.blocks == 0
    words, h = pack_file(bytes(range(256)) * 6)
    assert words.shape == (1, 32, 64) and h.length == BLOCK
    words, h = pack_file(b"\x07")
    assert words.shape == (1, 32, 64)
    assert words[0, 0, 0] == 7 and not words[0, 0, 1:48].any() and not words[0, 1:].any()
    assert unpack(words[..., :48], h) == b"\x07"


def test_unpack_every_pad_length():
    for extra in range(48):
        data = bytes(np.random.default_rng(extra).integers(0, 256, 48 * 3 + extra, dtype=np.uint8))
        words, h = pack_file(data)
        assert unpack(words[..., :48], h) == data
    with pytest.raises(FormatError):
        unpack(np.zeros((1, 48), np.uint8), Header(49, "identity", 64, 48, 32, 1, 256))


def test_identity_encode_shape_and_density():
    pkg = encode(bytes(BLOCK))
    assert len(pkg.sequences) == 32 and all(len(s) == 256 for _, _, s in pkg.sequences)
    assert pkg.net_density == 1.5
    assert net_density(PipelineConfig()) == 1.5


def test_learned_encode_shape_and_density(model):
    cfg = PipelineConfig(mode="learned", model=model)
    pkg = encode(bytes(range(256)) * 6, cfg)
    assert len(pkg.sequences) == 32 and all(len(s) == 224 for _, _, s in pkg.sequences)
    assert net_density(cfg) == pytest.approx(384 / 224)
    assert pkg.net_density == pytest.approx(384 / 224)
    assert pkg.header.model_sha256 == model_digest(model)
    assert cfg.erasures() == tuple(range(52, 64)) == learned_mask(model).resolve(64)


def test_learned_mode_needs_matching_model(model):
    with pytest.raises(ConfigurationError):
        PipelineConfig(mode="learned")
    with pytest.raises(ConfigurationError):
        PipelineConfig(rs=RsConfig(8, 6), mode="learned", model=model)
    pkg = encode(b"hello", PipelineConfig(mode="learned", model=model))
    other = init_parameters(ModelConfig(seed=1))
    with pytest.raises(ConfigurationError):
        decode(pkg, other)
    with pytest.raises(ConfigurationError):
        decode(pkg, None)


@given(st.binary(max_size=10_000))
def test_identity_roundtrip(data):
    out, report = decode(encode(data))
    assert out == data and report.all_ok


def test_learned_roundtrip_with_structured_model(model):
    data = bytes(np.random.default_rng(0).integers(0, 256, 5000, dtype=np.uint8))
    out, report = decode(encode(data, PipelineConfig(mode="learned", model=model)), model)
    assert out == data and report.all_ok


def _corrupt_rows(pkg, per_row, rng):
    seqs = []
    for b, r, s in pkg.sequences:
        sym = bytearray(dna_to_bytes(s))
        for p in rng.choice(len(sym), per_row, replace=False):
            sym[p] ^= int(rng.integers(1, 256))
        seqs.append((b, r, bytes_to_dna(bytes(sym))))
    return StoragePackage(pkg.header, seqs)


def test_identity_corrects_t_symbols_per_row():
    rng = np.random.default_rng(1)
    data = bytes(rng.integers(0, 256, 3 * BLOCK - 5, dtype=np.uint8))
    out, report = decode(_corrupt_rows(encode(data), 8, rng))
    assert out == data and report.all_ok and report.errors_found.max() == 8


def test_t_plus_one_flags_the_row():
    rng = np.random.default_rng(2)
    data = bytes(rng.integers(0, 256, 2 * BLOCK, dtype=np.uint8))
    pkg = encode(data)
    b, r, s = pkg.sequences[40]
    sym = bytearray(dna_to_bytes(s))
    for p in range(9):
        sym[p * 7] ^= 0x5A
    pkg.sequences[40] = (b, r, bytes_to_dna(bytes(sym)))
    out, report = decode(pkg)
    assert report.failed_rows == [(1, 8)] and report.failed_blocks == [1]
    assert out[:BLOCK] == data[:BLOCK]
    assert "failed=1" in report.summary()


def test_exact_unmasked_reconstruction_always_recovers():
    rng = np.random.default_rng(3)
    msgs = rng.integers(0, 256, (200, 48), dtype=np.uint8)
    words = encode_rows(msgs)
    garbage = words.copy()
    mask = list(range(52, 64))
    garbage[:, mask] = rng.integers(0, 256, (200, 12), dtype=np.uint8)
    res = decode_rows(garbage, mask)
    assert res.ok.all() and np.array_equal(res.messages, msgs)


def test_row_order_does_not_matter():
    rng = np.random.default_rng(4)
    data = bytes(rng.integers(0, 256, 2 * BLOCK + 100, dtype=np.uint8))
    pkg = encode(data)
    order = rng.permutation(len(pkg.sequences))
    shuffled = StoragePackage(pkg.header, [pkg.sequences[i] for i in order])
    assert decode(shuffled)[0] == data


def test_package_validation():
    pkg = encode(b"abc" * 100)
    with pytest.raises(FormatError):
        decode(StoragePackage(pkg.header, pkg.sequences[:-1]))
    dup = list(pkg.sequences)
    dup[1] = dup[0]
    with pytest.raises(FormatError):
        decode(StoragePackage(pkg.header, dup))
    short = list(pkg.sequences)
    short[0] = (0, 0, short[0][2][:-4])
    with pytest.raises(FormatError):
        decode(StoragePackage(pkg.header, short))


def test_header_roundtrip_and_errors():
    h = encode(b"xyz", PipelineConfig(mask=None)).header
    text = h.to_text()
    assert Header.from_text(text) == h and Header.from_text(text).to_text() == text
    for bad in (text.replace("RSDNA-MANIFEST", "NOPE"), text + "extra=1\n", text.replace("version=1", "version=9"),
                "\n".join(l for l in text.splitlines() if not l.startswith("blocks")), text.replace("length=3", "length=x"),
                text.replace("mode=identity", "mode=other")):
        with pytest.raises(FormatError):
            Header.from_text(bad)


def test_disk_roundtrip_is_byte_identical(tmp_path):
    data = bytes(np.random.default_rng(5).integers(0, 256, 4000, dtype=np.uint8))
    pkg = encode(data)
    write_package(pkg, tmp_path / "a")
    back = read_package(tmp_path / "a")
    assert back.header == pkg.header and back.sequences == pkg.sequences
    write_package(back, tmp_path / "b")
    for name in (MANIFEST_NAME, FASTA_NAME):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    lines = (tmp_path / "a" / FASTA_NAME).read_text().splitlines()
    assert lines[0] == ">b0_r0" and max(map(len, lines)) == 80


def test_record_names():
    assert record_name(3, 17) == "b3_r17"
    assert parse_record_name("b3_r17") == (3, 17)
    for bad in ("b3r17", "x3_r1", "b_r1", "b1_r"):
        with pytest.raises(FormatError):
            parse_record_name(bad)


def test_fasta():
    recs = [("a", "ACGT" * 30), ("b", "")]
    text = format_fasta(recs)
    assert parse_fasta(text) == recs
    assert parse_fasta(">x\nAC\n\nGT\n") == [("x", "ACGT")]
    for bad in ("ACGT\n", ">\nACGT\n", ">x\nACGN\n"):
        with pytest.raises(FormatError):
            parse_fasta(bad)


def test_rs86_bit_level_reading_is_constructible():
    cfg = PipelineConfig(rs=RsConfig(8, 6), rows_per_block=4)
    data = bytes(range(100))
    pkg = encode(data, cfg)
    assert all(len(s) == 32 for _, _, s in pkg.sequences)
    assert decode(pkg)[0] == data
    assert net_density(cfg) == 48 / 32


def test_messages_shape():
    pkg = encode(bytes(BLOCK + 1))
    msgs, rep = decode_messages(pkg)
    assert msgs.shape == (64, 48) and rep.ok.shape == (2, 32)
