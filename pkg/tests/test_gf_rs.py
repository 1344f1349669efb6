import numpy as np
import pytest
from hypothesis import given, strategies as st

from rsdna.gf_rs import (EXP, FIELD_POLY, LOG, MUL, RsConfig, decode_rows, encode_rows, gf_add, gf_div, gf_inv,
                         gf_mul, gf_pow, poly_eval, rs_decode, rs_encode, rs_generator, rs_syndromes)

RS86 = RsConfig(8, 6)
RS6448 = RsConfig()


def clmul_mod(a, b, poly=FIELD_POLY):
    """Schoolbook carry-less product reduced bit by bit (independent of the log tables)."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    for i in range(15, 7, -1):
        if r >> i & 1:
            r ^= poly << (i - 8)
    return r


# -- field -------------------------------------------------------------------

def test_mul_examples():
    assert gf_mul(0, 0x57) == 0
    assert gf_mul(1, 0x57) == 0x57
    assert gf_mul(0x02, 0x80) == 0x1D


def test_mul_exhaustive_against_schoolbook():
    ref = np.array([[clmul_mod(a, b) for b in range(256)] for a in range(256)], dtype=np.uint8)
    assert np.array_equal(MUL, ref)
    assert all(gf_mul(a, b) == ref[a, b] for a in range(0, 256, 7) for b in range(256))


def test_inverse_exhaustive():
    assert gf_inv(1) == 1
    for a in range(1, 256):
        assert gf_mul(a, gf_inv(a)) == 1
    with pytest.raises(ValueError):
        gf_inv(0)


def test_field_axioms_exhaustive():
    a = np.arange(256)
    # commutativity and distributivity over XOR, every (a, b) with c sampled
    assert np.array_equal(MUL, MUL.T)
    rng = np.random.default_rng(0)
    for c in rng.integers(0, 256, 16):
        lhs = MUL[a[:, None], a[None, :] ^ c]
        rhs = MUL[a[:, None], a[None, :]] ^ MUL[a, c][:, None]
        assert np.array_equal(lhs, rhs)
        # associativity
        assert np.array_equal(MUL[MUL[a[:, None], a[None, :]], c], MUL[a[:, None], MUL[a, c][None, :]])


def test_log_exp_tables_and_pow():
    assert sorted(EXP[:255]) == list(range(1, 256))
    for x in range(1, 256):
        assert EXP[LOG[x]] == x
    assert gf_pow(2, 8) == 0x1D
    assert gf_pow(7, 0) == 1
    assert gf_add(0x53, 0xCA) == 0x53 ^ 0xCA
    assert gf_div(gf_mul(9, 77), 77) == 9


# -- generator / encoder -----------------------------------------------------------

def test_generator_examples():
    assert rs_generator(RsConfig(5, 5)) == [1]
    assert rs_generator(RsConfig(5, 4)) == [1, 1]
    # (x - a^0)(x - a^1), lowest degree first, expanded independently
    assert rs_generator(RS86) == [2, 3, 1]
    assert rs_generator(RS6448) == [59, 36, 50, 98, 229, 41, 65, 163, 8, 30, 209, 68, 189, 104, 13, 59, 1]


def test_generator_roots():
    cfg = RsConfig(20, 12, first_root_exponent=3)
    g = rs_generator(cfg)
    assert len(g) == cfg.nsym + 1 and g[-1] == 1
    for j in range(cfg.nsym):
        assert poly_eval(g, EXP[j + 3]) == 0


def test_encode_examples():
    assert rs_encode([0] * 6, RS86) == bytes(8)
    # parity from polynomial long division by the generator
    assert rs_encode([1, 2, 3, 4, 5, 6], RS86) == bytes([1, 2, 3, 4, 5, 6, 13, 10])
    with pytest.raises(ValueError):
        rs_encode([1, 2, 3], RS86)
    with pytest.raises(ValueError):
        rs_encode([1, 2, 3, 4, 5, 256], RS86)


@given(st.lists(st.integers(0, 255), min_size=48, max_size=48))
def test_systematic_and_zero_syndrome(msg):
    cw = rs_encode(msg, RS6448)
    assert list(cw[:48]) == msg
    assert not any(rs_syndromes(cw, RS6448))


def test_config_validation():
    for n, k in [(0, 0), (10, 11), (256, 200), (5, 0)]:
        with pytest.raises(ValueError):
            RsConfig(n, k)
    assert RS6448.min_distance == 17


# -- decoder -----------------------------------------------------------------------

def test_decode_clean():
    out = rs_decode(rs_encode(range(6), RS86), (), RS86)
    assert out.ok and out.message == bytes(range(6)) and out.errors_found == 0


def test_rs86_every_single_symbol_error():
    msg = [10, 20, 30, 40, 50, 60]
    cw = list(rs_encode(msg, RS86))
    rows = []
    for pos in range(8):
        for delta in range(1, 256):
            w = cw.copy()
            w[pos] ^= delta
            rows.append(w)
    res = decode_rows(np.array(rows, dtype=np.uint8), None, RS86)
    assert res.ok.all() and (res.messages == msg).all() and (res.errors_found == 1).all()
    for w in rows[::97]:
        assert rs_decode(w, (), RS86).message == bytes(msg)


def test_rs86_zeroed_last_symbol_as_erasure():
    cw = list(rs_encode([7, 0, 255, 1, 2, 3], RS86))
    cw[-1] = 0
    out = rs_decode(cw, {7}, RS86)
    assert out.ok and out.message == bytes([7, 0, 255, 1, 2, 3]) and out.erasures_used == 1


def test_too_many_erasures_is_an_error():
    with pytest.raises(ValueError):
        rs_decode(bytes(8), {0, 1, 2}, RS86)
    with pytest.raises(ValueError):
        decode_rows(np.zeros((1, 8), np.uint8), [0, 1, 2], RS86)
    with pytest.raises(ValueError):
        rs_decode(bytes(8), {8}, RS86)


def _corrupt(rng, cw, n, e, f):
    pos = rng.choice(n, e + f, replace=False)
    w = cw.copy()
    w[pos] ^= rng.integers(1, 256, e + f).astype(np.uint8)
    # an erased position may or may not have been altered
    er = pos[e:]
    keep = rng.random(f) < 0.3
    w[er[keep]] = cw[er[keep]]
    return w, er


@pytest.mark.parametrize("cfg", [RS86, RS6448, RsConfig(30, 20, first_root_exponent=1)])
def test_errors_and_erasures_within_bound(cfg):
    rng = np.random.default_rng(1)
    nsym = cfg.nsym
    for _ in range(150):
        msg = rng.integers(0, 256, cfg.k).astype(np.uint8)
        cw = np.frombuffer(rs_encode(msg.tolist(), cfg), np.uint8)
        f = int(rng.integers(0, nsym + 1))
        e = int(rng.integers(0, (nsym - f) // 2 + 1))
        w, er = _corrupt(rng, cw, cfg.n, e, f)
        out = rs_decode(w.tolist(), er.tolist(), cfg)
        assert out.ok and out.message == msg.tobytes()
        assert 2 * out.errors_found + out.erasures_used <= nsym
        emask = np.zeros((1, cfg.n), bool)
        emask[0, er] = True
        res = decode_rows(w[None, :], emask, cfg)
        assert res.ok[0] and (res.messages[0] == msg).all()


def test_beyond_bound_is_flagged_or_miscorrected_to_a_codeword():
    rng = np.random.default_rng(2)
    msg = rng.integers(0, 256, 48).astype(np.uint8)
    cw = np.frombuffer(rs_encode(msg.tolist(), RS6448), np.uint8)
    flagged = 0
    for _ in range(40):
        w = cw.copy()
        pos = rng.choice(64, 9, replace=False)
        w[pos] ^= rng.integers(1, 256, 9).astype(np.uint8)
        out = rs_decode(w.tolist(), (), RS6448)
        if not out.ok:
            flagged += 1
        else:
            assert out.message != msg.tobytes()
            assert not any(rs_syndromes(rs_encode(out.message, RS6448), RS6448))
    assert flagged > 30


def test_batch_matches_scalar_decoder():
    rng = np.random.default_rng(3)
    msgs = rng.integers(0, 256, (200, 48)).astype(np.uint8)
    words = encode_rows(msgs)
    for i in range(200):
        assert words[i].tobytes() == rs_encode(msgs[i].tolist(), RS6448)
    noisy = words.copy()
    counts = rng.integers(0, 12, 200)
    for i, c in enumerate(counts):
        pos = rng.choice(64, c, replace=False)
        noisy[i, pos] ^= rng.integers(1, 256, c).astype(np.uint8)
    res = decode_rows(noisy)
    for i in range(200):
        ref = rs_decode(noisy[i].tolist(), (), RS6448)
        assert bool(res.ok[i]) == ref.ok
        if ref.ok:
            assert res.messages[i].tobytes() == ref.message
            assert res.errors_found[i] == ref.errors_found
    assert res.ok[counts <= 8].all()


def test_minimum_distance_rs86():
    rng = np.random.default_rng(4)
    msgs = rng.integers(0, 256, (3000, 6)).astype(np.uint8)
    words = encode_rows(msgs, RS86)
    a, b = words[:1500], words[1500:]
    diff = (a != b).sum(1)[(msgs[:1500] != msgs[1500:]).any(1)]
    assert diff.min() >= 3
    # near collisions: messages differing in a single symbol are still distance >= 3
    base = words[0]
    for pos in range(6):
        for d in range(1, 256):
            m = msgs[0].copy()
            m[pos] ^= d
            assert (np.frombuffer(rs_encode(m.tolist(), RS86), np.uint8) != base).sum() >= 3


@given(st.binary(min_size=6, max_size=6), st.data())
def test_property_rs86_roundtrip(msg, data):
    cw = bytearray(rs_encode(msg, RS86))
    f = data.draw(st.integers(0, 2))
    e = data.draw(st.integers(0, (2 - f) // 2))
    pos = data.draw(st.lists(st.integers(0, 7), min_size=e + f, max_size=e + f, unique=True))
    for p in pos:
        cw[p] ^= data.draw(st.integers(1, 255))
    out = rs_decode(cw, pos[e:], RS86)
    assert out.ok and out.message == msg
