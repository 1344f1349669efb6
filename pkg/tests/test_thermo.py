import hashlib
import itertools
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import gapless_dg_literal
from rsdna.base_map import decode_bases, reverse_complement
from rsdna.errors import FormatError
from rsdna.thermo import (ThermoConfig, default_table, duplex_enthalpy_entropy, hybridization_dg,
                          melting_temperature, mfe, mfe_statistics, parse_nn_table, tm_from_parameters)

TABLE_SHA256 = "c4e165286fd377b8a139f82d0e12ffe29444f867ad624071f488545b1fbc6b4d"
T = ThermoConfig()
dna = st.text(alphabet="ACGT", min_size=2, max_size=30)


def stack_dg():
    t = default_table()
    return {k: dh - T.temperature * ds / 1000 for k, (dh, ds) in t.stacks.items()}


def test_table_checksum_and_shape():
    raw = resources.files("rsdna").joinpath("data", "unified_nn.tsv").read_bytes()
    assert hashlib.sha256(raw).hexdigest() == TABLE_SHA256
    t = default_table()
    assert len(t.stacks) == 16
    for step in t.stacks:
        assert t.stacks[step] == t.stacks[reverse_complement(step)]


def test_table_format_errors():
    with pytest.raises(FormatError):
        parse_nn_table("AA\t1\n")
    with pytest.raises(FormatError):
        parse_nn_table("AA\tx\t1\n")
    with pytest.raises(FormatError):
        parse_nn_table("AA\t1\t1\ninit_GC\t0\t0\ninit_AT\t0\t0\nsymmetry\t0\t0\n")


def test_enthalpy_entropy_by_hand():
    # AA: one AA/TT stack plus two A.T initiations
    assert duplex_enthalpy_entropy("AA") == pytest.approx((-7.9 + 2 * 2.3, -22.2 + 2 * 4.1))
    # ATAT is self-complementary and gets the symmetry entropy; ATAG does not
    dh, ds = duplex_enthalpy_entropy("ATAT")
    assert ds == pytest.approx(-20.4 - 21.3 - 20.4 + 2 * 4.1 - 1.4)
    dh2, ds2 = duplex_enthalpy_entropy("ATAG")
    assert ds2 == pytest.approx(-20.4 - 21.3 - 21.0 + 4.1 - 2.8)
    with pytest.raises(ValueError):
        duplex_enthalpy_entropy("A")


def test_tm_arithmetic_fixture():
    assert tm_from_parameters(-80.0, -220.0, ThermoConfig(strand_concentration=1.0)) == pytest.approx(90.49, abs=0.01)


# values worked out by hand from the parameter file, C_T = 250 nM, R = 1.987
REFERENCE_TM = {"CGTTGA": 9.8054, "ACGTACGT": 31.0269, "GGACTTCAGG": 43.4575}


@pytest.mark.parametrize("seq", sorted(REFERENCE_TM))
def test_tm_reference_oligos(seq):
    assert melting_temperature(seq) == pytest.approx(REFERENCE_TM[seq], abs=0.1)


def test_tm_concentration_divisor():
    t1 = melting_temperature("GGACTTCAGG", config=ThermoConfig(concentration_divisor=4))
    assert t1 < REFERENCE_TM["GGACTTCAGG"]
    with pytest.raises(ValueError):
        ThermoConfig(strand_concentration=0)


@given(dna)
def test_tm_and_parameters_reverse_complement_invariant(seq):
    rc = reverse_complement(seq)
    assert duplex_enthalpy_entropy(seq) == pytest.approx(duplex_enthalpy_entropy(rc))
    assert melting_temperature(seq) == pytest.approx(melting_temperature(rc))


def test_hybridization_examples():
    assert hybridization_dg("GGGG", reverse_complement("GGGG")) < 0
    assert hybridization_dg("AAAA", "AAAA") == 0.0
    assert hybridization_dg("A", "T") == 0.0


@given(dna, dna)
def test_hybridization_matches_offset_oracle(u, v):
    d = hybridization_dg(u, v)
    assert d <= 0
    assert d == pytest.approx(gapless_dg_literal(u, v, stack_dg()), abs=1e-9)


def test_mfe_composition():
    u = v = "GCGC"
    expect = min(hybridization_dg(u, v), hybridization_dg(u, reverse_complement(v)),
                 hybridization_dg(reverse_complement(u), reverse_complement(v)))
    assert mfe(u, v) == expect
    assert mfe("A", "C") == 0.0


@given(dna, dna)
def test_mfe_bounded_by_dg(u, v):
    assert mfe(u, v) <= hybridization_dg(u, v)


def test_gc_duplex_more_stable_than_at():
    gc_dg = [hybridization_dg(s, reverse_complement(s)) for s in map("".join, itertools.product("GC", repeat=6))]
    at_dg = [hybridization_dg(s, reverse_complement(s)) for s in map("".join, itertools.product("AT", repeat=6))]
    assert max(gc_dg) < min(at_dg)


def test_extending_a_perfect_duplex_never_weakens_it():
    rng = np.random.default_rng(0)
    sdg = stack_dg()
    for _ in range(200):
        s = decode_bases(rng.integers(0, 4, 8))
        for b in "ACGT":
            longer = s + b
            if sdg[longer[-2:]] < 0:
                assert hybridization_dg(longer, reverse_complement(longer)) <= hybridization_dg(s, reverse_complement(s))


def test_mfe_statistics():
    mean, std = mfe_statistics(["GCGCATAT"])
    assert std == 0 and mean == pytest.approx(mfe("GCGCATAT", "GCGCATAT") / 8)
    assert mfe_statistics(["GCGCATAT"] * 2) == (mean, 0.0)
    seqs = ["ACGTTGCA", "GGGGCCCCAA", "ATATATAT"]
    per = [mfe(s, s) / len(s) for s in seqs]
    m, sd = mfe_statistics(seqs)
    assert m == pytest.approx(sum(per) / 3)
    assert sd == pytest.approx((sum((x - m) ** 2 for x in per) / 3) ** 0.5)
    with pytest.raises(ValueError):
        mfe_statistics([])
