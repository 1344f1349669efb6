"""Nearest-neighbour melting temperature and a gapless-duplex free-energy model.

Free energies come from stacking terms only: two strands are slid against each
other antiparallel, every run of adjacent Watson-Crick pairs contributes one
``dH - T*dS`` term per stack, and the best offset wins.  No loops, bulges or
mismatches are scored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .base_map import BASES, encode_bases, reverse_complement, validate_dna
from .errors import FormatError

TABLE_RESOURCE = "unified_nn.tsv"


@dataclass(frozen=True)
class NnParameterTable:
    stacks: dict[str, tuple[float, float]]
    init_gc: tuple[float, float]
    init_at: tuple[float, float]
    symmetry: tuple[float, float]

    def __post_init__(self):
        steps = {a + b for a in BASES for b in BASES}
        missing = steps - set(self.stacks)
        if missing:
            raise FormatError(f"missing stack steps: {sorted(missing)}")
        for step in steps:
            if self.stacks[step] != self.stacks[reverse_complement(step)]:
                raise FormatError(f"stack {step} differs from its reverse complement")

    def step_matrix(self, temperature: float) -> np.ndarray:
        """4x4 matrix of stack free energies (kcal/mol) indexed by base codes."""
        out = np.empty((4, 4))
        for i, a in enumerate(BASES):
            for j, b in enumerate(BASES):
                dh, ds = self.stacks[a + b]
                out[i, j] = dh - temperature * ds / 1000.0
        return out


@dataclass(frozen=True)
class ThermoConfig:
    gas_constant: float = 1.987
    strand_concentration: float = 250e-9
    concentration_divisor: float = 1.0
    temperature: float = 310.15

    def __post_init__(self):
        if self.strand_concentration <= 0 or self.concentration_divisor <= 0:
            raise ValueError("strand concentration and divisor must be positive")


def parse_nn_table(text: str) -> NnParameterTable:
    values: dict[str, tuple[float, float]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected 3 tab-separated fields")
        try:
            values[parts[0]] = (float(parts[1]), float(parts[2]))
        except ValueError:
            raise FormatError(f"line {lineno}: non-numeric parameter") from None
    try:
        specials = [values.pop(k) for k in ("init_GC", "init_AT", "symmetry")]
    except KeyError as exc:
        raise FormatError(f"missing record {exc.args[0]}") from None
    return NnParameterTable(values, *specials)


@lru_cache(maxsize=None)
def default_table() -> NnParameterTable:
    return parse_nn_table(resources.files("rsdna").joinpath("data").joinpath(TABLE_RESOURCE).read_text())


def load_nn_table(path: str | Path | None = None) -> NnParameterTable:
    if path is None:
        return default_table()
    return parse_nn_table(Path(path).read_text())


def duplex_enthalpy_entropy(seq: str, table: NnParameterTable | None = None) -> tuple[float, float]:
    """Total dH (kcal/mol) and dS (cal/(K*mol)) of ``seq`` paired with its complement."""
    table = table or default_table()
    validate_dna(seq)
    if len(seq) < 2:
        raise ValueError("need at least two bases for a nearest-neighbour duplex")
    dh = ds = 0.0
    for i in range(len(seq) - 1):
        h, s = table.stacks[seq[i : i + 2]]
        dh += h
        ds += s
    for end in (seq[0], seq[-1]):
        h, s = table.init_gc if end in "GC" else table.init_at
        dh += h
        ds += s
    if seq == reverse_complement(seq):
        dh += table.symmetry[0]
        ds += table.symmetry[1]
    return dh, ds


def tm_from_parameters(delta_h: float, delta_s: float, config: ThermoConfig = ThermoConfig()) -> float:
    denom = delta_s + config.gas_constant * math.log(config.strand_concentration / config.concentration_divisor)
    if denom == 0 or not math.isfinite(denom):
        raise ArithmeticError("degenerate Tm denominator")
    return delta_h * 1000.0 / denom - 273.15


def melting_temperature(seq: str, table: NnParameterTable | None = None,
                        config: ThermoConfig = ThermoConfig()) -> float:
    dh, ds = duplex_enthalpy_entropy(seq, table)
    return tm_from_parameters(dh, ds, config)


def hybridization_dg(u: str, v: str, table: NnParameterTable | None = None,
                     config: ThermoConfig = ThermoConfig()) -> float:
    """Most negative stacking free energy of ``u`` against ``v`` over all gapless offsets."""
    table = table or default_table()
    a, b = encode_bases(u), encode_bases(v)
    if len(a) < 2 or len(b) < 2:
        return 0.0
    paired = (a[:, None].astype(np.int16) + b[None, :]) == 3
    # stack between pairs (i, j) and (i + 1, j - 1) of the antiparallel alignment
    stacked = paired[:-1, 1:] & paired[1:, :-1]
    if not stacked.any():
        return 0.0
    step = table.step_matrix(config.temperature)[a[:-1], a[1:]]
    ii, jj = np.nonzero(stacked)
    per_offset = np.bincount(ii + jj, weights=step[ii], minlength=len(a) + len(b))
    return float(min(0.0, per_offset.min()))


def mfe(u: str, v: str, table: NnParameterTable | None = None,
        config: ThermoConfig = ThermoConfig()) -> float:
    """min of dG(u, v), dG(u, v'), dG(u', v') with x' the complementary strand of x."""
    uc, vc = reverse_complement(u), reverse_complement(v)
    return min(hybridization_dg(u, v, table, config),
               hybridization_dg(u, vc, table, config),
               hybridization_dg(uc, vc, table, config))


def mfe_statistics(seqs: list[str], table: NnParameterTable | None = None,
                   config: ThermoConfig = ThermoConfig()) -> tuple[float, float]:
    """Mean and population std of per-nucleotide MFE, each strand against itself."""
    if not seqs:
        raise ValueError("need at least one sequence")
    per_nt = np.array([mfe(s, s, table, config) / len(s) for s in seqs])
    return float(per_nt.mean()), float(per_nt.std())
