"""Substitution channel, round-trip scoring, sequence statistics and timing."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .base_map import decode_bases, encode_bases
from .bio_metrics import HairpinParams, gc_content, hairpin_counts, homopolymer_runs, local_gc
from .learner.losses import MaskSpec
from .learner.model import ModelParameters, bits_to_symbols, decode_block, encode_block, quantize, symbols_to_bits
from .pipeline import PipelineConfig, StoragePackage, decode, decode_messages, encode, pack_file
from .thermo import NnParameterTable, ThermoConfig, melting_temperature, mfe

ALL_METRICS = ("gc", "tm", "mfe", "hairpin", "homopolymer")


@dataclass(frozen=True)
class ChannelConfig:
    substitution_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.substitution_rate <= 1.0:
            raise ValueError(f"substitution rate {self.substitution_rate} outside [0, 1]")


def inject_substitutions(package: StoragePackage, channel: ChannelConfig) -> StoragePackage:
    """Replace each base, independently with the channel rate, by one of the three other bases."""
    seqs = [s for _, _, s in package.sequences]
    if not seqs:
        return StoragePackage(package.header, [])
    codes = encode_bases("".join(seqs))
    rng = np.random.default_rng(channel.seed)
    hit = rng.random(codes.size) < channel.substitution_rate
    shift = rng.integers(1, 4, codes.size)
    codes = np.where(hit, (codes + shift) % 4, codes).astype(np.uint8)
    text = decode_bases(codes)
    out, pos = [], 0
    for b, r, s in package.sequences:
        out.append((b, r, text[pos : pos + len(s)]))
        pos += len(s)
    return StoragePackage(package.header, out)


# -- round trip --------------------------------------------------------------

@dataclass
class ReconstructionReport:
    reconstruction_rate: float
    block_failure_rate: float
    row_ok: np.ndarray = field(repr=False)
    substitution_rate: float = 0.0

    @property
    def failed_rows(self) -> list[tuple[int, int]]:
        return [(int(b), int(r)) for b, r in np.argwhere(~self.row_ok)]


def evaluate_roundtrip(data: bytes, config: PipelineConfig = PipelineConfig(),
                       channel: ChannelConfig = ChannelConfig()) -> ReconstructionReport:
    """encode -> channel -> decode, scored against the source.

    A row counts as failed when the RS decoder flags it or when its decoded
    message differs from the original (a silent miscorrection).
    """
    package = inject_substitutions(encode(data, config), channel)
    return score_package(data, package, config, channel.substitution_rate)


def score_package(data: bytes, package: StoragePackage, config: PipelineConfig,
                  rate: float = 0.0) -> ReconstructionReport:
    words, header = pack_file(data, config)
    messages, report = decode_messages(package, config.model)
    original = words[..., : config.rs.k].reshape(-1, config.rs.k)
    row_ok = (report.ok.reshape(-1) & (messages == original).all(axis=1)).reshape(report.ok.shape)
    got = messages.reshape(-1)[: len(data)]
    src = np.frombuffer(data, dtype=np.uint8)
    recon = float((got == src).mean()) if len(data) else 1.0
    blocks = row_ok.shape[0]
    bfr = float((~row_ok.all(axis=1)).mean()) if blocks else 0.0
    return ReconstructionReport(recon, bfr, row_ok, rate)


def rate_sweep(data: bytes, config: PipelineConfig, rates, seed: int = 0) -> list[ReconstructionReport]:
    package = encode(data, config)
    return [score_package(data, inject_substitutions(package, ChannelConfig(r, seed)), config, r) for r in rates]


# -- statistics --------------------------------------------------------------

@dataclass
class MetricsReport:
    sequences: int
    total_nt: int
    gc_ave: float | None = None
    gc_std: float | None = None
    tm_ave: float | None = None
    tm_std: float | None = None
    mfe_ave: float | None = None
    mfe_std: float | None = None
    homopolymer_max: int | None = None
    homopolymer_hist: dict[int, int] | None = None
    hairpin_total: int | None = None
    net_information_density: float | None = None
    encode_bps: float | None = None
    decode_bps: float | None = None
    # (record index, window start, GC percent)
    local_gc: list[tuple[int, int, float]] = field(default_factory=list, repr=False)

    def to_text(self) -> str:
        """``key=value`` lines; absent statistics are written as ``na``."""
        out = []
        for key in ("sequences", "total_nt", "gc_ave", "gc_std", "tm_ave", "tm_std", "mfe_ave", "mfe_std",
                    "homopolymer_max", "hairpin_total", "net_information_density", "encode_bps", "decode_bps"):
            v = getattr(self, key)
            out.append(f"{key}={_fmt(v)}")
        hist = self.homopolymer_hist
        out.append("homopolymer_hist=" + (",".join(f"{k}:{v}" for k, v in sorted(hist.items())) if hist else "na"))
        if self.local_gc:
            pct = [p for _, _, p in self.local_gc]
            out.append(f"local_gc_windows={len(pct)}")
            out.append(f"local_gc_min={_fmt(min(pct))}")
            out.append(f"local_gc_max={_fmt(max(pct))}")
        return "\n".join(out) + "\n"

    def local_gc_csv(self) -> str:
        return "record,position,gc_percent\n" + "".join(f"{i},{s},{p:.4f}\n" for i, s, p in self.local_gc)


def _fmt(v) -> str:
    if v is None:
        return "na"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _mean_std(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=float)
    return float(a.mean()), float(a.std())


def metrics_report(sequences: list[str], metrics=ALL_METRICS, thermo: ThermoConfig = ThermoConfig(),
                   hairpin: HairpinParams = HairpinParams(), window: int = 20,
                   table: NnParameterTable | None = None, source_bytes: int | None = None) -> MetricsReport:
    """Aggregate statistics over ``sequences``; std values are population standard deviations."""
    if not sequences:
        raise ValueError("no sequences to analyse")
    unknown = set(metrics) - set(ALL_METRICS)
    if unknown:
        raise ValueError(f"unknown metric(s): {', '.join(sorted(unknown))}")
    total = sum(map(len, sequences))
    rep = MetricsReport(len(sequences), total)
    if source_bytes is not None:
        rep.net_information_density = 8 * source_bytes / total
    if "gc" in metrics:
        rep.gc_ave, rep.gc_std = _mean_std([gc_content(s) for s in sequences])
        for i, s in enumerate(sequences):
            if len(s) >= window:
                rep.local_gc.extend((i, st, p) for st, p in local_gc(s, window).window_series)
    if "tm" in metrics:
        rep.tm_ave, rep.tm_std = _mean_std([melting_temperature(s, table, thermo) for s in sequences])
    if "mfe" in metrics:
        rep.mfe_ave, rep.mfe_std = _mean_std([mfe(s, s, table, thermo) / len(s) for s in sequences])
    if "homopolymer" in metrics:
        hist = Counter(r for s in sequences for r in homopolymer_runs(s))
        rep.homopolymer_hist = dict(sorted(hist.items()))
        rep.homopolymer_max = max(hist)
    if "hairpin" in metrics:
        by_len: dict[int, list[str]] = {}
        for s in sequences:
            by_len.setdefault(len(s), []).append(s)
        rep.hairpin_total = int(sum(
            hairpin_counts(np.stack([encode_bases(s) for s in group]), hairpin).sum()
            for group in by_len.values()))
    return rep


def package_metrics(package: StoragePackage, metrics=ALL_METRICS, **kwargs) -> MetricsReport:
    if not package.sequences:
        raise ValueError("empty package")
    return metrics_report([s for _, _, s in package.sequences], metrics,
                          source_bytes=package.header.length, **kwargs)


# -- learner diagnostics -----------------------------------------------------

@dataclass
class MaskConcentration:
    per_position: np.ndarray   # symbol error rate of each of the tokens_in positions
    masked: tuple[int, ...]
    masked_rate: float
    unmasked_rate: float

    @property
    def ratio(self) -> float:
        if self.unmasked_rate == 0:
            return float("inf") if self.masked_rate > 0 else 1.0
        return self.masked_rate / self.unmasked_rate


def mask_concentration(rows: np.ndarray, model: ModelParameters, mask: MaskSpec) -> MaskConcentration:
    """Where the encode/decode round trip of the model puts its symbol errors."""
    rows = np.asarray(rows, dtype=np.uint8)
    rep = quantize(encode_block(symbols_to_bits(rows), model))
    rec = bits_to_symbols(quantize(decode_block(rep, model)))
    per_pos = (rec != rows).mean(axis=0)
    idx = mask.resolve(rows.shape[1])
    keep = np.ones(rows.shape[1], dtype=bool)
    keep[list(idx)] = False
    masked = float(per_pos[~keep].mean()) if idx else 0.0
    return MaskConcentration(per_pos, idx, masked, float(per_pos[keep].mean()))


# -- timing ------------------------------------------------------------------

def measure_throughput(data: bytes, config: PipelineConfig = PipelineConfig(), repeats: int = 3) -> tuple[float, float]:
    """Median (encode, decode) throughput in source bits per second."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    enc, dec = [], []
    package = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        package = encode(data, config)
        t1 = time.perf_counter()
        decode(package, config.model)
        t2 = time.perf_counter()
        enc.append(t1 - t0)
        dec.append(t2 - t1)
    bits = 8 * len(data)
    return bits / max(float(np.median(enc)), 1e-12), bits / max(float(np.median(dec)), 1e-12)


def sweep_csv(reports: list[ReconstructionReport]) -> str:
    return "substitution_rate,reconstruction_rate,block_failure_rate\n" + "".join(
        f"{r.substitution_rate:g},{r.reconstruction_rate:.6f},{r.block_failure_rate:.6f}\n" for r in reports)


def reconstruction_text(r: ReconstructionReport) -> str:
    failed = ";".join(f"b{b}_r{w}" for b, w in r.failed_rows) or "-"
    return (f"substitution_rate={r.substitution_rate:g}\nreconstruction_rate={r.reconstruction_rate:.6f}\n"
            f"block_failure_rate={r.block_failure_rate:.6f}\nfailed_rows={failed}\n")
