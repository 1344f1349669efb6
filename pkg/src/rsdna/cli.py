"""``rsdna`` command-line tool.

Exit codes:
    0  success
    2  bad arguments or configuration
    3  file could not be read or written
    4  model does not match the package or the configuration
    5  at least one row was uncorrectable
    6  malformed input (FASTA, manifest, model file)
    7  training diverged

Configuration precedence is command-line flags, then the file given with
``--config`` (or named by ``$RSDNA_CONFIG``), then built-in defaults.
Output files are written to a temporary name and renamed on success.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .ablation import corpus_rows, variant_settings
from .channel_eval import (ALL_METRICS, ChannelConfig, evaluate_roundtrip, metrics_report, rate_sweep,
                           reconstruction_text, sweep_csv)
from .config import ENV_VAR, Settings, load_settings
from .errors import ConfigurationError, FormatError, TrainingError
from .fasta import parse_fasta
from .learner.serialize import MODEL_FORMAT_VERSION, atomic_write, load_model, save_model
from .learner.train import train
from .pipeline import MANIFEST_VERSION, PipelineConfig, decode, encode, read_package, write_package

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MODEL = 4
EXIT_UNCORRECTABLE = 5
EXIT_FORMAT = 6
EXIT_DIVERGED = 7


class UsageError(Exception):
    pass


class ModelMismatch(Exception):
    pass


def _err(msg: str) -> None:
    print(f"rsdna: {msg}", file=sys.stderr)


def _read_bytes(path) -> bytes:
    return Path(path).read_bytes()


def _load_model(path):
    try:
        return load_model(path)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def _pipeline(settings: Settings, mode: str, model_path) -> PipelineConfig:
    if mode == "learned" and not model_path:
        raise UsageError("learned mode requires --model")
    model = _load_model(model_path) if mode == "learned" else None
    try:
        return PipelineConfig(settings.rs, settings.rows_per_block, mode, settings.mask, model)
    except ConfigurationError as exc:
        raise ModelMismatch(str(exc)) from None


def _settings(args) -> Settings:
    s = load_settings(args.config)
    if getattr(args, "mode", None):
        s = replace(s, mode=args.mode)
    return s


# -- commands ----------------------------------------------------------------

def cmd_encode(args) -> int:
    s = _settings(args)
    config = _pipeline(s, s.mode, args.model)
    package = encode(_read_bytes(args.input), config)
    write_package(package, args.output)
    print(f"wrote {len(package.sequences)} sequences ({package.total_nt} nt, "
          f"{package.net_density:.4f} bits/nt) to {args.output}")
    return EXIT_OK


def cmd_decode(args) -> int:
    _settings(args)
    package = read_package(args.input)
    model = None
    if package.header.mode == "learned":
        if not args.model:
            raise UsageError("package was written in learned mode; --model is required")
        model = _load_model(args.model)
    try:
        data, report = decode(package, model)
    except ConfigurationError as exc:
        raise ModelMismatch(str(exc)) from None
    print(report.summary())
    if not report.all_ok:
        print("failed_rows=" + ";".join(f"b{b}_r{r}" for b, r in report.failed_rows))
        if args.allow_partial:
            atomic_write(args.output, data)
        return EXIT_UNCORRECTABLE
    atomic_write(args.output, data)
    return EXIT_OK


def _metric_list(text: str) -> tuple[str, ...]:
    names = tuple(m.strip() for m in text.split(",") if m.strip())
    unknown = [m for m in names if m not in ALL_METRICS]
    if unknown or not names:
        raise UsageError(f"unknown metric(s): {', '.join(unknown) or '(none given)'}; "
                         f"choose from {','.join(ALL_METRICS)}")
    return names


def cmd_analyze(args) -> int:
    s = _settings(args)
    metrics = _metric_list(args.metrics)
    if args.window < 1:
        raise UsageError("--window must be positive")
    text = Path(args.input).read_text(encoding="ascii", errors="replace")
    records = parse_fasta(text)
    if not records:
        raise FormatError(f"{args.input}: no FASTA records")
    empty = [name for name, seq in records if not seq]
    if empty:
        raise FormatError(f"{args.input}: record {empty[0]!r} has no sequence")
    report = metrics_report([seq for _, seq in records], metrics, s.thermo, s.hairpin, args.window)
    out = report.to_text()
    if args.report:
        atomic_write(args.report, out.encode("ascii"))
    else:
        sys.stdout.write(out)
    if args.local_gc_csv:
        atomic_write(args.local_gc_csv, report.local_gc_csv().encode("ascii"))
    return EXIT_OK


def cmd_train(args) -> int:
    s = _settings(args)
    tc = s.train
    if args.epochs is not None:
        tc = replace(tc, epochs=args.epochs)
    if args.seed is not None:
        tc = replace(tc, seed=args.seed)
    if s.model.tokens_in != s.rs.n:
        raise UsageError(f"model tokens_in {s.model.tokens_in} differs from RS length {s.rs.n}")
    data = _read_bytes(args.corpus)
    if not data:
        raise UsageError(f"{args.corpus}: corpus is empty")
    rows = corpus_rows(data, s.rs, s.rows_per_block)
    mask = s.mask
    if mask is None:
        mask, _ = variant_settings("full", s.model, s.loss)

    def progress(epoch, loss, _params):
        print(f"epoch={epoch} loss={loss:.6g}", flush=True)

    result = train(rows, s.model, tc, s.loss, mask, progress=progress)
    trace = "epoch,loss\n" + f"initial,{result.initial_loss:.17g}\n" + "".join(
        f"{i},{v:.17g}\n" for i, v in enumerate(result.loss_trace)) + f"final,{result.final_loss:.17g}\n"
    trace_path = args.trace or f"{args.out_model}.trace.csv"
    digest = save_model(result.params, args.out_model)
    atomic_write(trace_path, trace.encode("ascii"))
    print(f"initial_loss={result.initial_loss:.6g} final_loss={result.final_loss:.6g} model_sha256={digest}")
    return EXIT_OK


def _rate(text: str) -> float:
    try:
        r = float(text)
    except ValueError:
        raise UsageError(f"error rate {text!r} is not a number") from None
    if not 0.0 <= r <= 1.0:
        raise UsageError(f"error rate {r} outside [0, 1]")
    return r


def cmd_simulate(args) -> int:
    s = _settings(args)
    config = _pipeline(s, s.mode, args.model)
    seed = s.channel.seed if args.seed is None else args.seed
    data = _read_bytes(args.input)
    if args.sweep:
        rates = [_rate(r) for r in args.sweep.split(",") if r.strip()]
        if args.error_rate is not None:
            _rate(args.error_rate)
        out = sweep_csv(rate_sweep(data, config, rates, seed))
    else:
        rate = s.channel.substitution_rate if args.error_rate is None else _rate(args.error_rate)
        out = reconstruction_text(evaluate_roundtrip(data, config, ChannelConfig(rate, seed)))
    if args.report:
        atomic_write(args.report, out.encode("ascii"))
    else:
        sys.stdout.write(out)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rsdna", formatter_class=argparse.RawDescriptionHelpFormatter,
        description="Store files as DNA sequences with Reed-Solomon protection.",
        epilog=f"A default configuration file may be named by ${ENV_VAR}.")
    p.add_argument("--version", action="version",
                   version=f"rsdna {__version__}\nmanifest format {MANIFEST_VERSION}\nmodel format {MODEL_FORMAT_VERSION}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help=f"INI configuration file (default: ${ENV_VAR})")

    e = sub.add_parser("encode", help="file -> manifest + FASTA")
    e.add_argument("--input", required=True)
    e.add_argument("--output", required=True, help="output directory")
    e.add_argument("--mode", choices=("identity", "learned"))
    e.add_argument("--model")
    common(e)
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="manifest + FASTA -> file")
    d.add_argument("--input", required=True, help="package directory")
    d.add_argument("--output", required=True)
    d.add_argument("--model")
    d.add_argument("--allow-partial", action="store_true",
                   help="write the output even when rows are uncorrectable (exit code stays 5)")
    common(d)
    d.set_defaults(func=cmd_decode)

    a = sub.add_parser("analyze", help="sequence statistics of a FASTA file")
    a.add_argument("--input", required=True)
    a.add_argument("--metrics", default=",".join(ALL_METRICS))
    a.add_argument("--window", type=int, default=20)
    a.add_argument("--report")
    a.add_argument("--local-gc-csv")
    common(a)
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("train", help="train the learned transcoder")
    t.add_argument("--corpus", required=True)
    t.add_argument("--out-model", required=True)
    t.add_argument("--trace", help="loss trace CSV (default: <out-model>.trace.csv)")
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)
    common(t)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("simulate", help="encode, inject substitutions, decode and score")
    s.add_argument("--input", required=True)
    s.add_argument("--error-rate")
    s.add_argument("--seed", type=int)
    s.add_argument("--sweep", help="comma-separated error rates")
    s.add_argument("--mode", choices=("identity", "learned"))
    s.add_argument("--model")
    s.add_argument("--report")
    common(s)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _err(str(exc))
        return EXIT_USAGE
    except ModelMismatch as exc:
        _err(str(exc))
        return EXIT_MODEL
    except ConfigurationError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except FormatError as exc:
        _err(str(exc))
        return EXIT_FORMAT
    except TrainingError as exc:
        _err(str(exc))
        return EXIT_DIVERGED
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
