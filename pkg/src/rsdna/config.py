"""INI configuration file for the command-line tool.

Every section and key is optional; anything absent keeps its built-in
default.  Unknown sections or keys are rejected.  Example::

    [pipeline]
    mode = learned
    rs_n = 64
    rs_k = 48
    rows_per_block = 32
    # comma-separated symbol positions, "none", or "default"
    mask = default

    [model]
    hidden_dim = 32
    seed = 0

    [loss]
    alpha = 16.67
    beta = 0.058

    [train]
    learning_rate = 0.001
    epochs = 2
    max_stem = 6

    [channel]
    substitution_rate = 0.01
    seed = 0

    [hairpin]
    s_min = 3

    [thermo]
    strand_concentration = 2.5e-7

Sections map to ``PipelineConfig`` / ``RsConfig`` ([pipeline]),
``ModelConfig``, ``LossWeights``, ``TrainConfig`` plus its surrogate
settings ``tau``, ``max_stem``, ``normalize_hairpin`` ([train]),
``ChannelConfig``, ``HairpinParams`` and ``ThermoConfig``.  The hairpin
section feeds both the analysis metrics and the training surrogate.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .bio_metrics import HairpinParams
from .channel_eval import ChannelConfig
from .errors import ConfigurationError
from .gf_rs import RsConfig
from .learner.losses import LossWeights, MaskSpec
from .learner.model import ModelConfig
from .learner.train import TrainConfig
from .pipeline import MODES
from .thermo import ThermoConfig

ENV_VAR = "RSDNA_CONFIG"


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(conv):
    def parse(text: str):
        return None if text.strip().lower() in ("none", "") else conv(text)
    return parse


def _mask(text: str) -> MaskSpec | None:
    t = text.strip().lower()
    if t == "default":
        return None
    if t == "none":
        return MaskSpec.none()
    return MaskSpec(tuple(int(v) for v in t.split(",")))


def _converters(cls, **special) -> dict:
    """Key -> parser for every field of ``cls`` whose default is a plain scalar."""
    out = {}
    for f in fields(cls):
        if f.name in special:
            continue
        default = getattr(cls(), f.name)
        if isinstance(default, bool):
            out[f.name] = _bool
        elif isinstance(default, (int, float, str)):
            out[f.name] = type(default)
    out.update(special)
    return out


_PIPELINE_KEYS = {"mode": str, "rs_n": int, "rs_k": int, "first_root_exponent": int,
                  "rows_per_block": int, "mask": _mask}
_SURROGATE_KEYS = {"tau": float, "max_stem": _optional(int), "normalize_hairpin": _bool}

SECTIONS = {
    "pipeline": _PIPELINE_KEYS,
    "model": _converters(ModelConfig),
    "loss": _converters(LossWeights),
    "train": {**_converters(TrainConfig, clip_norm=_optional(float)), **_SURROGATE_KEYS},
    "channel": _converters(ChannelConfig),
    "hairpin": _converters(HairpinParams),
    "thermo": _converters(ThermoConfig),
}


@dataclass(frozen=True)
class Settings:
    """Resolved configuration; ``mask=None`` means the mode's default erasure set."""

    mode: str = "identity"
    rs: RsConfig = field(default_factory=RsConfig)
    rows_per_block: int = 32
    mask: MaskSpec | None = None
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossWeights = field(default_factory=LossWeights)
    train: TrainConfig = field(default_factory=TrainConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    hairpin: HairpinParams = field(default_factory=HairpinParams)
    thermo: ThermoConfig = field(default_factory=ThermoConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.rows_per_block < 1:
            raise ConfigurationError("rows_per_block must be positive")


def parse_settings(text: str, source: str = "<config>") -> Settings:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from None
    values: dict[str, dict] = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigurationError(f"{source}: unknown section [{section}]")
        keys = SECTIONS[section]
        for key, raw in cp.items(section):
            if key not in keys:
                raise ConfigurationError(f"{source}: unknown key {key!r} in [{section}]")
            try:
                values.setdefault(section, {})[key] = keys[key](raw)
            except ValueError as exc:
                raise ConfigurationError(f"{source}: [{section}] {key}: {exc}") from None
    try:
        return _build(values)
    except ValueError as exc:
        raise ConfigurationError(f"{source}: {exc}") from None


def _build(values: dict[str, dict]) -> Settings:
    s = Settings()
    pipe = dict(values.get("pipeline", {}))
    rs_kw = {k[3:] if k.startswith("rs_") else k: pipe.pop(k)
             for k in ("rs_n", "rs_k", "first_root_exponent") if k in pipe}
    hairpin = replace(s.hairpin, **values.get("hairpin", {}))
    train_kw = dict(values.get("train", {}))
    sur_kw = {k: train_kw.pop(k) for k in _SURROGATE_KEYS if k in train_kw}
    surrogate = replace(s.train.surrogate, hairpin=hairpin, **sur_kw)
    return replace(
        s,
        mode=pipe.get("mode", s.mode),
        rs=replace(s.rs, **rs_kw),
        rows_per_block=pipe.get("rows_per_block", s.rows_per_block),
        mask=pipe.get("mask", s.mask),
        model=replace(s.model, **values.get("model", {})),
        loss=replace(s.loss, **values.get("loss", {})),
        train=replace(s.train, surrogate=surrogate, **train_kw),
        channel=replace(s.channel, **values.get("channel", {})),
        hairpin=hairpin,
        thermo=replace(s.thermo, **values.get("thermo", {})),
    )


def config_path(explicit: str | Path | None = None, environ=None) -> Path | None:
    """``explicit`` if given, else the path named by ``$RSDNA_CONFIG``, else None."""
    if explicit:
        return Path(explicit)
    env = (os.environ if environ is None else environ).get(ENV_VAR)
    return Path(env) if env else None


def load_settings(path: str | Path | None = None, environ=None) -> Settings:
    """Settings from the file at ``path`` (or ``$RSDNA_CONFIG``), or built-in defaults."""
    p = config_path(path, environ)
    if p is None:
        return Settings()
    return parse_settings(p.read_text(encoding="utf-8"), str(p))
