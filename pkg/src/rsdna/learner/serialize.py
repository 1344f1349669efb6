"""Model parameter file.

Layout (all integers little-endian)::

    8 bytes   magic  b"RSDNAMDL"
    u16       format version
    u32       header length h
    h bytes   UTF-8 JSON: {"config": {...}, "params": [[name, [shape...]], ...]}
    ...       float64 little-endian arrays, C order, in the header's order

The JSON is written with sorted keys and no whitespace, so a given parameter
set always serializes to the same bytes and its SHA-256 is a stable identity.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .model import ModelConfig, ModelParameters, parameter_shapes

MODEL_MAGIC = b"RSDNAMDL"
MODEL_FORMAT_VERSION = 1


def model_bytes(params: ModelParameters) -> bytes:
    header = {
        "config": params.config.to_dict(),
        "params": [[n, list(s)] for n, s in parameter_shapes(params.config)],
    }
    hb = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    parts = [MODEL_MAGIC, struct.pack("<HI", MODEL_FORMAT_VERSION, len(hb)), hb]
    parts += [np.ascontiguousarray(params.arrays[n], dtype="<f8").tobytes() for n, _ in parameter_shapes(params.config)]
    return b"".join(parts)


def model_digest(params: ModelParameters) -> str:
    return hashlib.sha256(model_bytes(params)).hexdigest()


def parse_model(data: bytes) -> ModelParameters:
    if data[:8] != MODEL_MAGIC:
        raise FormatError("not a model file (bad magic)")
    try:
        version, hlen = struct.unpack_from("<HI", data, 8)
    except struct.error:
        raise FormatError("truncated model header") from None
    if version != MODEL_FORMAT_VERSION:
        raise FormatError(f"unsupported model format version {version}")
    off = 14
    try:
        header = json.loads(data[off : off + hlen])
        config = ModelConfig(**header["config"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"bad model header: {exc}") from None
    off += hlen
    shapes = parameter_shapes(config)
    if [[n, list(s)] for n, s in shapes] != header.get("params"):
        raise FormatError("parameter table does not match the model configuration")
    arrays = {}
    for name, shape in shapes:
        count = int(np.prod(shape))
        end = off + 8 * count
        if end > len(data):
            raise FormatError(f"model file truncated in {name}")
        arrays[name] = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(shape).astype(float)
        off = end
    if off != len(data):
        raise FormatError("trailing bytes after model parameters")
    try:
        return ModelParameters(config, arrays)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def atomic_write(path: str | Path, data: bytes) -> None:
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_model(params: ModelParameters, path: str | Path) -> str:
    data = model_bytes(params)
    atomic_write(path, data)
    return hashlib.sha256(data).hexdigest()


def load_model(path: str | Path) -> ModelParameters:
    return parse_model(Path(path).read_bytes())
