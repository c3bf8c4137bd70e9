"""Binary model files.

Layout (little-endian)::

    b"NFDX"  u16 version
    u32 side, u32 in_channels, u32 kernel, u32 hidden, u32 n_classes, f64 dropout
    u32 n_conv, then n_conv x u32 filter counts
    u64 parameter count
    parameters as f64, tensors in ArchConfig.param_shapes() order, C order
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from ..errors import CorruptFileError, DatasetIOError, VersionMismatchError
from .model import ArchConfig, CnnModel

MAGIC = b"NFDX"
VERSION = 1
_HEAD = struct.Struct("<4sH")
_DESC = struct.Struct("<IIIIIdI")
_COUNT = struct.Struct("<Q")


def encode_model(model: CnnModel) -> bytes:
    a = model.arch
    parts = [
        _HEAD.pack(MAGIC, VERSION),
        _DESC.pack(a.side, a.in_channels, a.kernel, a.hidden, a.n_classes, a.dropout, len(a.filters)),
        struct.pack(f"<{len(a.filters)}I", *a.filters),
    ]
    flat = [model.params[name].ravel() for name in a.param_shapes()]
    payload = np.concatenate(flat).astype("<f8")
    parts.append(_COUNT.pack(payload.size))
    parts.append(payload.tobytes())
    return b"".join(parts)


def decode_model(data: bytes, source="<bytes>") -> CnnModel:
    def need(offset, size, what):
        if len(data) < offset + size:
            raise CorruptFileError(f"{source}: truncated while reading {what}")

    need(0, _HEAD.size, "header")
    magic, version = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise CorruptFileError(f"{source}: bad magic {magic!r}, not a model file")
    if version != VERSION:
        raise VersionMismatchError(f"{source}: model format version {version}, this build reads {VERSION}")
    off = _HEAD.size
    need(off, _DESC.size, "architecture descriptor")
    side, channels, kernel, hidden, n_classes, dropout, n_conv = _DESC.unpack_from(data, off)
    off += _DESC.size
    if not 1 <= n_conv <= 64:
        raise CorruptFileError(f"{source}: implausible conv layer count {n_conv}")
    need(off, 4 * n_conv, "filter counts")
    filters = struct.unpack_from(f"<{n_conv}I", data, off)
    off += 4 * n_conv
    try:
        arch = ArchConfig(side, channels, filters, kernel, hidden, n_classes, dropout)
        shapes = arch.param_shapes()
    except ValueError as exc:
        raise CorruptFileError(f"{source}: invalid architecture descriptor ({exc})") from None
    need(off, _COUNT.size, "parameter count")
    (count,) = _COUNT.unpack_from(data, off)
    off += _COUNT.size
    expected = sum(int(np.prod(s)) for s in shapes.values())
    if count != expected:
        raise CorruptFileError(f"{source}: declares {count} parameters, architecture needs {expected}")
    if len(data) != off + 8 * count:
        raise CorruptFileError(f"{source}: payload is {len(data) - off} bytes, expected {8 * count}")
    flat = np.frombuffer(data, dtype="<f8", count=count, offset=off).astype(np.float64)
    params = {}
    pos = 0
    for name, shape in shapes.items():
        size = int(np.prod(shape))
        params[name] = flat[pos : pos + size].reshape(shape).copy()
        pos += size
    return CnnModel(arch, params)


def save_model(model: CnnModel, path) -> str:
    """Write ``model`` to ``path``; returns the SHA-256 of the file contents."""
    data = encode_model(model)
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise DatasetIOError(f"{path}: {exc.strerror or exc}") from exc
    return hashlib.sha256(data).hexdigest()


def load_model(path) -> CnnModel:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DatasetIOError(f"{path}: {exc.strerror or exc}") from exc
    return decode_model(data, source=str(path))
