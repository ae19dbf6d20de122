"""Binary and JSON serialization of sampled fields.

Binary layout (all little-endian)::

    b"MODC"  version:u32  d:u32
    counts:u32[d]  steps:f64[d]  offsets:f64[d]  basis:f64[d*d] (row-major, row k = e_k)
    values: (re, im) f64 pairs in C order
    zero or more trailing blocks:  tag:4 bytes  length:u32  payload:UTF-8 JSON

Known block tags are ``DUAL`` (conjugate offsets of a reciprocal grid),
``STFT`` (spectrogram metadata) and ``SYMB`` (symbol metadata).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidFieldError
from .lattice import OrderedBasis, SampledField, UniformGrid

MAGIC = b"MODC"
VERSION = 1


def _grid_from_parts(d, counts, steps, offsets, basis, dual=None) -> UniformGrid:
    return UniformGrid(
        OrderedBasis(tuple(tuple(row) for row in np.asarray(basis, dtype=float).reshape(d, d))),
        tuple(counts),
        tuple(steps),
        tuple(offsets),
        conjugate_offsets=None if dual is None else tuple(dual),
    )


def dumps_field(f: SampledField, blocks: dict | None = None) -> bytes:
    g = f.grid
    d = g.dim
    parts = [
        MAGIC,
        struct.pack("<II", VERSION, d),
        struct.pack(f"<{d}I", *g.counts),
        struct.pack(f"<{d}d", *g.steps),
        struct.pack(f"<{d}d", *g.offsets),
        np.asarray(g.basis.vectors, dtype="<f8").tobytes(),
        np.ascontiguousarray(f.values).astype("<c16").view("<f8").tobytes(),
    ]
    blocks = dict(blocks or {})
    if g.conjugate_offsets is not None:
        blocks.setdefault("DUAL", list(g.conjugate_offsets))
    for tag, payload in blocks.items():
        tag_b = tag.encode("ascii")
        if len(tag_b) != 4:
            raise ValueError("block tags are exactly four ASCII characters")
        data = json.dumps(payload, sort_keys=True).encode("utf-8")
        parts.append(tag_b + struct.pack("<I", len(data)) + data)
    return b"".join(parts)


def loads_field(data: bytes) -> tuple[SampledField, dict]:
    try:
        return _loads(data)
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError, ValueError) as exc:
        if isinstance(exc, InvalidFieldError):
            raise
        raise InvalidFieldError(f"malformed field file: {exc}") from None


def _loads(data: bytes) -> tuple[SampledField, dict]:
    if data[:4] != MAGIC:
        raise InvalidFieldError("not a MODC field file")
    pos = 4
    version, d = struct.unpack_from("<II", data, pos)
    pos += 8
    if version != VERSION:
        raise InvalidFieldError(f"unsupported field format version {version}")
    counts = struct.unpack_from(f"<{d}I", data, pos)
    pos += 4 * d
    steps = struct.unpack_from(f"<{d}d", data, pos)
    pos += 8 * d
    offsets = struct.unpack_from(f"<{d}d", data, pos)
    pos += 8 * d
    basis = np.frombuffer(data, dtype="<f8", count=d * d, offset=pos)
    pos += 8 * d * d
    n = int(np.prod(counts))
    if len(data) < pos + 16 * n:
        raise InvalidFieldError("truncated field file")
    raw = np.frombuffer(data, dtype="<f8", count=2 * n, offset=pos)
    pos += 16 * n
    blocks = {}
    while pos < len(data):
        tag = data[pos : pos + 4].decode("ascii")
        (length,) = struct.unpack_from("<I", data, pos + 4)
        blocks[tag] = json.loads(data[pos + 8 : pos + 8 + length].decode("utf-8"))
        pos += 8 + length
    grid = _grid_from_parts(d, counts, steps, offsets, basis, blocks.get("DUAL"))
    values = (raw[0::2] + 1j * raw[1::2]).reshape(counts)
    return SampledField(grid, values), blocks


def write_field(path, f: SampledField, blocks: dict | None = None) -> None:
    Path(path).write_bytes(dumps_field(f, blocks))


def read_field(path) -> tuple[SampledField, dict]:
    return loads_field(Path(path).read_bytes())


def field_to_json(f: SampledField, blocks: dict | None = None) -> dict:
    out = f.grid.to_dict()
    if f.grid.conjugate_offsets is not None:
        out["dual_offsets"] = list(f.grid.conjugate_offsets)
    flat = f.values.ravel()
    out["re"] = flat.real.tolist()
    out["im"] = flat.imag.tolist()
    if blocks:
        out["blocks"] = blocks
    return out


def field_from_json(obj: dict) -> tuple[SampledField, dict]:
    d = int(obj["d"])
    basis = obj.get("basis", np.eye(d).tolist())
    grid = _grid_from_parts(d, obj["counts"], obj["steps"], obj["offsets"], basis, obj.get("dual_offsets"))
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    return SampledField(grid, (re + 1j * im).reshape(grid.shape)), dict(obj.get("blocks", {}))
