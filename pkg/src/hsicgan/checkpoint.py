"""Versioned binary container for named parameter tensors.

Layout: magic "HIGN", u32 LE format version, u32 LE tensor count, then per
tensor a u32 LE name length + UTF-8 name, u32 LE rank, u64 LE dims, f64 LE
values (row-major), and finally a u32 LE length-prefixed UTF-8 key=value
block echoing the run configuration. Loads reject any magic/version/length
mismatch; save -> load -> save is byte-identical.
"""

from __future__ import annotations

import struct
from typing import Mapping, Sequence

import numpy as np

from .autodiff import Parameter, Tensor

MAGIC = b"HIGN"
VERSION = 1


class CheckpointError(ValueError):
    """Malformed or incompatible checkpoint file."""


def _config_block(config: Mapping[str, str]) -> bytes:
    text = "".join(f"{k}={v}\n" for k, v in config.items())
    payload = text.encode("utf-8")
    return struct.pack("<I", len(payload)) + payload


def encode_checkpoint(params: Sequence[Parameter], config: Mapping[str, str]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(params))]
    for p in params:
        name = p.name.encode("utf-8")
        arr = np.asarray(p.value.data).astype("<f8", copy=False)  # keeps rank 0 intact
        chunks.append(struct.pack("<I", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape) if arr.ndim else b"")
        chunks.append(arr.tobytes())
    chunks.append(_config_block(config))
    return b"".join(chunks)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError(f"truncated checkpoint while reading {what}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def decode_checkpoint(buf: bytes) -> tuple[list[Parameter], dict[str, str]]:
    r = _Reader(buf)
    if r.take(4, "magic") != MAGIC:
        raise CheckpointError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}")
    version = r.u32("version")
    if version != VERSION:
        raise CheckpointError(f"unsupported format version {version}, expected {VERSION}")
    count = r.u32("tensor count")
    params: list[Parameter] = []
    for i in range(count):
        name_len = r.u32(f"name length of tensor {i}")
        name = r.take(name_len, f"name of tensor {i}").decode("utf-8")
        rank = r.u32(f"rank of {name}")
        dims = struct.unpack(f"<{rank}Q", r.take(8 * rank, f"dims of {name}"))
        size = int(np.prod(dims)) if rank else 1
        raw = r.take(8 * size, f"values of {name}")
        values = np.frombuffer(raw, dtype="<f8").reshape(dims).astype(np.float64)
        params.append(Parameter(name, Tensor(values)))
    cfg_len = r.u32("config block length")
    text = r.take(cfg_len, "config block").decode("utf-8")
    if r.pos != len(buf):
        raise CheckpointError(f"{len(buf) - r.pos} trailing bytes after config block")
    config: dict[str, str] = {}
    for line in text.splitlines():
        key, sep, value = line.partition("=")
        if not sep:
            raise CheckpointError(f"malformed config line {line!r}")
        config[key] = value
    return params, config


def save_checkpoint(params: Sequence[Parameter], config: Mapping[str, str], path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_checkpoint(params, config))


def load_checkpoint(path: str) -> tuple[list[Parameter], dict[str, str]]:
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
