"""PNPW weight checkpoints.

Layout: ``b"PNPW"``, one version byte, a 4-byte little-endian header
length, a UTF-8 ``key=value`` header (one pair per line), then every
parameter array in declaration order as little-endian float64.
"""

import io
import os

import numpy as np

from .cnn import CnnArchitecture, CnnWeights

MAGIC = b"PNPW"
VERSION = 1
_INT_KEYS = ("num_levels", "base_filters", "kernel_size", "in_channels", "out_channels")


class CheckpointError(ValueError):
    """The file is not a readable PNPW checkpoint."""


def dumps(weights, seed=0, extra=None):
    header = dict(weights.arch.to_header())
    header["seed"] = seed
    for key, value in (extra or {}).items():
        header[key] = value
    text = "".join(f"{k}={v}\n" for k, v in header.items()).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(bytes([VERSION]))
    buf.write(len(text).to_bytes(4, "little"))
    buf.write(text)
    for p in weights.params:
        buf.write(np.ascontiguousarray(p, dtype="<f8").tobytes())
    return buf.getvalue()


def loads(data):
    """Parse checkpoint bytes into ``(weights, header)``."""
    if data[:4] != MAGIC:
        raise CheckpointError("missing PNPW magic bytes")
    if data[4] != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {data[4]}")
    size = int.from_bytes(data[5:9], "little")
    header = {}
    for line in data[9 : 9 + size].decode("utf-8").splitlines():
        key, _, value = line.partition("=")
        header[key] = value
    try:
        arch = CnnArchitecture(
            skip_connections=bool(int(header["skip_connections"])),
            residual=bool(int(header.get("residual", "0"))),
            **{k: int(header[k]) for k in _INT_KEYS},
        )
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"bad checkpoint header: {exc}") from exc
    offset = 9 + size
    params = []
    for shape in arch.param_shapes():
        count = int(np.prod(shape))
        chunk = data[offset : offset + 8 * count]
        if len(chunk) != 8 * count:
            raise CheckpointError("checkpoint truncated")
        params.append(np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64))
        offset += 8 * count
    if offset != len(data):
        raise CheckpointError("trailing bytes after the last tensor")
    return CnnWeights(arch, params), header


def save_weights(path, weights, seed=0, extra=None):
    with open(os.fspath(path), "wb") as fh:
        fh.write(dumps(weights, seed, extra))


def load_weights(path):
    with open(os.fspath(path), "rb") as fh:
        return loads(fh.read())
