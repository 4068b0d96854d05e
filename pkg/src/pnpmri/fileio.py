"""Binary k-space (KSP) and image (IMG) files.

Both formats start with a 4-byte magic, a version byte and a JSON header
prefixed by its length as a little-endian ``uint32``.  Complex samples are
stored as interleaved little-endian float32 (real, imag) pairs with the
coil axis outermost.  KSP files put the sampling mask, packed one bit per
sample in row-major order, between the header and the samples.
"""

import json
import struct

import numpy as np

from .core import KSpaceData, SamplingMask

KSP_MAGIC = b"PNPK"
IMG_MAGIC = b"PNPI"
FORMAT_VERSION = 1


class FileFormatError(ValueError):
    """Malformed or truncated KSP/IMG file."""


def _pack(magic, header, payload):
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return magic + bytes([FORMAT_VERSION]) + struct.pack("<I", len(head)) + head + payload


def _unpack(blob, magic):
    if len(blob) < 9 or blob[:4] != magic:
        raise FileFormatError(f"expected magic {magic!r}, found {bytes(blob[:4])!r}")
    if blob[4] != FORMAT_VERSION:
        raise FileFormatError(f"unsupported format version {blob[4]}")
    (n,) = struct.unpack("<I", blob[5:9])
    if len(blob) < 9 + n:
        raise FileFormatError("truncated header")
    try:
        header = json.loads(blob[9 : 9 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"unreadable header: {exc}") from exc
    return header, memoryview(blob)[9 + n :]


def _complex_bytes(values):
    values = np.asarray(values)
    pairs = np.empty(values.shape + (2,), dtype="<f4")
    pairs[..., 0] = values.real
    pairs[..., 1] = values.imag
    return pairs.tobytes()


def _complex_from(buf, shape):
    count = 2 * int(np.prod(shape))
    if len(buf) != 4 * count:
        raise FileFormatError(f"expected {4 * count} sample bytes, found {len(buf)}")
    pairs = np.frombuffer(buf, dtype="<f4", count=count).reshape(*shape, 2)
    out = np.empty(shape, dtype=np.complex128)
    out.real = pairs[..., 0]
    out.imag = pairs[..., 1]
    return out


def mask_to_header(mask):
    return {
        "pattern_kind": mask.pattern_kind,
        "factors": list(mask.factors),
        "acs_rows": mask.acs_rows,
        "acs_cols": mask.acs_cols,
        "acceleration": mask.acceleration(),
    }


def kspace_to_bytes(d, seed=None, sigma=None):
    """Serialize :class:`KSpaceData`."""
    header = {
        "rows": d.shape[0],
        "cols": d.shape[1],
        "coils": d.num_coils,
        "mask": mask_to_header(d.mask),
        "seed": seed,
        "sigma": sigma,
    }
    bits = np.packbits(d.mask.kept.ravel(), bitorder="big").tobytes()
    return _pack(KSP_MAGIC, header, bits + _complex_bytes(d.values))


def kspace_from_bytes(blob):
    """Inverse of :func:`kspace_to_bytes`; returns ``(KSpaceData, header)``."""
    header, body = _unpack(blob, KSP_MAGIC)
    try:
        rows, cols, coils = int(header["rows"]), int(header["cols"]), int(header["coils"])
        m = header["mask"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"incomplete KSP header: {exc}") from exc
    nbits = (rows * cols + 7) // 8
    if len(body) < nbits:
        raise FileFormatError("truncated mask")
    kept = np.unpackbits(np.frombuffer(body[:nbits], dtype=np.uint8), count=rows * cols)
    kept = kept.astype(bool).reshape(rows, cols)
    mask = SamplingMask(kept, int(m["acs_rows"]), int(m["acs_cols"]), m["pattern_kind"],
                        tuple(int(f) for f in m["factors"]))
    values = _complex_from(body[nbits:], (coils, rows, cols))
    return KSpaceData(values, mask), header


def image_to_bytes(x, **extra):
    """Serialize a complex image ``(rows, cols)`` or a coil stack ``(L, rows, cols)``."""
    x = np.asarray(x)
    header = {"rows": x.shape[-2], "cols": x.shape[-1]}
    if x.ndim == 3:
        header["coils"] = x.shape[0]
    header.update(extra)
    return _pack(IMG_MAGIC, header, _complex_bytes(x))


def image_from_bytes(blob):
    """Inverse of :func:`image_to_bytes`; returns ``(array, header)``."""
    header, body = _unpack(blob, IMG_MAGIC)
    try:
        shape = (int(header["rows"]), int(header["cols"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"incomplete IMG header: {exc}") from exc
    if "coils" in header:
        shape = (int(header["coils"]),) + shape
    return _complex_from(body, shape), header


def _write(path, blob):
    with open(path, "wb") as fh:
        fh.write(blob)


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def save_kspace(path, d, seed=None, sigma=None):
    _write(path, kspace_to_bytes(d, seed, sigma))


def load_kspace(path):
    return kspace_from_bytes(_read(path))


def save_image(path, x, **extra):
    _write(path, image_to_bytes(x, **extra))


def load_image(path):
    return image_from_bytes(_read(path))
