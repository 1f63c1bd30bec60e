"""Bit-exact readers and writers for binary PGM (2D) and MetaImage (2D/3D).

PGM samples are big-endian for ``maxval = 65535``; MetaImage payloads are
raw little-endian.  MetaImage ``DimSize`` is listed fastest axis first
(``X Y Z``), which maps to the array shape ``(Z, Y, X)``.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .grid import GridError, as_field, as_mask

METAIMAGE_TYPES = {
    "MET_UCHAR": np.dtype("<u1"),
    "MET_SHORT": np.dtype("<i2"),
    "MET_USHORT": np.dtype("<u2"),
    "MET_FLOAT": np.dtype("<f4"),
}
_REQUIRED_KEYS = ("NDims", "DimSize", "ElementType", "ElementDataFile")


class FormatError(GridError):
    """A file does not follow the supported format subset."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


# -- PGM -------------------------------------------------------------------

def _pgm_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Return (token, token_start, position after token), skipping comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("truncated PGM header", start)
    return data[start:pos], start, pos


def parse_pgm(data: bytes) -> np.ndarray:
    if len(data) < 2:
        raise FormatError("truncated PGM header", len(data))
    if data[:2] != b"P5":
        raise FormatError(f"unsupported magic {data[:2]!r}", 0)
    pos = 2
    values = []
    for what in ("width", "height", "maxval"):
        tok, start, pos = _pgm_token(data, pos)
        if not tok.isdigit():
            raise FormatError(f"invalid PGM {what} {tok!r}", start)
        values.append(int(tok))
    width, height, maxval = values
    if width < 1 or height < 1:
        raise FormatError(f"invalid PGM size {width}x{height}", 2)
    if maxval not in (255, 65535):
        raise FormatError(f"unsupported maxval {maxval}", start)
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("missing whitespace after maxval", pos)
    pos += 1
    dtype = np.dtype("u1") if maxval == 255 else np.dtype(">u2")
    expected = width * height * dtype.itemsize
    payload = data[pos:]
    if len(payload) < expected:
        raise FormatError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}",
            pos + len(payload),
        )
    if len(payload) > expected:
        raise FormatError("trailing bytes after PGM payload", pos + expected)
    samples = np.frombuffer(payload, dtype=dtype, count=width * height)
    return samples.reshape(height, width).astype(np.float64)


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM file into a float64 ``(height, width)`` field."""
    return parse_pgm(Path(path).read_bytes())


def _to_samples(field, dtype: np.dtype, lo: float, hi: float) -> np.ndarray:
    field = as_field(field)
    rounded = np.rint(field)
    if rounded.size and (rounded.min() < lo or rounded.max() > hi):
        raise GridError(
            f"values outside [{lo:g}, {hi:g}]: range [{field.min():g}, {field.max():g}]"
        )
    return rounded.astype(dtype)


def encode_pgm(field, maxval: int = 255) -> bytes:
    field = np.asarray(field)
    if field.ndim != 2:
        raise GridError(f"PGM stores 2D fields only, got {field.ndim}D")
    if maxval not in (255, 65535):
        raise GridError(f"maxval must be 255 or 65535, got {maxval}")
    dtype = np.dtype("u1") if maxval == 255 else np.dtype(">u2")
    samples = _to_samples(field, dtype, 0, maxval)
    height, width = field.shape
    return f"P5\n{width} {height}\n{maxval}\n".encode("ascii") + samples.tobytes()


def write_pgm(field, maxval: int, path) -> None:
    Path(path).write_bytes(encode_pgm(field, maxval))


# -- MetaImage -------------------------------------------------------------

def _read_metaimage_header(data: bytes) -> tuple[dict[str, str], int]:
    header: dict[str, str] = {}
    pos = 0
    while True:
        end = data.find(b"\n", pos)
        if end < 0:
            if "ElementDataFile" not in header:
                raise FormatError("missing required key ElementDataFile", len(data))
            end = len(data)
        line = data[pos:end].decode("latin-1").strip()
        if line:
            if "=" not in line:
                raise FormatError(f"malformed header line {line!r}", pos)
            key, value = (s.strip() for s in line.split("=", 1))
            header[key] = value
        pos = min(end + 1, len(data))
        if "ElementDataFile" in header:
            return header, pos


def read_metaimage(path) -> np.ndarray:
    """Read a ``.mha`` (``LOCAL`` data) or ``.mhd`` + raw file."""
    path = Path(path)
    data = path.read_bytes()
    header, payload_start = _read_metaimage_header(data)
    for key in _REQUIRED_KEYS:
        if key not in header:
            raise FormatError(f"missing required key {key}")
    try:
        ndims = int(header["NDims"])
        dims = [int(v) for v in header["DimSize"].split()]
    except ValueError as exc:
        raise FormatError(f"invalid NDims/DimSize: {exc}") from None
    if ndims not in (2, 3) or len(dims) != ndims or min(dims) < 1:
        raise FormatError(f"unsupported NDims={ndims} DimSize={dims}")
    etype = header["ElementType"]
    if etype not in METAIMAGE_TYPES:
        raise FormatError(f"unsupported ElementType {etype}")
    if header.get("BinaryDataByteOrderMSB", "False").lower() == "true":
        raise FormatError("big-endian MetaImage payloads are not supported")
    if header.get("CompressedData", "False").lower() == "true":
        raise FormatError("compressed MetaImage payloads are not supported")
    source = header["ElementDataFile"]
    if source == "LOCAL":
        payload = data[payload_start:]
    else:
        payload = (path.parent / source).read_bytes()
    dtype = METAIMAGE_TYPES[etype]
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(payload) != expected:
        raise FormatError(
            f"payload size mismatch: expected {expected} bytes, found {len(payload)}"
        )
    values = np.frombuffer(payload, dtype=dtype).reshape(dims[::-1])
    return values.astype(np.float64)


def write_metaimage(field, element_type: str, path) -> None:
    """Write a field; ``.mhd`` paths get a sibling ``.raw`` payload file."""
    if element_type not in METAIMAGE_TYPES:
        raise GridError(f"unsupported element type {element_type}")
    field = as_field(field)
    dtype = METAIMAGE_TYPES[element_type]
    if dtype.kind == "f":
        samples = field.astype(dtype)
    else:
        info = np.iinfo(dtype)
        samples = _to_samples(field, dtype, info.min, info.max)
    path = Path(path)
    dims = " ".join(str(d) for d in field.shape[::-1])
    detached = path.suffix.lower() == ".mhd"
    source = path.with_suffix(".raw").name if detached else "LOCAL"
    header = (
        f"NDims = {field.ndim}\n"
        f"DimSize = {dims}\n"
        f"ElementType = {element_type}\n"
        f"ElementDataFile = {source}\n"
    ).encode("ascii")
    if detached:
        path.with_suffix(".raw").write_bytes(samples.tobytes())
        path.write_bytes(header)
    else:
        path.write_bytes(header + samples.tobytes())


# -- format dispatch -------------------------------------------------------

def _kind(path) -> str:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".pgm":
        return "pgm"
    if ext in (".mha", ".mhd"):
        return "meta"
    raise GridError(f"unsupported file extension {ext!r} (use .pgm, .mha or .mhd)")


def read_image(path) -> np.ndarray:
    return read_pgm(path) if _kind(path) == "pgm" else read_metaimage(path)


def write_image(path, field, *, element_type: str = "MET_FLOAT") -> None:
    """Write an intensity field; PGM output is 8-bit unless values exceed 255."""
    if _kind(path) == "pgm":
        maxval = 255 if np.rint(np.max(field)) <= 255 else 65535
        write_pgm(field, maxval, path)
    else:
        write_metaimage(field, element_type, path)


def read_mask(path) -> np.ndarray:
    """Load a mask file, binarizing with ``value > 0``."""
    return read_image(path) > 0


def write_mask(path, mask, *, foreground: int = 255) -> None:
    mask = as_mask(mask)
    values = mask.astype(np.float64) * foreground
    if _kind(path) == "pgm":
        write_pgm(values, 255, path)
    else:
        write_metaimage(values, "MET_UCHAR", path)
