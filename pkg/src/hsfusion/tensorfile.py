"""Minimal portable tensor container (.cmt) plus an ENVI raster import path.

CMT layout, all little-endian regardless of host:

    bytes 0-3   magic "CMT1"
    byte  4     dtype code (0x01 = float64)
    byte  5     ndim (2 or 3)
    then ndim unsigned 64-bit dimensions
    then the row-major float64 payload

The file length must equal header + payload exactly. Writes go through a
temporary file and an atomic rename.

``read_envi`` covers the common case of real hyperspectral cubes shipped as
ENVI band-sequential rasters with a sidecar .hdr; it is import-only.
"""

import os
import struct

import numpy as np

from .errors import TensorFileError

MAGIC = b"CMT1"
DTYPE_FLOAT64 = 0x01
_HEADER_FIXED = 6


def write_tensor(path, t):
    """Write a 2- or 3-way float64 array; bit-exact roundtrip with read_tensor."""
    t = np.asarray(t, dtype="<f8")
    if t.ndim not in (2, 3):
        raise ValueError(f"only 2- or 3-way arrays are supported, got ndim={t.ndim}")
    if not np.isfinite(t).all():
        raise ValueError("refusing to write non-finite values")
    header = MAGIC + bytes([DTYPE_FLOAT64, t.ndim])
    header += b"".join(struct.pack("<Q", d) for d in t.shape)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(t).tobytes())
    os.replace(tmp, path)


def read_tensor(path):
    """Read a .cmt file; raises TensorFileError with a byte offset on damage."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER_FIXED:
        raise TensorFileError(
            f"truncated header: file is {len(data)} bytes (error at offset {len(data)})"
        )
    if data[:4] != MAGIC:
        raise TensorFileError(
            f"bad magic {data[:4]!r} at offset 0 (expected {MAGIC!r})"
        )
    if data[4] != DTYPE_FLOAT64:
        raise TensorFileError(f"unsupported dtype code 0x{data[4]:02x} at offset 4")
    ndim = data[5]
    if ndim not in (2, 3):
        raise TensorFileError(f"unsupported ndim {ndim} at offset 5")
    header_len = _HEADER_FIXED + 8 * ndim
    if len(data) < header_len:
        raise TensorFileError(
            f"truncated shape header (error at offset {len(data)})"
        )
    shape = struct.unpack(f"<{ndim}Q", data[_HEADER_FIXED:header_len])
    if any(d == 0 for d in shape):
        raise TensorFileError(f"zero dimension in shape {shape} at offset 6")
    count = int(np.prod(shape))
    expected = header_len + 8 * count
    if len(data) != expected:
        raise TensorFileError(
            f"payload length mismatch: expected {expected} bytes, found {len(data)} "
            f"(error at offset {min(len(data), expected)})"
        )
    arr = np.frombuffer(data, dtype="<f8", count=count, offset=header_len)
    arr = arr.reshape(shape).astype(float)
    if not np.isfinite(arr).all():
        raise TensorFileError(f"non-finite values in payload of {path}")
    return arr


_ENVI_DTYPES = {
    "1": np.uint8,
    "2": np.int16,
    "4": np.float32,
    "5": np.float64,
    "12": np.uint16,
}


def _parse_envi_header(text, source):
    if not text.lstrip().lower().startswith("envi"):
        raise TensorFileError(f"{source}: missing ENVI signature line")
    fields = {}
    pending_key = None
    brace_buf = []
    for raw in text.splitlines()[1:]:
        line = raw.strip()
        if pending_key is not None:
            brace_buf.append(line.rstrip("}"))
            if line.endswith("}"):
                fields[pending_key] = " ".join(brace_buf).strip()
                pending_key = None
            continue
        if not line or "=" not in line:
            continue
        key, _, val = line.partition("=")
        key = key.strip().lower()
        val = val.strip()
        if val.startswith("{") and not val.endswith("}"):
            pending_key = key
            brace_buf = [val.lstrip("{")]
        else:
            fields[key] = val.strip("{} ")
    return fields


def read_envi(header_path):
    """Read an ENVI band-sequential raster as a (lines, samples, bands) cube.

    Supports interleave bsq, integer/float data types 1/2/4/5/12, both byte
    orders, and an optional header offset. The image file is looked up next
    to the header (same stem, or .img/.dat/.raw/.bsq suffixes).
    """
    header_path = os.fspath(header_path)
    with open(header_path, "r", encoding="utf-8", errors="replace") as fh:
        fields = _parse_envi_header(fh.read(), header_path)
    try:
        samples = int(fields["samples"])
        lines = int(fields["lines"])
        bands = int(fields["bands"])
        dtype_code = fields["data type"]
    except KeyError as exc:
        raise TensorFileError(f"{header_path}: missing ENVI field {exc}") from exc
    interleave = fields.get("interleave", "bsq").lower()
    if interleave != "bsq":
        raise TensorFileError(
            f"{header_path}: unsupported interleave {interleave!r} (only bsq)"
        )
    if dtype_code not in _ENVI_DTYPES:
        raise TensorFileError(f"{header_path}: unsupported data type {dtype_code}")
    dtype = np.dtype(_ENVI_DTYPES[dtype_code])
    if int(fields.get("byte order", "0")) == 1:
        dtype = dtype.newbyteorder(">")
    else:
        dtype = dtype.newbyteorder("<")
    offset = int(fields.get("header offset", "0"))

    stem = header_path[:-4] if header_path.lower().endswith(".hdr") else header_path
    candidates = [stem] + [stem + ext for ext in (".img", ".dat", ".raw", ".bsq")]
    data_path = next((p for p in candidates if os.path.isfile(p)), None)
    if data_path is None:
        raise TensorFileError(f"{header_path}: no image file next to the header")

    count = samples * lines * bands
    raw = np.fromfile(data_path, dtype=dtype, count=count, offset=offset)
    if raw.size != count:
        raise TensorFileError(
            f"{data_path}: expected {count} samples, found {raw.size}"
        )
    cube = raw.reshape(bands, lines, samples).transpose(1, 2, 0)
    cube = np.ascontiguousarray(cube, dtype=float)
    if not np.isfinite(cube).all():
        raise TensorFileError(f"{data_path}: non-finite values in raster")
    return cube


def load_cube(path):
    """Read either a .cmt tensor or an ENVI .hdr raster, by suffix."""
    if os.fspath(path).lower().endswith(".hdr"):
        return read_envi(path)
    return read_tensor(path)
