"""Matrix file formats.

DCM1 layout: the 4 magic bytes ``b"DCM1"``, rows and cols as little-endian
uint64, then ``rows * cols`` little-endian float64 values in row-major order.
CSV is plain numeric rows, written with round-trip precision.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .errors import IoError
from .numkernels import as_matrix

MAGIC = b"DCM1"
_HEADER = struct.Struct("<4sQQ")


def to_dcm_bytes(m) -> bytes:
    m = as_matrix(m)
    rows, cols = m.shape
    return _HEADER.pack(MAGIC, rows, cols) + m.astype("<f8").tobytes(order="C")


def from_dcm_bytes(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise IoError("truncated DCM1 header")
    magic, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise IoError(f"bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + 8 * rows * cols
    if len(data) != expected:
        raise IoError(f"DCM1 payload size {len(data)} != expected {expected}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    return as_matrix(flat.reshape(rows, cols).astype(np.float64))


def write_dcm(path, m) -> None:
    try:
        Path(path).write_bytes(to_dcm_bytes(m))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_dcm(path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return from_dcm_bytes(data)


def write_csv(path, m) -> None:
    m = as_matrix(m)
    buf = io.StringIO()
    np.savetxt(buf, m, delimiter=",", fmt="%.17g")
    try:
        Path(path).write_text(buf.getvalue())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_csv(path) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return as_matrix(data)


def read_matrix(path) -> np.ndarray:
    """Read DCM1 or CSV, dispatching on the file suffix."""
    if str(path).lower().endswith(".csv"):
        return read_csv(path)
    return read_dcm(path)
