"""Binary cache format for distance matrices.

Layout: little-endian header ``b"GWDM"``, u32 rows, u32 columns, u8 symmetric flag,
followed by rows * columns float64 values in row-major order.
"""
import struct
from pathlib import Path
from typing import Union

import numpy as np

from exceptions import ParseError, ResultIoError
from models.kernel import DistanceMatrix

MAGIC = b"GWDM"
HEADER = struct.Struct("<4sIIB")


def encode_distance_matrix(matrix: DistanceMatrix) -> bytes:
    r, n = matrix.values.shape
    header = HEADER.pack(MAGIC, r, n, 1 if matrix.symmetric else 0)
    return header + np.ascontiguousarray(matrix.values, dtype="<f8").tobytes()


def decode_distance_matrix(payload: bytes) -> DistanceMatrix:
    if len(payload) < HEADER.size:
        raise ParseError("Distance cache is truncated")
    magic, r, n, symmetric = HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise ParseError(f"Not a distance cache (magic {magic!r})")
    expected = HEADER.size + 8 * r * n
    if len(payload) != expected:
        raise ParseError(f"Distance cache has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8", offset=HEADER.size).reshape(r, n).astype(float)
    return DistanceMatrix(values=values, symmetric=bool(symmetric))


def write_distance_cache(path: Union[str, Path], matrix: DistanceMatrix) -> None:
    try:
        Path(path).write_bytes(encode_distance_matrix(matrix))
    except OSError as exc:
        raise ResultIoError(f"Could not write distance cache {path}: {exc}", path=str(path))


def read_distance_cache(path: Union[str, Path]) -> DistanceMatrix:
    try:
        payload = Path(path).read_bytes()
    except OSError as exc:
        raise ResultIoError(f"Could not read distance cache {path}: {exc}", path=str(path))
    return decode_distance_matrix(payload)
