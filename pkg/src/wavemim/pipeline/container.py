"""Binary tensor container.

Layout (all integers little-endian):

    magic   4 bytes  b"WTNS"
    version 1 byte   (1)
    then zero or more records until EOF:
        name_len  u32
        name      name_len bytes of UTF-8
        dtype     u8   0 = float32, 1 = float64, 2 = 8-bit boolean
        rank      u8
        dims      rank x u32
        payload   row-major little-endian values

Round-trips are bit-identical; unknown magic or version is rejected.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import FormatError

MAGIC = b"WTNS"
VERSION = 1

_CODE_TO_DTYPE = {0: np.dtype("<f4"), 1: np.dtype("<f8"), 2: np.dtype("u1")}


def _dtype_code(arr: np.ndarray) -> int:
    if arr.dtype == np.float32:
        return 0
    if arr.dtype == np.float64:
        return 1
    if arr.dtype == np.bool_:
        return 2
    raise FormatError(f"unsupported dtype {arr.dtype}; use float32, float64, or bool")


def write_records(path, records) -> None:
    """Write ``(name, array)`` pairs in order."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(bytes([VERSION]))
        for name, arr in records:
            arr = np.asarray(arr)  # tobytes() below always emits C order
            code = _dtype_code(arr)
            name_bytes = name.encode("utf-8")
            fh.write(struct.pack("<I", len(name_bytes)))
            fh.write(name_bytes)
            fh.write(bytes([code, arr.ndim]))
            for dim in arr.shape:
                fh.write(struct.pack("<I", dim))
            if code == 2:
                payload = arr.astype("u1").tobytes()
            else:
                payload = arr.astype(_CODE_TO_DTYPE[code], copy=False).tobytes()
            fh.write(payload)


def read_records(path) -> list[tuple[str, np.ndarray]]:
    """Read every record, preserving order. Booleans come back as ``bool``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 5 or data[4] != VERSION:
        raise FormatError(f"unsupported container version {data[4] if len(data) > 4 else '?'}")
    offset = 5
    records: list[tuple[str, np.ndarray]] = []

    def take(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(data):
            raise FormatError("truncated container")
        chunk = data[offset : offset + n]
        offset += n
        return chunk

    while offset < len(data):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        code, rank = take(1)[0], take(1)[0]
        if code not in _CODE_TO_DTYPE:
            raise FormatError(f"unknown dtype code {code} in record {name!r}")
        dims = tuple(struct.unpack("<I", take(4))[0] for _ in range(rank))
        dtype = _CODE_TO_DTYPE[code]
        n_items = int(np.prod(dims, dtype=np.int64)) if dims else 1
        payload = take(n_items * dtype.itemsize)
        arr = np.frombuffer(payload, dtype=dtype).reshape(dims).copy()
        if code == 2:
            arr = arr.astype(bool)
        records.append((name, arr))
    return records


def read_record_dict(path) -> dict[str, np.ndarray]:
    records = read_records(path)
    out = dict(records)
    if len(out) != len(records):
        raise FormatError("duplicate record names in container")
    return out
