"""Binary netpbm codec: P5 (PGM, 1 channel) and P6 (PPM, 3 channels).

Only 8-bit images with maxval 255 are accepted. Pixels map to [0, 1] floats
on ingest (value / 255) and back via round(value * 255) clipped to 0..255.
"""

from __future__ import annotations

import numpy as np

from ..errors import FormatError


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read whitespace-separated header tokens, skipping '#' comments.
    Returns the tokens and the offset one byte past the final separator."""
    toks: list[bytes] = []
    i = 0
    while len(toks) < count:
        if i >= len(data):
            raise FormatError("truncated netpbm header")
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            i += 1
        elif c.isspace():
            i += 1
        else:
            start = i
            while i < len(data) and not data[i : i + 1].isspace():
                i += 1
            toks.append(data[start:i])
            i += 1  # exactly one whitespace byte separates maxval from raster
    return toks, i


def read_image(path) -> np.ndarray:
    """Read a P5/P6 file as a float64 ``(channels, rows, cols)`` array in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    toks, offset = _tokens(data, 4)
    magic, width_s, height_s, maxval_s = toks
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise FormatError(f"unsupported netpbm magic {magic!r} (need binary P5 or P6)")
    try:
        width, height, maxval = int(width_s), int(height_s), int(maxval_s)
    except ValueError as err:
        raise FormatError(f"bad netpbm header field: {err}") from err
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    expected = width * height * channels
    raster = data[offset : offset + expected]
    if len(raster) != expected:
        raise FormatError(
            f"raster has {len(raster)} bytes, header implies {expected}"
        )
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)
    return arr.transpose(2, 0, 1).astype(np.float64) / 255.0


def quantize(arr: np.ndarray) -> np.ndarray:
    """[0, 1] floats to uint8 via round-half-even, clipped."""
    return np.clip(np.rint(np.asarray(arr) * 255.0), 0, 255).astype(np.uint8)


def write_image(path, image: np.ndarray) -> None:
    """Write a ``(channels, rows, cols)`` float array in [0, 1] as P5 or P6."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[0] not in (1, 3):
        raise FormatError(
            f"image must be (1|3, rows, cols), got shape {arr.shape}"
        )
    write_u8(path, quantize(arr))


def write_u8(path, arr: np.ndarray) -> None:
    """Write uint8 planes: (rows, cols) or (1, r, c) as P5; (3, r, c) as P6."""
    arr = np.asarray(arr, dtype=np.uint8)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.shape[0] == 1:
        magic = b"P5"
    elif arr.shape[0] == 3:
        magic = b"P6"
    else:
        raise FormatError(f"need 1 or 3 channels, got {arr.shape[0]}")
    channels, height, width = arr.shape
    raster = arr.transpose(1, 2, 0).tobytes()
    with open(path, "wb") as fh:
        fh.write(magic + b"\n" + f"{width} {height}\n255\n".encode("ascii"))
        fh.write(raster)
