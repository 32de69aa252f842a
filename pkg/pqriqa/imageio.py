"""
Minimal binary PNM codec (P5 grayscale, P6 RGB, 8-bit).

Images live in memory as float64 arrays in [0, 1] with shape (H, W, C).
"""

from pathlib import Path

import numpy as np

from pqriqa.errors import DatasetIOError, UnsupportedFormatError
from pqriqa.fileio import atomic_write_bytes

MAXVAL = 255


def encode_ppm(pixels: np.ndarray) -> bytes:
    """Quantize [0, 1] pixels to 8 bits and wrap them in a P5/P6 header."""
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise UnsupportedFormatError(f"cannot store an image of shape {arr.shape} as PNM")
    h, w, c = arr.shape
    data = np.clip(np.rint(np.clip(arr, 0.0, 1.0) * MAXVAL), 0, MAXVAL).astype(np.uint8)
    magic = b"P6" if c == 3 else b"P5"
    return magic + f"\n{w} {h}\n{MAXVAL}\n".encode("ascii") + data.tobytes()


def write_ppm(path, pixels: np.ndarray) -> Path:
    return atomic_write_bytes(path, encode_ppm(pixels))


def _header_tokens(data: bytes, count: int, path) -> tuple[list[bytes], int]:
    """Read `count` whitespace-separated header tokens, skipping # comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise DatasetIOError(f"{path}: truncated PNM header", path=path)
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def decode_ppm(data: bytes, path="<bytes>") -> np.ndarray:
    if data[:2] not in (b"P5", b"P6"):
        raise UnsupportedFormatError(f"{path}: only binary P5/P6 images are supported")
    tokens, offset = _header_tokens(data, 4, path)
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as e:
        raise UnsupportedFormatError(f"{path}: malformed PNM header") from e
    if maxval < 1 or maxval > MAXVAL:
        raise UnsupportedFormatError(f"{path}: only 8-bit PNM is supported (maxval {maxval})")
    channels = 3 if tokens[0] == b"P6" else 1
    expected = width * height * channels
    raster = data[offset:offset + expected]
    if len(raster) != expected:
        raise DatasetIOError(f"{path}: raster has {len(raster)} bytes, expected {expected}", path=path)
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)
    return arr.astype(np.float64) / maxval


def read_ppm(path) -> np.ndarray:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise DatasetIOError(f"cannot read image {path}: {e}", path=path) from e
    return decode_ppm(data, path)
