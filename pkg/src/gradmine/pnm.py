"""Minimal binary PNM (P5 grayscale / P6 color) image I/O.

Arrays follow the package's (w, h, c) orientation: axis 0 is the
horizontal pixel coordinate, axis 1 the vertical one.  Files store the
conventional row-major raster, so reading and writing transpose.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError


def _read_header(buf: bytes, magic: bytes):
    if not buf.startswith(magic):
        raise FormatError(f"expected {magic.decode()} image, got {buf[:2]!r}")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PNM header")
        fields.append(int(buf[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"only maxval 255 supported, got {maxval}")
    return width, height, pos


def read_ppm(path) -> np.ndarray:
    """Binary P6 -> uint8 array of shape (w, h, 3)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    width, height, pos = _read_header(buf, b"P6")
    need = width * height * 3
    data = buf[pos:pos + need]
    if len(data) != need:
        raise FormatError(f"P6 payload has {len(data)} bytes, expected {need}")
    raster = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)
    return raster.transpose(1, 0, 2)


def write_ppm(path, image: np.ndarray) -> None:
    """uint8 (w, h, 3) -> binary P6."""
    if image.ndim != 3 or image.shape[2] != 3:
        raise FormatError(f"expected (w, h, 3) array, got {image.shape}")
    w, h, _ = image.shape
    raster = np.ascontiguousarray(image.transpose(1, 0, 2).astype(np.uint8))
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(raster.tobytes())


def read_pgm(path) -> np.ndarray:
    """Binary P5 -> uint8 array of shape (w, h)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    width, height, pos = _read_header(buf, b"P5")
    need = width * height
    data = buf[pos:pos + need]
    if len(data) != need:
        raise FormatError(f"P5 payload has {len(data)} bytes, expected {need}")
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width).T


def write_pgm(path, image: np.ndarray) -> None:
    """uint8 (w, h) -> binary P5."""
    if image.ndim != 2:
        raise FormatError(f"expected (w, h) array, got {image.shape}")
    w, h = image.shape
    raster = np.ascontiguousarray(image.T.astype(np.uint8))
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(raster.tobytes())
