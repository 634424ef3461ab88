"""Minimal PGM (portable graymap) reader/writer, ASCII P2 and binary P5."""

from __future__ import annotations

import numpy as np


class PgmFormatError(ValueError):
    pass


def _tokenize_header(data: bytes, count: int) -> tuple[list[int], int]:
    # read `count` whitespace-separated integer tokens, skipping '#' comments
    tokens: list[int] = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise PgmFormatError("truncated header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end : end + 1].isspace() and data[end : end + 1] != b"#":
                end += 1
            try:
                tokens.append(int(data[pos:end]))
            except ValueError as exc:
                raise PgmFormatError(f"bad header token {data[pos:end]!r}") from exc
            pos = end
    return tokens, pos


def read_pgm(data: bytes) -> np.ndarray:
    """Parse PGM bytes into a (height, width) float array of gray values."""
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmFormatError(f"not a PGM image (magic {magic!r})")
    (width, height, maxval), pos = _tokenize_header(data[2:], 3)
    pos += 2
    if width < 1 or height < 1:
        raise PgmFormatError(f"bad dimensions {width}x{height}")
    if not 0 < maxval <= 65535:
        raise PgmFormatError(f"maxval {maxval} outside (0, 65535]")
    count = width * height
    if magic == b"P2":
        tokens = data[pos:].split()[:count]
        if len(tokens) != count:
            raise PgmFormatError("truncated pixel data")
        try:
            values = np.array(tokens, dtype=np.float64)
        except ValueError as exc:
            raise PgmFormatError("non-numeric sample in ASCII raster") from exc
    else:
        pos += 1  # exactly one whitespace byte separates header from raster
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raster = data[pos : pos + count * dtype.itemsize]
        if len(raster) != count * dtype.itemsize:
            raise PgmFormatError("truncated pixel data")
        values = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    if values.min() < 0 or values.max() > maxval:
        raise PgmFormatError("sample outside [0, maxval]")
    return values.reshape(height, width)


def write_pgm(image: np.ndarray, comment: str | None = None) -> bytes:
    """Serialize a (height, width) array of gray levels as 16-bit binary P5.

    Values are clipped to [0, 65535] and rounded; samples are stored
    big-endian, most significant byte first.
    """
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("expected a 2-d image")
    height, width = image.shape
    levels = np.clip(np.rint(image), 0, 65535).astype(">u2")
    header = f"P5\n{'# ' + comment + chr(10) if comment else ''}{width} {height}\n65535\n"
    return header.encode("ascii") + levels.tobytes()
