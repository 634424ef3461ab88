"""Scene vectors: photon-mean images laid out for the multiplexing operator.

A scene vector has power-of-two length N = 1 + width*height + padding.  Entry
0 is the reserved dark element (always exactly zero), the next width*height
entries are the usable pixels in row-major order, and the tail is zero
padding up to the next power of two.  Values are nonnegative real photon
means; total brightness is their sum.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lcisim.pgm import PgmFormatError, read_pgm
from lcisim.rng import RngStream


class SceneFormatError(ValueError):
    """Scene input file is unreadable or violates the format contract."""


def _next_power_of_two(n: int) -> int:
    return 1 << (n - 1).bit_length()


@dataclass(frozen=True)
class Scene:
    """Immutable scene: display shape plus the padded photon-mean vector."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        n = v.size
        if n < 2 or (n & (n - 1)) != 0:
            raise ValueError(f"scene length {n} is not a power of two >= 2")
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be positive")
        usable = self.width * self.height
        if 1 + usable > n:
            raise ValueError(f"{self.width}x{self.height} pixels do not fit in length {n}")
        if v[0] != 0.0:
            raise ValueError("dark element (entry 0) must be exactly zero")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("photon means must be finite and nonnegative")
        if np.any(v[1 + usable :] != 0.0):
            raise ValueError("padding entries must be exactly zero")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def usable_count(self) -> int:
        return self.width * self.height

    @property
    def usable(self) -> np.ndarray:
        return self.values[1 : 1 + self.usable_count]

    @property
    def brightness(self) -> float:
        """Total photon mean over the scene (the first measurement's value)."""
        return float(self.values.sum())

    def usable_image(self) -> np.ndarray:
        return self.usable.reshape(self.height, self.width)

    def scaled(self, factor: float) -> "Scene":
        """Same scene with every photon mean multiplied by factor > 0."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return Scene(self.width, self.height, self.values * factor)


def _pack(width: int, height: int, usable: np.ndarray) -> Scene:
    count = usable.size
    n = _next_power_of_two(1 + count)
    values = np.zeros(max(n, 2), dtype=np.float64)
    values[1 : 1 + count] = usable
    return Scene(width=width, height=height, values=values)


def synth_uniform_random(n: int, x0: float, stream: RngStream) -> Scene:
    """Uniform-random scene: round(x0) photons thrown uniformly over N-1 pixels.

    Multinomial placement conserves the total exactly, so brightness equals
    round(x0) with no rounding drift.
    """
    if n < 2 or (n & (n - 1)) != 0:
        raise ValueError(f"n must be a power of two >= 2, got {n}")
    total = int(round(x0))
    if total < 0:
        raise ValueError("x0 must be nonnegative")
    counts = stream.generator().multinomial(total, np.full(n - 1, 1.0 / (n - 1)))
    return _pack(n - 1, 1, counts.astype(np.float64))


def synth_point_source(n: int, background: float, peak: float, position: int = 0) -> Scene:
    """Flat background with one designated pixel raised by `peak`."""
    if n < 2 or (n & (n - 1)) != 0:
        raise ValueError(f"n must be a power of two >= 2, got {n}")
    if background < 0 or peak < 0:
        raise ValueError("background and peak must be nonnegative")
    if not 0 <= position < n - 1:
        raise ValueError(f"position {position} outside usable range [0, {n - 2}]")
    usable = np.full(n - 1, background, dtype=np.float64)
    usable[position] = background + peak
    return _pack(n - 1, 1, usable)


def _parse_csv_image(text: str) -> np.ndarray:
    rows: list[list[float]] = []
    try:
        for record in csv.reader(io.StringIO(text)):
            if not record or all(cell.strip() == "" for cell in record):
                continue
            rows.append([float(cell) for cell in record])
    except ValueError as exc:
        raise SceneFormatError(f"non-numeric CSV cell: {exc}") from exc
    if not rows:
        raise SceneFormatError("CSV image has no rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise SceneFormatError("CSV rows have inconsistent lengths")
    image = np.array(rows, dtype=np.float64)
    if np.any(image < 0):
        raise SceneFormatError("CSV image contains negative values")
    return image


def scene_from_image(image: np.ndarray, target_avg_photons: float) -> Scene:
    """Scale a nonnegative gray image so usable pixels average the target mean."""
    image = np.asarray(image, dtype=np.float64)
    if target_avg_photons < 0:
        raise ValueError("target average photon count must be nonnegative")
    total = float(image.sum())
    if target_avg_photons == 0:
        scaled = np.zeros_like(image)
    elif total == 0:
        raise SceneFormatError("image is all zeros; cannot scale to a positive photon target")
    else:
        scaled = image * (target_avg_photons * image.size / total)
    height, width = scaled.shape
    return _pack(width, height, scaled.reshape(-1))


def parse_scene_bytes(data: bytes, name: str, target_avg_photons: float) -> Scene:
    """Build a scene from raw PGM or CSV file content (format sniffed)."""
    if data[:2] in (b"P2", b"P5"):
        try:
            image = read_pgm(data)
        except PgmFormatError as exc:
            raise SceneFormatError(f"{name}: {exc}") from exc
    elif name.lower().endswith((".pgm", ".pnm")):
        raise SceneFormatError(f"{name}: not a PGM image")
    else:
        try:
            image = _parse_csv_image(data.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise SceneFormatError(f"{name}: neither PGM nor UTF-8 CSV") from exc
        except SceneFormatError as exc:
            raise SceneFormatError(f"{name}: {exc}") from exc
    return scene_from_image(image, target_avg_photons)


def load_image(path: str | Path, target_avg_photons: float) -> Scene:
    """Read a PGM (P2/P5) or CSV image file into a scene."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise SceneFormatError(f"cannot read {path}: {exc}") from exc
    return parse_scene_bytes(data, path.name, target_avg_photons)
