"""Measurement noise: photon shot noise plus zero-mean additive sensor noise.

Shot noise is exact Poisson sampling of each photon mean (sequential search
at small means, transformed rejection at large ones, per the underlying
generator).  An optional threshold switches to a rounded normal
approximation above very large means; it is off by default because the SNR
identities under test are variance statements and demand exact sampling
variance.  Additive noise is either Gaussian with standard deviation s, or
uniform on [-s*sqrt(3), s*sqrt(3)] (same variance), or disabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from lcisim.rng import RngStream

POISSON_MEAN_CAP = 1e12


class AdditiveKind(str, Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    NONE = "none"


@dataclass(frozen=True)
class NoiseParams:
    """Noise configuration shared by all simulated architectures.

    sigma: additive std on multiplexed measurements; rho: additive std on
    direct per-pixel sensors; gain: lens light-collection factor (>= 1).
    shot_enabled=False replaces every Poisson draw by its mean (identity
    testing); additive_on_dark=True extends per-pixel additive noise to the
    dark/padding entries.
    """

    sigma: float = 0.0
    rho: float = 0.0
    additive_kind: AdditiveKind = AdditiveKind.GAUSSIAN
    gain: float = 1.0
    shot_enabled: bool = True
    additive_on_dark: bool = False
    poisson_approx_threshold: float = math.inf

    def __post_init__(self) -> None:
        if self.sigma < 0 or self.rho < 0:
            raise ValueError("noise standard deviations must be nonnegative")
        if self.gain < 1.0:
            raise ValueError("gain must be >= 1")
        if self.poisson_approx_threshold <= 0:
            raise ValueError("poisson approximation threshold must be positive")
        object.__setattr__(self, "additive_kind", AdditiveKind(self.additive_kind))


def sample_poisson(
    means: np.ndarray,
    gen: np.random.Generator,
    approx_threshold: float = math.inf,
) -> np.ndarray:
    """Poisson draws for an array of photon means, returned as float64.

    Exact for every mean not above approx_threshold; above it, draws come
    from the rounded normal approximation max(0, round(Normal(m, sqrt(m)))).
    """
    means = np.asarray(means, dtype=np.float64)
    if not np.all(np.isfinite(means)):
        raise ValueError("photon means must be finite")
    if np.any(means < 0) or np.any(means > POISSON_MEAN_CAP):
        raise ValueError(f"photon means must lie in [0, {POISSON_MEAN_CAP:g}]")
    if not np.any(means > approx_threshold):
        return gen.poisson(means).astype(np.float64)
    big = means > approx_threshold
    out = np.empty_like(means)
    out[~big] = gen.poisson(means[~big]).astype(np.float64)
    out[big] = np.maximum(0.0, np.rint(gen.normal(means[big], np.sqrt(means[big]))))
    return out


def sample_additive(
    std: float,
    size: int,
    kind: AdditiveKind,
    gen: np.random.Generator,
) -> np.ndarray:
    """Zero-mean additive noise draws with the requested std and shape."""
    if std < 0:
        raise ValueError("std must be nonnegative")
    kind = AdditiveKind(kind)
    if kind is AdditiveKind.NONE or std == 0.0:
        return np.zeros(size, dtype=np.float64)
    if kind is AdditiveKind.GAUSSIAN:
        return gen.normal(0.0, std, size)
    half_width = std * math.sqrt(3.0)
    return gen.uniform(-half_width, half_width, size)


def corrupt_measurements(y: np.ndarray, params: NoiseParams, stream: RngStream) -> np.ndarray:
    """Noisy multiplexed measurements z from clean measurements y.

    Every entry but the first gets an independent Poisson draw of its mean
    plus an additive term of std sigma; the first entry (total brightness,
    the calibration measurement) is passed through untouched.
    """
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0):
        raise ValueError("clean measurements must be nonnegative")
    gen = stream.generator()
    if params.shot_enabled:
        z = sample_poisson(y, gen, params.poisson_approx_threshold)
    else:
        z = y.copy()
    z += sample_additive(params.sigma, y.size, params.additive_kind, gen)
    z[0] = y[0]
    return z
