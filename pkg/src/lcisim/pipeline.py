"""Simulated acquisition for the three camera architectures.

LCI (multiplexed single sensor): the scene is measured through the 0/1
multiplexing operator, each measurement picks up shot noise plus additive
noise of std sigma, and the image is recovered with the closed-form inverse.
PAI (pinhole array): every usable pixel is sensed directly, shot noise plus
additive noise of std rho.  LAI (lens array): identical to PAI but photon
means are boosted by the lens gain g first.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from lcisim.hadamard import SensingOperator, apply_inverse, apply_sensing
from lcisim.noise import NoiseParams, corrupt_measurements, sample_additive, sample_poisson
from lcisim.rng import RngStream
from lcisim.scene import Scene


class Architecture(str, Enum):
    LCI = "lci"
    PAI = "pai"
    LAI = "lai"


@dataclass(frozen=True)
class MeasurementVector:
    """Multiplexed measurements with their processing stage tag."""

    values: np.ndarray
    stage: str  # "clean" (y) or "acquired" (z)
    brightness: float

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class CapturedImage:
    values: np.ndarray
    architecture: Architecture
    gain_applied: float


def lci_clean_measurements(scene: Scene) -> MeasurementVector:
    """Noise-free measurement vector y = A x."""
    op = SensingOperator.create(scene.n)
    y = apply_sensing(op, scene.values)
    return MeasurementVector(values=y, stage="clean", brightness=scene.brightness)


def lci_acquire(scene: Scene, params: NoiseParams, stream: RngStream) -> MeasurementVector:
    """Noisy measurement vector z; entry 0 stays exactly at the brightness."""
    clean = lci_clean_measurements(scene)
    z = corrupt_measurements(clean.values, params, stream)
    return MeasurementVector(values=z, stage="acquired", brightness=scene.brightness)


def lci_reconstruct(measurement: MeasurementVector | np.ndarray) -> np.ndarray:
    """Image estimate from measurements via the closed-form inverse."""
    z = measurement.values if isinstance(measurement, MeasurementVector) else np.asarray(measurement)
    op = SensingOperator.create(z.size)
    return apply_inverse(op, z)


def _direct_capture(
    scene: Scene,
    params: NoiseParams,
    stream: RngStream,
    gain: float,
    architecture: Architecture,
) -> CapturedImage:
    means = scene.values * gain
    gen = stream.generator()
    if params.shot_enabled:
        values = sample_poisson(means, gen, params.poisson_approx_threshold)
    else:
        values = means.copy()
    additive = sample_additive(params.rho, scene.n, params.additive_kind, gen)
    if not params.additive_on_dark:
        # only the width*height usable entries model physical sensors
        additive[0] = 0.0
        additive[1 + scene.usable_count :] = 0.0
    values += additive
    return CapturedImage(values=values, architecture=architecture, gain_applied=gain)


def pai_capture(scene: Scene, params: NoiseParams, stream: RngStream) -> CapturedImage:
    """Direct per-pixel capture at unit gain (pinhole)."""
    return _direct_capture(scene, params, stream, 1.0, Architecture.PAI)


def lai_capture(scene: Scene, params: NoiseParams, stream: RngStream) -> CapturedImage:
    """Direct per-pixel capture with the lens gain applied to photon means."""
    return _direct_capture(scene, params, stream, params.gain, Architecture.LAI)
